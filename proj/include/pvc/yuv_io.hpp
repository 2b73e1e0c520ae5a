#pragma once

#include <filesystem>
#include <limits>
#include <vector>

#include "pvc/frame.hpp"
#include "pvc/rng.hpp"

namespace pvc {

// Headerless planar I420, 8-bit; dimensions come from the caller. Matches the
// raw .yuv convention of the common codec test sets.
Sequence read_yuv420(const std::filesystem::path& path, int width, int height,
                     size_t max_frames = std::numeric_limits<size_t>::max());

void write_yuv420(const Sequence& seq, const std::filesystem::path& path);

// Sidecar metadata (<stem>.json next to <stem>.yuv): name, width, height,
// frame_rate. Used by the CLI to load directories of sequences.
struct SequenceMeta {
  std::string name;
  int width = 0, height = 0;
  double frame_rate = 30.0;
};

SequenceMeta read_sidecar(const std::filesystem::path& json_path);
void write_sidecar(const SequenceMeta& meta, const std::filesystem::path& json_path);
Sequence read_sequence_with_sidecar(const std::filesystem::path& yuv_path,
                                    size_t max_frames = std::numeric_limits<size_t>::max());
std::vector<Sequence> load_sequence_dir(const std::filesystem::path& dir,
                                        size_t max_frames = std::numeric_limits<size_t>::max());

// Co-located even-aligned random crop shared by `group_len` consecutive
// frames starting at `start`.
std::vector<Frame> crop_group(const Sequence& seq, size_t start, int group_len, int patch_size,
                              int off_x, int off_y);

// One group per window position; each window gets its own random even offset.
std::vector<std::vector<Frame>> extract_training_pairs(const Sequence& seq, int patch_size,
                                                       int group_len, RandomSource& rng);

}  // namespace pvc
