#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pvc/codec_model.hpp"

namespace pvc {

// Optional training-resume section: Adam moments (in parameter order), the
// sampler RNG, and the step cursor. Inference loads ignore it.
struct TrainerState {
  int64_t adam_t = 0;
  int64_t next_step = 0;
  double running_loss = 0.0;
  std::string rng_state;
  std::vector<Tensor> m, v;
};

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const CodecModel& model, const std::filesystem::path& path, int64_t step,
                     const TrainerState* trainer = nullptr);

// Reconstructs the model from the stored config and parameter blobs.
// Refuses files whose version differs from kCheckpointVersion.
CodecModel load_checkpoint(const std::filesystem::path& path, int64_t* step_out = nullptr,
                           std::optional<TrainerState>* trainer_out = nullptr);

uint64_t config_digest(const ModelConfig& cfg);

}  // namespace pvc
