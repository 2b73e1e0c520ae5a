#pragma once

#include <filesystem>
#include <vector>

#include "pvc/pipeline.hpp"

namespace pvc {

// Length-prefixed packet container. Holds the latent symbols, QPs, rate
// estimates and prior digests; the priors themselves are recomputed by the
// decoder from its own reference state (the digest catches divergence).
struct StreamHeader {
  uint32_t version = 1;
  int32_t width = 0, height = 0;
  int64_t frame_count = 0;
  int32_t base_qp = 0;
  CodingMode mode = CodingMode::unified;
  int32_t refresh_period = 0;
  int32_t intra_period = -1;
  int32_t latent_channels = 0;

  CodingConfig coding_config() const {
    CodingConfig c;
    c.base_qp = base_qp;
    c.mode = mode;
    c.refresh_period = refresh_period;
    c.intra_period = intra_period;
    return c;
  }

  StreamDims dims() const { return StreamDims{width, height, frame_count}; }
};

void write_container(const std::filesystem::path& path, const StreamHeader& header,
                     const std::vector<PairPacket>& packets);

// Loaded packets carry values and digests; prior tensors stay empty.
std::pair<StreamHeader, std::vector<PairPacket>> read_container(
    const std::filesystem::path& path);

}  // namespace pvc
