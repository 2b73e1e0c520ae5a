#pragma once

#include <optional>
#include <vector>

#include "pvc/codec_model.hpp"
#include "pvc/metrics.hpp"

namespace pvc {

enum class CodingMode : uint8_t { unified, divided_refresh };

const char* to_string(CodingMode m);
CodingMode coding_mode_from_string(const std::string& s);

struct CodingConfig {
  int base_qp = 32;
  int intra_period = -1;    // -1: only the sequence start is reference-free
  int refresh_period = 0;   // 0: off; >0 only in divided_refresh mode
  CodingMode mode = CodingMode::unified;
  std::array<double, 3> psnr_weights{6.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0};

  void validate() const {
    if (base_qp < 0 || base_qp >= kQpLevels)
      throw ConfigError("base_qp out of [0,63]: " + std::to_string(base_qp));
    if (intra_period == 0 || intra_period < -1)
      throw ConfigError("intra_period must be -1 or positive");
    if (refresh_period < 0) throw ConfigError("refresh_period must be >= 0");
    if (mode == CodingMode::unified && refresh_period != 0)
      throw ConfigError("unified mode uses no refresh mechanism; refresh_period must be 0");
    if (mode == CodingMode::divided_refresh && refresh_period == 0)
      throw ConfigError("divided_refresh mode requires refresh_period > 0");
  }

  QpSchedule schedule() const { return QpSchedule{base_qp, {0, 8, 0, 4, 0, 4, 0, 4}}; }
};

struct PairPacket {
  int pair_index = 0;
  LatentCode latent;
  QpPair qp;
  RateEstimate rate;
  uint64_t prior_digest = 0;
};

uint64_t digest_prior(const Tensor& mean, const Tensor& scale);

struct SequenceReport {
  std::vector<double> per_frame_bits;
  std::vector<double> per_frame_psnr;  // combined YUV PSNR, dB
  std::vector<PlanePsnr> per_frame_components;
  Sequence reconstructions;
  double total_bpp = 0.0;

  double mean_psnr() const;
  double total_bits() const;  // summed pairwise, matching packet totals exactly
};

// Streaming two-frame encoder. Holds at most one unemitted frame (one-frame
// latency); the reference feature state advances with every decoded pair.
class PairStreamer {
public:
  PairStreamer(const CodecModel& model, const CodingConfig& cfg, int width, int height);

  // First call of a pair buffers the frame and yields nothing; the second
  // encodes both frames and advances the reference state.
  std::optional<PairPacket> push_frame(const Frame& frame);

  // Completes a dangling odd frame by duplicating it. Idempotent.
  std::optional<PairPacket> flush();

  int pending_count() const { return pending_ ? 1 : 0; }
  int emitted_pairs() const { return emitted_pairs_; }
  bool last_pair_was_flush_fill() const { return last_was_flush_; }

  // Reconstructions of the most recent packet.
  const Frame& last_recon_first() const { return last_recon_first_; }
  const Frame& last_recon_second() const { return last_recon_second_; }

  const FeatureState& state() const { return state_; }
  const CodecModel* model() const { return model_; }

  // Origin of the reference state consumed by each emitted pair.
  const std::vector<FeatureOrigin>& origin_audit() const { return origin_audit_; }

private:
  PairPacket encode_one_pair(const Frame& a, const Frame& b);

  const CodecModel* model_;
  CodingConfig cfg_;
  int width_, height_;
  std::optional<Frame> pending_;
  FeatureState state_;
  int emitted_pairs_ = 0;
  bool last_was_flush_ = false;
  Frame last_recon_first_, last_recon_second_;
  std::vector<FeatureOrigin> origin_audit_;
};

// Rebuilds reference features from a reconstructed picture alone, discarding
// all accumulated state (the divided-baseline refresh path).
FeatureState refresh_reference(const CodecModel& model, const Frame& reconstructed_frame);

std::pair<std::vector<PairPacket>, SequenceReport> encode_sequence(const CodecModel& model,
                                                                   const Sequence& seq,
                                                                   const CodingConfig& cfg);

struct StreamDims {
  int width = 0;
  int height = 0;
  int64_t frame_count = 0;
};

// Replays the decode path. Reconstruction bytes match the encoder side
// exactly. With verify_digests, each packet's recomputed prior digest must
// match the stored one.
Sequence decode_sequence(const CodecModel& model, const std::vector<PairPacket>& packets,
                         const StreamDims& dims, const CodingConfig& cfg,
                         bool verify_digests = true);

// True when pair `pair_index` (covering frames 2p and 2p+1) must rebuild its
// reference before encoding: some positive multiple of `period` falls inside
// the pair. Pair 0 is excluded (it always starts from the blank adaptor).
bool pair_crosses_period(int pair_index, int period);

}  // namespace pvc
