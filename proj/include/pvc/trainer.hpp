#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "pvc/checkpoint.hpp"
#include "pvc/codec_model.hpp"
#include "pvc/pipeline.hpp"

namespace pvc {

// Initial-reference candidates for the first pair of a training group: blank
// signal, the ground-truth previous frame, or a noise-corrupted version.
enum class ReferenceMode : uint8_t { blank, gt_previous, noisy_gt };

const char* to_string(ReferenceMode m);

struct TrainConfig {
  int group_len = 8;
  std::array<int, 8> qp_bias{0, 8, 0, 4, 0, 4, 0, 4};
  std::array<double, 8> hierarchical_weights{0.5, 1.2, 0.5, 0.9, 0.5, 0.9, 0.5, 0.9};
  std::array<double, 3> yuv_loss_weights{6.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0};
  std::array<double, 2> noise_sigma_range{0.01, 0.10};
  std::array<double, 3> reference_mode_probs{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double lambda_min = 0.4;
  double lambda_max = 768.0;
  int steps = 2000;
  int batch = 1;
  int patch_size = 64;
  double lr = 1e-3;
  std::string lr_schedule = "constant";  // constant | cosine
  double lr_final = 1e-4;
  int fixed_base_qp = -1;  // -1: uniform over [0,63] per step
  int checkpoint_interval = 1000;
  uint64_t seed = 1;
  // Optional second stage chaining two 8-frame groups (16 frames) so the
  // reference state crosses a group boundary. Off by default.
  int long_stage_steps = 0;

  void validate() const;
  double lambda_of_qp(int qp) const;  // geometric ladder, strictly increasing
  double lr_at(int64_t step, int64_t total_steps) const;
  QpSchedule schedule(int base_qp) const { return QpSchedule{base_qp, qp_bias}; }
};

ReferenceMode sample_reference_mode(RandomSource& rng, const std::array<double, 3>& probs);
int sample_base_qp(RandomSource& rng, const TrainConfig& cfg);

// No-grad construction of the initial reference for a group. `prev_frame`
// is required for the two non-blank modes. noisy_gt draws one sigma from
// sigma_range and corrupts the image before the adaptor.
FeatureState build_initial_reference(const CodecModel& model, ReferenceMode mode,
                                     const NormalizedFrame* prev_frame, RandomSource& rng,
                                     const std::array<double, 2>& sigma_range,
                                     int height, int width);

// Graph version used inside the loss so the adaptor trains through it.
VarPtr initial_reference_var(Graph& g, const CodecModel& model, ReferenceMode mode,
                             const NormalizedFrame* prev_frame, RandomSource& rng,
                             const std::array<double, 2>& sigma_range, int height, int width);

struct GroupDiagnostics {
  std::vector<int> qp;                // per frame
  std::vector<double> weight;         // w_i
  std::vector<double> lambda;         // lambda(qp_i)
  std::vector<double> distortion;     // D_i, YUV-weighted MSE
  std::vector<double> rate_bpp;       // R_i, half-share bits per pixel
  double loss = 0.0;
  double rate_term = 0.0;        // sum_i w_i * R_i
  double distortion_term = 0.0;  // sum_i w_i * lambda_i * D_i
};

struct GroupLossResult {
  VarPtr loss;
  GroupDiagnostics diag;
  VarPtr final_state;
};

// RD terms of one jointly coded pair; shared by group_loss, the long stage
// and tests.
struct PairTerms {
  VarPtr bits;      // scalar, total pair bits
  VarPtr d_first;   // scalar, weighted YUV MSE of the first frame
  VarPtr d_second;
  VarPtr new_state;
};

PairTerms pair_rd_terms(Graph& g, const CodecModel& model, const NormalizedFrame& a,
                        const NormalizedFrame& b, const VarPtr& state, const QpPair& qp,
                        const std::array<double, 3>& yuv_weights);

// Cascaded loss over 8 frames: 4 pairs encoded sequentially with the
// reference state flowing between pairs inside the graph, so gradients cross
// pair boundaries. loss = sum_i w_i * (lambda(qp_i) * D_i + R_i).
GroupLossResult group_loss(Graph& g, const CodecModel& model,
                           const std::vector<NormalizedFrame>& frames, int base_qp,
                           ReferenceMode mode, const NormalizedFrame* prev_frame,
                           RandomSource& rng, const TrainConfig& cfg);

// Same cascade for any even frame count; the hierarchical weights and QP
// bias repeat with period 8 (used by the optional long stage).
GroupLossResult cascade_group_loss(Graph& g, const CodecModel& model,
                                   const std::vector<NormalizedFrame>& frames, int base_qp,
                                   ReferenceMode mode, const NormalizedFrame* prev_frame,
                                   RandomSource& rng, const TrainConfig& cfg);

struct TrainLogRow {
  int64_t step = 0;
  double loss = 0.0, rate_term = 0.0, distortion_term = 0.0;
  int qp = 0;
  ReferenceMode mode = ReferenceMode::blank;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  double final_loss = 0.0;  // window-100 mean at the last step
  std::vector<TrainLogRow> log;
};

// Multi-rate training: each step samples a base QP, a group window with a
// co-located crop, and a reference mode. Checkpoints carry optimizer and RNG
// state so a resumed run reproduces the original trajectory exactly.
TrainResult train(CodecModel& model, const std::vector<Sequence>& dataset, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress = nullptr,
                  const TrainerState* resume = nullptr);

void write_train_log_csv(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

}  // namespace pvc
