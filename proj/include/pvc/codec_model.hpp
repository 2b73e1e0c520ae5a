#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pvc/frame.hpp"
#include "pvc/graph.hpp"
#include "pvc/quant.hpp"

namespace pvc {

inline constexpr float kScaleFloor = 0.11f;
inline constexpr double kProbFloor = 9.313225746154785e-10;  // 2^-30

struct ModelConfig {
  int latent_channels = 64;   // joint latent for the two-frame pair
  int feature_channels = 48;  // reference feature width
  int trunk_channels = 32;    // conv trunk width
  int head_channels = 16;     // reconstruction head width
  static constexpr int downsample_factor = 8;  // three stride-2 stages

  void validate() const {
    if (latent_channels <= 0 || latent_channels % 2 != 0)
      throw ConfigError("latent_channels must be positive and even");
    if (feature_channels <= 0 || trunk_channels <= 0 || head_channels <= 0)
      throw ConfigError("channel widths must be positive");
  }

  bool operator==(const ModelConfig&) const = default;
};

enum class FeatureOrigin : uint8_t { blank_adaptor, decoded, refresh, training_gt, training_noisy };

const char* to_string(FeatureOrigin o);

// Fused reference features carried between pairs, at (F, H/8, W/8).
struct FeatureState {
  Tensor fused;
  FeatureOrigin origin = FeatureOrigin::blank_adaptor;
};

// Encoder context C^e (from FE_1) and decoder context C (from FE_2).
struct ContextPair {
  Tensor enc_ctx;
  Tensor dec_ctx;
};

// One joint latent per frame pair: integer-valued symbols plus the Gaussian
// prior predicted from the encoder context.
struct LatentCode {
  Tensor values;       // (L, H/8, W/8), integers stored as floats
  Tensor prior_mean;   // same shape
  Tensor prior_scale;  // same shape, >= kScaleFloor
};

struct RateEstimate {
  double total_bits = 0.0;
  std::array<double, 2> per_frame_bits{0.0, 0.0};  // exact halves of total_bits
};

struct DecodedPair {
  NormalizedFrame first, second;
  FeatureState state;
};

// The single unified intra/inter model. One parameter set serves every frame;
// the first pair of a sequence only differs in that its reference features
// come from the blank-signal adaptor.
class CodecModel {
public:
  CodecModel(ModelConfig cfg, uint64_t init_seed);

  CodecModel(const CodecModel&) = delete;
  CodecModel& operator=(const CodecModel&) = delete;
  CodecModel(CodecModel&&) = default;
  CodecModel& operator=(CodecModel&&) = default;

  const ModelConfig& config() const { return cfg_; }
  uint64_t init_seed() const { return init_seed_; }

  const std::vector<std::pair<std::string, VarPtr>>& named_parameters() const { return params_; }
  std::vector<VarPtr> parameters() const;
  VarPtr parameter(const std::string& name) const;

  const QuantTable& table_first() const { return qt_first_; }
  const QuantTable& table_second() const { return qt_second_; }

  // Graph-level forwards. Training and inference share these; inference runs
  // them on a non-recording graph.
  VarPtr adaptor_forward(Graph& g, const VarPtr& y, const VarPtr& u, const VarPtr& v) const;
  std::pair<VarPtr, VarPtr> contexts_forward(Graph& g, const VarPtr& fused) const;
  VarPtr encoder_forward(Graph& g, const VarPtr& y_pair, const VarPtr& uv_pair,
                         const VarPtr& enc_ctx) const;
  std::pair<VarPtr, VarPtr> prior_forward(Graph& g, const VarPtr& enc_ctx,
                                          const VarPtr& gains) const;
  struct DecodeVars {
    VarPtr y_pair;   // (2, H, W)
    VarPtr uv_pair;  // (4, H/2, W/2)
    VarPtr fused;    // (F, H/8, W/8)
  };
  DecodeVars decoder_forward(Graph& g, const VarPtr& values, const VarPtr& gains,
                             const VarPtr& dec_ctx) const;

private:
  VarPtr conv_param(const std::string& name, int cout, int cin, int k, RandomSource& rng,
                    bool zero_init = false);
  VarPtr bias_param(const std::string& name, int cout, float init = 0.0f);
  VarPtr cv(Graph& g, const std::string& name, const VarPtr& x, int k, int stride, int pad) const;
  VarPtr res_block(Graph& g, const std::string& a, const std::string& b, const VarPtr& x) const;

  ModelConfig cfg_;
  uint64_t init_seed_ = 0;
  std::vector<std::pair<std::string, VarPtr>> params_;
  QuantTable qt_first_, qt_second_;
};

// Spec-level operations (pure given model parameters).

// Runs the adaptor on an all-zero image of the given size.
FeatureState init_reference_blank(const CodecModel& model, int height, int width);

FeatureState make_reference_from_frame(const CodecModel& model, const NormalizedFrame& frame,
                                       FeatureOrigin origin);

ContextPair extract_contexts(const CodecModel& model, const FeatureState& state);

LatentCode encode_pair(const CodecModel& model, const NormalizedFrame& x_t,
                       const NormalizedFrame& x_t1, const ContextPair& ctx, const QpPair& qp);

// total_bits = sum of -log2(Phi((v-mu+0.5)/sigma) - Phi((v-mu-0.5)/sigma)),
// probabilities floored at p_floor; the two frames share the total equally.
RateEstimate estimate_rate(const LatentCode& latent, double p_floor = kProbFloor);

DecodedPair decode_pair(const CodecModel& model, const LatentCode& latent, const ContextPair& ctx,
                        const QpPair& qp);

// Forward of the straight-through quantizer (round half away from zero).
Tensor quantize_ste_values(const Tensor& t);

// Input packing shared with the trainer.
VarPtr pack_luma_pair(Graph& g, const NormalizedFrame& a, const NormalizedFrame& b);
VarPtr pack_chroma_pair(Graph& g, const NormalizedFrame& a, const NormalizedFrame& b);

void require_codable_dims(int width, int height);

}  // namespace pvc
