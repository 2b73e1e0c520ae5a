#include "pvc/codec_model.hpp"

#include <cmath>
#include <numbers>

namespace pvc {

const char* to_string(FeatureOrigin o) {
  switch (o) {
    case FeatureOrigin::blank_adaptor: return "blank_adaptor";
    case FeatureOrigin::decoded: return "decoded";
    case FeatureOrigin::refresh: return "refresh";
    case FeatureOrigin::training_gt: return "training_gt";
    case FeatureOrigin::training_noisy: return "training_noisy";
  }
  return "?";
}

void require_codable_dims(int width, int height) {
  Frame::check_dims(width, height);
  if (width % ModelConfig::downsample_factor != 0 || height % ModelConfig::downsample_factor != 0)
    throw ShapeError("frame dimensions must be divisible by " +
                     std::to_string(ModelConfig::downsample_factor) + ", got " +
                     std::to_string(width) + "x" + std::to_string(height));
}

VarPtr CodecModel::conv_param(const std::string& name, int cout, int cin, int k, RandomSource& rng,
                              bool zero_init) {
  Tensor w(cout, cin, k * k);
  if (!zero_init) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
    for (size_t i = 0; i < w.size(); i++) w[i] = static_cast<float>(rng.normal(0.0, stddev));
  }
  auto v = make_var(std::move(w), true);
  params_.emplace_back(name + ".w", v);
  return v;
}

VarPtr CodecModel::bias_param(const std::string& name, int cout, float init) {
  auto v = make_var(Tensor::full(cout, 1, 1, init), true);
  params_.emplace_back(name + ".b", v);
  return v;
}

CodecModel::CodecModel(ModelConfig cfg, uint64_t init_seed) : cfg_(cfg), init_seed_(init_seed) {
  cfg_.validate();
  RandomSource rng(init_seed);
  const int t = cfg_.trunk_channels;
  const int w = 2 * t;  // wide trunk
  const int f = cfg_.feature_channels;
  const int l = cfg_.latent_channels;
  const int h = cfg_.head_channels;

  auto conv = [&](const std::string& name, int cout, int cin, bool zero = false,
                  float bias_init = 0.0f) {
    conv_param(name, cout, cin, 3, rng, zero);
    bias_param(name, cout, bias_init);
  };

  // Adaptor AD: pixel image (or blank) -> reference feature space.
  conv("ad_stem", t, 1);
  conv("ad_mix", t, t + 2);
  conv("ad_d1", t, t);
  conv("ad_d2", t, t);
  conv("ad_out", f, t);

  // Feature extractors FE1 (encoder context) and FE2 (decoder context).
  conv("fe1_a", f, f);
  conv("fe1_b", f, f);
  conv("fe2_a", f, f);
  conv("fe2_b", f, f);

  // Encoder E1..E3: 8x joint downsampling of the channel-concatenated pair.
  conv("enc_stem", t, 2);
  conv("enc_mix", t, t + 4);
  conv("enc_d1", w, t);
  conv("enc_res1a", w, w);
  conv("enc_res1b", w, w);
  conv("enc_d2", w, w);
  conv("enc_cond", w, w + f);
  conv("enc_res2a", w, w);
  conv("enc_res2b", w, w);
  conv("enc_latent", l, w, /*zero=*/true);

  // Entropy prior head on the encoder context; one pass, no autoregression.
  conv("pr_a", w, f);
  conv("pr_out", 2 * l, w, /*zero=*/true);
  // Raw sigma bias of 1.0 starts the prior wide enough to be stable.
  {
    VarPtr pb = parameter("pr_out.b");
    for (int c = l; c < 2 * l; c++) pb->val[c] = 1.0f;
  }

  // Decoder D1, D2 and reconstruction generators R1 (luma), R2 (chroma).
  conv("dec_in", w, l + f);
  conv("dec_res1a", w, w);
  conv("dec_res1b", w, w);
  conv("state_out", f, w);
  conv("dec_u1", w, w);
  conv("dec_u2", t, w);
  conv("dec_res2a", t, t);
  conv("dec_res2b", t, t);
  conv("rec_y_up", h, t);
  conv("rec_y_out", 2, h, false, 0.5f);
  conv("rec_uv_a", h, t);
  conv("rec_uv_out", 4, h, false, 0.5f);

  qt_first_ = QuantTable(TableSide::first_of_pair, l / 2, true);
  qt_second_ = QuantTable(TableSide::second_of_pair, l / 2, true);
  params_.emplace_back("qt_first.raw_min", qt_first_.raw_min);
  params_.emplace_back("qt_first.raw_inc", qt_first_.raw_inc);
  params_.emplace_back("qt_second.raw_min", qt_second_.raw_min);
  params_.emplace_back("qt_second.raw_inc", qt_second_.raw_inc);
}

std::vector<VarPtr> CodecModel::parameters() const {
  std::vector<VarPtr> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(p);
  return out;
}

VarPtr CodecModel::parameter(const std::string& name) const {
  for (const auto& [n, p] : params_) {
    if (n == name) return p;
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

VarPtr CodecModel::cv(Graph& g, const std::string& name, const VarPtr& x, int k, int stride,
                      int pad) const {
  return g.conv2d(x, parameter(name + ".w"), parameter(name + ".b"), k, stride, pad);
}

VarPtr CodecModel::res_block(Graph& g, const std::string& a, const std::string& b,
                             const VarPtr& x) const {
  return g.add(cv(g, b, g.leaky_relu(cv(g, a, x, 3, 1, 1)), 3, 1, 1), x);
}

VarPtr CodecModel::adaptor_forward(Graph& g, const VarPtr& y, const VarPtr& u,
                                   const VarPtr& v) const {
  VarPtr s = g.leaky_relu(cv(g, "ad_stem", y, 3, 2, 1));
  s = g.leaky_relu(cv(g, "ad_mix", g.concat_c(s, g.concat_c(u, v)), 3, 1, 1));
  s = g.leaky_relu(cv(g, "ad_d1", s, 3, 2, 1));
  s = g.leaky_relu(cv(g, "ad_d2", s, 3, 2, 1));
  return cv(g, "ad_out", s, 3, 1, 1);
}

std::pair<VarPtr, VarPtr> CodecModel::contexts_forward(Graph& g, const VarPtr& fused) const {
  VarPtr enc_ctx = res_block(g, "fe1_a", "fe1_b", fused);
  VarPtr dec_ctx = res_block(g, "fe2_a", "fe2_b", fused);
  return {enc_ctx, dec_ctx};
}

VarPtr CodecModel::encoder_forward(Graph& g, const VarPtr& y_pair, const VarPtr& uv_pair,
                                   const VarPtr& enc_ctx) const {
  VarPtr s = g.leaky_relu(cv(g, "enc_stem", y_pair, 3, 2, 1));
  s = g.leaky_relu(cv(g, "enc_mix", g.concat_c(s, uv_pair), 3, 1, 1));
  s = g.leaky_relu(cv(g, "enc_d1", s, 3, 2, 1));
  s = res_block(g, "enc_res1a", "enc_res1b", s);
  s = g.leaky_relu(cv(g, "enc_d2", s, 3, 2, 1));
  s = g.leaky_relu(cv(g, "enc_cond", g.concat_c(s, enc_ctx), 3, 1, 1));
  s = res_block(g, "enc_res2a", "enc_res2b", s);
  return cv(g, "enc_latent", s, 3, 1, 1);
}

std::pair<VarPtr, VarPtr> CodecModel::prior_forward(Graph& g, const VarPtr& enc_ctx,
                                                    const VarPtr& gains) const {
  const int l = cfg_.latent_channels;
  VarPtr hdd = g.leaky_relu(cv(g, "pr_a", enc_ctx, 3, 1, 1));
  VarPtr raw = cv(g, "pr_out", hdd, 3, 1, 1);
  VarPtr mu = g.scale_channels(g.slice_c(raw, 0, l), gains);
  VarPtr sigma = g.add_const(g.scale_channels(g.softplus(g.slice_c(raw, l, l)), gains),
                             kScaleFloor);
  return {mu, sigma};
}

CodecModel::DecodeVars CodecModel::decoder_forward(Graph& g, const VarPtr& values,
                                                   const VarPtr& gains,
                                                   const VarPtr& dec_ctx) const {
  VarPtr deq = g.scale_channels(values, g.reciprocal(gains));
  VarPtr x = g.leaky_relu(cv(g, "dec_in", g.concat_c(deq, dec_ctx), 3, 1, 1));
  x = res_block(g, "dec_res1a", "dec_res1b", x);
  VarPtr fused = cv(g, "state_out", x, 3, 1, 1);
  x = g.leaky_relu(cv(g, "dec_u1", g.upsample2x(x), 3, 1, 1));
  x = g.leaky_relu(cv(g, "dec_u2", g.upsample2x(x), 3, 1, 1));
  x = res_block(g, "dec_res2a", "dec_res2b", x);
  VarPtr yh = g.leaky_relu(cv(g, "rec_y_up", g.upsample2x(x), 3, 1, 1));
  VarPtr y_pair = g.clamp01(cv(g, "rec_y_out", yh, 3, 1, 1));
  VarPtr uh = g.leaky_relu(cv(g, "rec_uv_a", x, 3, 1, 1));
  VarPtr uv_pair = g.clamp01(cv(g, "rec_uv_out", uh, 3, 1, 1));
  return {y_pair, uv_pair, fused};
}

// ---- spec-level operations ----

namespace {

VarPtr input_var(Graph&, const Tensor& t) { return make_var(t, false); }

void check_frame_dims(const NormalizedFrame& f) { require_codable_dims(f.width(), f.height()); }

}  // namespace

VarPtr pack_luma_pair(Graph& g, const NormalizedFrame& a, const NormalizedFrame& b) {
  return g.concat_c(make_var(a.y), make_var(b.y));
}

VarPtr pack_chroma_pair(Graph& g, const NormalizedFrame& a, const NormalizedFrame& b) {
  return g.concat_c(g.concat_c(make_var(a.u), make_var(a.v)),
                    g.concat_c(make_var(b.u), make_var(b.v)));
}

FeatureState init_reference_blank(const CodecModel& model, int height, int width) {
  require_codable_dims(width, height);
  Graph g(false);
  VarPtr y = input_var(g, Tensor(1, height, width));
  VarPtr u = input_var(g, Tensor(1, height / 2, width / 2));
  VarPtr v = input_var(g, Tensor(1, height / 2, width / 2));
  VarPtr fused = model.adaptor_forward(g, y, u, v);
  return FeatureState{fused->val, FeatureOrigin::blank_adaptor};
}

FeatureState make_reference_from_frame(const CodecModel& model, const NormalizedFrame& frame,
                                       FeatureOrigin origin) {
  check_frame_dims(frame);
  Graph g(false);
  VarPtr fused =
      model.adaptor_forward(g, make_var(frame.y), make_var(frame.u), make_var(frame.v));
  return FeatureState{fused->val, origin};
}

ContextPair extract_contexts(const CodecModel& model, const FeatureState& state) {
  if (!state.fused.all_finite()) throw NumericError("reference feature state is not finite");
  Graph g(false);
  auto [enc_ctx, dec_ctx] = model.contexts_forward(g, make_var(state.fused));
  return ContextPair{enc_ctx->val, dec_ctx->val};
}

LatentCode encode_pair(const CodecModel& model, const NormalizedFrame& x_t,
                       const NormalizedFrame& x_t1, const ContextPair& ctx, const QpPair& qp) {
  check_frame_dims(x_t);
  if (x_t.width() != x_t1.width() || x_t.height() != x_t1.height())
    throw ShapeError("encode_pair: the two frames must share dimensions");
  Graph g(false);
  std::vector<float> gains = lookup_pair_gains(model.table_first(), model.table_second(), qp);
  Tensor gt(static_cast<int>(gains.size()), 1, 1);
  std::copy(gains.begin(), gains.end(), gt.data());
  VarPtr gv = make_var(std::move(gt));

  VarPtr enc_ctx = make_var(ctx.enc_ctx);
  VarPtr pre = model.encoder_forward(g, pack_luma_pair(g, x_t, x_t1),
                                     pack_chroma_pair(g, x_t, x_t1), enc_ctx);
  VarPtr q = g.scale_channels(pre, gv);
  VarPtr values = g.round_ste(q);
  auto [mu, sigma] = model.prior_forward(g, enc_ctx, gv);
  return LatentCode{values->val, mu->val, sigma->val};
}

RateEstimate estimate_rate(const LatentCode& latent, double p_floor) {
  if (!latent.prior_mean.all_finite() || !latent.prior_scale.all_finite())
    throw NumericError("estimate_rate: non-finite prior");
  for (size_t i = 0; i < latent.prior_scale.size(); i++) {
    if (latent.prior_scale[i] < kScaleFloor)
      throw NumericError("estimate_rate: prior scale below floor");
  }
  Graph g(false);
  VarPtr bits = g.gaussian_bits(make_var(latent.values), make_var(latent.prior_mean),
                                make_var(latent.prior_scale), p_floor);
  const double total = bits->val[0];
  return RateEstimate{total, {total / 2.0, total / 2.0}};
}

DecodedPair decode_pair(const CodecModel& model, const LatentCode& latent, const ContextPair& ctx,
                        const QpPair& qp) {
  if (latent.values.h() != ctx.dec_ctx.h() || latent.values.w() != ctx.dec_ctx.w())
    throw ShapeError("decode_pair: latent grid " + latent.values.shape_str() +
                     " does not match context " + ctx.dec_ctx.shape_str());
  if (latent.values.c() != model.config().latent_channels)
    throw ShapeError("decode_pair: latent channel mismatch");
  Graph g(false);
  std::vector<float> gains = lookup_pair_gains(model.table_first(), model.table_second(), qp);
  Tensor gt(static_cast<int>(gains.size()), 1, 1);
  std::copy(gains.begin(), gains.end(), gt.data());

  auto dec = model.decoder_forward(g, make_var(latent.values), make_var(std::move(gt)),
                                   make_var(ctx.dec_ctx));
  const int hh = dec.y_pair->val.h(), ww = dec.y_pair->val.w();

  DecodedPair out;
  out.first.y = Tensor(1, hh, ww);
  out.second.y = Tensor(1, hh, ww);
  const size_t yplane = dec.y_pair->val.plane();
  std::copy_n(dec.y_pair->val.data(), yplane, out.first.y.data());
  std::copy_n(dec.y_pair->val.data() + yplane, yplane, out.second.y.data());

  const size_t cplane = dec.uv_pair->val.plane();
  auto chroma = [&](int idx) {
    Tensor t(1, hh / 2, ww / 2);
    std::copy_n(dec.uv_pair->val.data() + idx * cplane, cplane, t.data());
    return t;
  };
  out.first.u = chroma(0);
  out.first.v = chroma(1);
  out.second.u = chroma(2);
  out.second.v = chroma(3);
  out.state = FeatureState{dec.fused->val, FeatureOrigin::decoded};
  return out;
}

Tensor quantize_ste_values(const Tensor& t) {
  if (!t.all_finite()) throw NumericError("quantize_ste: non-finite input");
  Graph g(false);
  return g.round_ste(make_var(t))->val;
}

}  // namespace pvc
