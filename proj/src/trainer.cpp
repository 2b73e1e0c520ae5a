#include "pvc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <ostream>

#include "pvc/adam.hpp"
#include "pvc/csv.hpp"
#include "pvc/yuv_io.hpp"

namespace pvc {

const char* to_string(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::blank: return "blank";
    case ReferenceMode::gt_previous: return "gt_previous";
    case ReferenceMode::noisy_gt: return "noisy_gt";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (group_len != 8) throw ConfigError("group_len must be 8");
  for (int b : qp_bias)
    if (b < 0) throw ConfigError("qp_bias entries must be >= 0");
  double wsum = 0.0;
  for (double w : hierarchical_weights) {
    if (w <= 0.0) throw ConfigError("hierarchical_weights must be positive");
    wsum += w;
  }
  double ysum = 0.0;
  for (double w : yuv_loss_weights) {
    if (w <= 0.0) throw ConfigError("yuv_loss_weights must be positive");
    ysum += w;
  }
  if (std::fabs(ysum - 1.0) > 1e-9) throw ConfigError("yuv_loss_weights must sum to 1");
  double psum = 0.0;
  for (double p : reference_mode_probs) {
    if (p < 0.0) throw ConfigError("reference_mode_probs must be >= 0");
    psum += p;
  }
  if (std::fabs(psum - 1.0) > 1e-9) throw ConfigError("reference_mode_probs must sum to 1");
  if (!(noise_sigma_range[0] >= 0.0) || !(noise_sigma_range[1] >= noise_sigma_range[0]))
    throw ConfigError("noise_sigma_range must satisfy 0 <= lo <= hi");
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min))
    throw ConfigError("lambda ladder needs 0 < lambda_min < lambda_max");
  if (steps < 1 || batch < 1) throw ConfigError("steps and batch must be >= 1");
  if (patch_size < 8 || patch_size % 8 != 0)
    throw ConfigError("patch_size must be a positive multiple of 8");
  if (fixed_base_qp < -1 || fixed_base_qp >= kQpLevels)
    throw ConfigError("fixed_base_qp must be -1 or in [0,63]");
  if (lr_schedule != "constant" && lr_schedule != "cosine")
    throw ConfigError("lr_schedule must be constant or cosine");
  if (lr <= 0.0 || lr_final <= 0.0) throw ConfigError("learning rates must be positive");
  if (long_stage_steps < 0) throw ConfigError("long_stage_steps must be >= 0");
}

double TrainConfig::lambda_of_qp(int qp) const {
  if (qp < 0 || qp >= kQpLevels) throw ConfigError("qp out of [0,63]");
  return lambda_min * std::pow(lambda_max / lambda_min, static_cast<double>(qp) / 63.0);
}

double TrainConfig::lr_at(int64_t step, int64_t total_steps) const {
  if (lr_schedule == "constant" || total_steps <= 1) return lr;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return lr_final + 0.5 * (lr - lr_final) * (1.0 + std::cos(t * std::numbers::pi));
}

ReferenceMode sample_reference_mode(RandomSource& rng, const std::array<double, 3>& probs) {
  double sum = probs[0] + probs[1] + probs[2];
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("reference mode probabilities must sum to 1");
  return static_cast<ReferenceMode>(rng.categorical(probs.data(), 3));
}

int sample_base_qp(RandomSource& rng, const TrainConfig& cfg) {
  if (cfg.fixed_base_qp >= 0) return cfg.fixed_base_qp;
  return static_cast<int>(rng.uniform_int(0, kQpLevels - 1));
}

namespace {

NormalizedFrame corrupt_frame(const NormalizedFrame& src, RandomSource& rng, double sigma) {
  NormalizedFrame out = src;
  auto corrupt = [&](Tensor& t) {
    for (size_t i = 0; i < t.size(); i++) {
      float v = t[i] + static_cast<float>(rng.normal(0.0, sigma));
      t[i] = std::clamp(v, 0.0f, 1.0f);
    }
  };
  corrupt(out.y);
  corrupt(out.u);
  corrupt(out.v);
  return out;
}

}  // namespace

VarPtr initial_reference_var(Graph& g, const CodecModel& model, ReferenceMode mode,
                             const NormalizedFrame* prev_frame, RandomSource& rng,
                             const std::array<double, 2>& sigma_range, int height, int width) {
  require_codable_dims(width, height);
  if (mode != ReferenceMode::blank && prev_frame == nullptr)
    throw ConfigError(std::string("reference mode ") + to_string(mode) +
                      " requires a previous frame");
  switch (mode) {
    case ReferenceMode::blank: {
      VarPtr y = make_var(Tensor(1, height, width));
      VarPtr u = make_var(Tensor(1, height / 2, width / 2));
      VarPtr v = make_var(Tensor(1, height / 2, width / 2));
      return model.adaptor_forward(g, y, u, v);
    }
    case ReferenceMode::gt_previous:
      return model.adaptor_forward(g, make_var(prev_frame->y), make_var(prev_frame->u),
                                   make_var(prev_frame->v));
    case ReferenceMode::noisy_gt: {
      const double sigma = rng.uniform(sigma_range[0], sigma_range[1]);
      NormalizedFrame noisy = corrupt_frame(*prev_frame, rng, sigma);
      return model.adaptor_forward(g, make_var(noisy.y), make_var(noisy.u), make_var(noisy.v));
    }
  }
  throw ConfigError("bad reference mode");
}

FeatureState build_initial_reference(const CodecModel& model, ReferenceMode mode,
                                     const NormalizedFrame* prev_frame, RandomSource& rng,
                                     const std::array<double, 2>& sigma_range, int height,
                                     int width) {
  Graph g(false);
  VarPtr fused = initial_reference_var(g, model, mode, prev_frame, rng, sigma_range, height,
                                       width);
  FeatureOrigin origin = mode == ReferenceMode::blank ? FeatureOrigin::blank_adaptor
                         : mode == ReferenceMode::gt_previous ? FeatureOrigin::training_gt
                                                              : FeatureOrigin::training_noisy;
  return FeatureState{fused->val, origin};
}

PairTerms pair_rd_terms(Graph& g, const CodecModel& model, const NormalizedFrame& a,
                        const NormalizedFrame& b, const VarPtr& state, const QpPair& qp,
                        const std::array<double, 3>& yuv_weights) {
  auto [enc_ctx, dec_ctx] = model.contexts_forward(g, state);
  VarPtr gains = pair_gains_var(g, model.table_first(), model.table_second(), qp);
  VarPtr pre = model.encoder_forward(g, pack_luma_pair(g, a, b), pack_chroma_pair(g, a, b),
                                     enc_ctx);
  VarPtr values = g.round_ste(g.scale_channels(pre, gains));
  auto [mu, sigma] = model.prior_forward(g, enc_ctx, gains);
  VarPtr bits = g.gaussian_bits(values, mu, sigma, kProbFloor);
  auto dec = model.decoder_forward(g, values, gains, dec_ctx);

  auto weighted_mse = [&](const VarPtr& y_hat, const VarPtr& uv_hat, int uv_from,
                          const NormalizedFrame& ref) {
    VarPtr my = g.mse(y_hat, make_var(ref.y));
    VarPtr mu_ = g.mse(g.slice_c(uv_hat, uv_from, 1), make_var(ref.u));
    VarPtr mv = g.mse(g.slice_c(uv_hat, uv_from + 1, 1), make_var(ref.v));
    return g.affine_sum({{yuv_weights[0], my}, {yuv_weights[1], mu_}, {yuv_weights[2], mv}});
  };

  PairTerms t;
  t.bits = bits;
  t.d_first = weighted_mse(g.slice_c(dec.y_pair, 0, 1), dec.uv_pair, 0, a);
  t.d_second = weighted_mse(g.slice_c(dec.y_pair, 1, 1), dec.uv_pair, 2, b);
  t.new_state = dec.fused;
  return t;
}

namespace {

// Cascade over an even number of frames; weights and QP bias repeat with
// period 8. Returns the loss terms and final state.
struct CascadeResult {
  VarPtr loss;
  GroupDiagnostics diag;
  VarPtr final_state;
};

CascadeResult run_cascade(Graph& g, const CodecModel& model,
                          const std::vector<NormalizedFrame>& frames, int base_qp,
                          VarPtr state, const TrainConfig& cfg) {
  const int n = static_cast<int>(frames.size());
  const int width = frames[0].width(), height = frames[0].height();
  const double pixels = static_cast<double>(width) * height;
  const QpSchedule sched = cfg.schedule(base_qp);

  std::vector<std::pair<double, VarPtr>> terms;
  CascadeResult res;
  res.diag.qp.resize(n);
  res.diag.weight.resize(n);
  res.diag.lambda.resize(n);
  res.diag.distortion.resize(n);
  res.diag.rate_bpp.resize(n);

  for (int p = 0; p < n / 2; p++) {
    const int i0 = 2 * p, i1 = 2 * p + 1;
    const QpPair qp = qp_pair_for(sched, p);
    PairTerms pt = pair_rd_terms(g, model, frames[i0], frames[i1], state, qp,
                                 cfg.yuv_loss_weights);
    state = pt.new_state;

    const double w0 = cfg.hierarchical_weights[i0 % 8];
    const double w1 = cfg.hierarchical_weights[i1 % 8];
    const double l0 = cfg.lambda_of_qp(qp.qp_first);
    const double l1 = cfg.lambda_of_qp(qp.qp_second);
    terms.push_back({w0 * l0, pt.d_first});
    terms.push_back({w1 * l1, pt.d_second});
    // R_i is the frame's half share of the pair bits, per pixel.
    terms.push_back({(w0 + w1) * 0.5 / pixels, pt.bits});

    const double bits_v = pt.bits->val[0];
    res.diag.qp[i0] = qp.qp_first;
    res.diag.qp[i1] = qp.qp_second;
    res.diag.weight[i0] = w0;
    res.diag.weight[i1] = w1;
    res.diag.lambda[i0] = l0;
    res.diag.lambda[i1] = l1;
    res.diag.distortion[i0] = pt.d_first->val[0];
    res.diag.distortion[i1] = pt.d_second->val[0];
    res.diag.rate_bpp[i0] = bits_v * 0.5 / pixels;
    res.diag.rate_bpp[i1] = bits_v * 0.5 / pixels;
  }

  res.loss = g.affine_sum(terms);
  res.final_state = state;
  res.diag.loss = res.loss->val[0];
  for (int i = 0; i < n; i++) {
    res.diag.rate_term += res.diag.weight[i] * res.diag.rate_bpp[i];
    res.diag.distortion_term += res.diag.weight[i] * res.diag.lambda[i] * res.diag.distortion[i];
  }
  return res;
}

}  // namespace

GroupLossResult cascade_group_loss(Graph& g, const CodecModel& model,
                                   const std::vector<NormalizedFrame>& frames, int base_qp,
                                   ReferenceMode mode, const NormalizedFrame* prev_frame,
                                   RandomSource& rng, const TrainConfig& cfg) {
  if (frames.size() < 2 || frames.size() % 2 != 0)
    throw ConfigError("cascade needs an even number of frames");
  const int width = frames[0].width(), height = frames[0].height();
  for (const auto& f : frames) {
    if (f.width() != width || f.height() != height)
      throw ShapeError("group_loss: frames disagree on dimensions");
  }
  require_codable_dims(width, height);

  VarPtr state = initial_reference_var(g, model, mode, prev_frame, rng, cfg.noise_sigma_range,
                                       height, width);
  CascadeResult res = run_cascade(g, model, frames, base_qp, state, cfg);
  return GroupLossResult{res.loss, std::move(res.diag), res.final_state};
}

GroupLossResult group_loss(Graph& g, const CodecModel& model,
                           const std::vector<NormalizedFrame>& frames, int base_qp,
                           ReferenceMode mode, const NormalizedFrame* prev_frame,
                           RandomSource& rng, const TrainConfig& cfg) {
  if (static_cast<int>(frames.size()) != cfg.group_len)
    throw ConfigError("group_loss expects " + std::to_string(cfg.group_len) + " frames, got " +
                      std::to_string(frames.size()));
  return cascade_group_loss(g, model, frames, base_qp, mode, prev_frame, rng, cfg);
}

namespace {

struct SampledGroup {
  std::vector<NormalizedFrame> frames;
  NormalizedFrame prev;
  bool has_prev = false;
  std::string id;  // diagnostics: sequence/window/crop
};

SampledGroup sample_group(const std::vector<Sequence>& dataset, int frames_needed,
                          const TrainConfig& cfg, RandomSource& rng) {
  const size_t si = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(dataset.size()) - 1));
  const Sequence& seq = dataset[si];
  const int len = static_cast<int>(seq.size());
  // Windows start at 1 where possible so a true previous frame exists for
  // the gt/noisy reference modes.
  size_t start = 0;
  if (len > frames_needed) start = static_cast<size_t>(rng.uniform_int(1, len - frames_needed));
  const int max_off_x = seq.width() - cfg.patch_size;
  const int max_off_y = seq.height() - cfg.patch_size;
  const int off_x = 2 * static_cast<int>(rng.uniform_int(0, max_off_x / 2));
  const int off_y = 2 * static_cast<int>(rng.uniform_int(0, max_off_y / 2));

  const size_t crop_start = start > 0 ? start - 1 : start;
  const int crop_len = frames_needed + (start > 0 ? 1 : 0);
  std::vector<Frame> cropped = crop_group(seq, crop_start, crop_len, cfg.patch_size, off_x, off_y);

  SampledGroup out;
  out.id = seq.name + "[" + std::to_string(start) + "+" + std::to_string(frames_needed) + "]@(" +
           std::to_string(off_x) + "," + std::to_string(off_y) + ")";
  size_t base = 0;
  if (start > 0) {
    out.prev = normalize(cropped[0]);
    out.has_prev = true;
    base = 1;
  } else {
    // Sequence exactly group-length: the group's first frame stands in.
    out.prev = normalize(cropped[0]);
    out.has_prev = true;
  }
  out.frames.reserve(frames_needed);
  for (int i = 0; i < frames_needed; i++) out.frames.push_back(normalize(cropped[base + i]));
  return out;
}

}  // namespace

TrainResult train(CodecModel& model, const std::vector<Sequence>& dataset, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress,
                  const TrainerState* resume) {
  cfg.validate();
  if (dataset.empty()) throw ConfigError("train: empty dataset");
  for (const auto& s : dataset) {
    s.validate();
    if (static_cast<int>(s.size()) < cfg.group_len)
      throw ConfigError("sequence '" + s.name + "' shorter than a group (" +
                        std::to_string(s.size()) + " < " + std::to_string(cfg.group_len) + ")");
    if (s.width() < cfg.patch_size || s.height() < cfg.patch_size)
      throw ConfigError("sequence '" + s.name + "' smaller than patch_size");
  }
  const bool long_stage_ok =
      std::any_of(dataset.begin(), dataset.end(),
                  [&](const Sequence& s) { return static_cast<int>(s.size()) >= 2 * cfg.group_len; });
  if (cfg.long_stage_steps > 0 && !long_stage_ok)
    throw ConfigError("long_stage_steps > 0 needs sequences of at least 16 frames");

  std::filesystem::create_directories(out_dir);

  AdamOptimizer::Hyper hyper;
  hyper.lr = static_cast<float>(cfg.lr);
  AdamOptimizer adam(model.parameters(), hyper);
  RandomSource rng(cfg.seed);
  int64_t start_step = 0;
  if (resume) {
    adam.m_state() = resume->m;
    adam.v_state() = resume->v;
    adam.set_step_count(resume->adam_t);
    rng.deserialize(resume->rng_state);
    start_step = resume->next_step;
  }

  const int64_t total_steps = cfg.steps + cfg.long_stage_steps;
  TrainResult result;
  std::deque<double> window;
  double window_sum = 0.0;

  auto make_trainer_state = [&](int64_t next_step, double running) {
    TrainerState ts;
    ts.adam_t = adam.step_count();
    ts.next_step = next_step;
    ts.running_loss = running;
    ts.rng_state = rng.serialize();
    ts.m = adam.m_state();
    ts.v = adam.v_state();
    return ts;
  };

  for (int64_t step = start_step; step < total_steps; step++) {
    const bool long_stage = step >= cfg.steps;
    const int frames_needed = long_stage ? 2 * cfg.group_len : cfg.group_len;
    adam.zero_grad();
    double step_loss = 0.0;

    for (int b = 0; b < cfg.batch; b++) {
      const int base_qp = sample_base_qp(rng, cfg);
      SampledGroup group = sample_group(dataset, frames_needed, cfg, rng);
      const ReferenceMode mode = sample_reference_mode(rng, cfg.reference_mode_probs);

      Graph g(true);
      GroupLossResult r = long_stage ? cascade_group_loss(g, model, group.frames, base_qp, mode,
                                                          &group.prev, rng, cfg)
                                     : group_loss(g, model, group.frames, base_qp, mode,
                                                  &group.prev, rng, cfg);

      if (!std::isfinite(r.diag.loss)) {
        write_train_log_csv(out_dir / "training_log.csv", result.log);
        throw NumericError("non-finite loss at step " + std::to_string(step) + " on " + group.id +
                           " qp=" + std::to_string(base_qp) + " mode=" + to_string(mode));
      }
      step_loss += r.diag.loss / cfg.batch;

      VarPtr scaled = cfg.batch == 1 ? r.loss : g.mul_const(r.loss, 1.0f / cfg.batch);
      g.backward(scaled);

      TrainLogRow row;
      row.step = step;
      row.loss = r.diag.loss;
      row.rate_term = r.diag.rate_term;
      row.distortion_term = r.diag.distortion_term;
      row.qp = base_qp;
      row.mode = mode;
      result.log.push_back(row);
    }

    adam.step(static_cast<float>(cfg.lr_at(step, total_steps)));

    window.push_back(step_loss);
    window_sum += step_loss;
    if (window.size() > 100) {
      window_sum -= window.front();
      window.pop_front();
    }
    const double running = window_sum / static_cast<double>(window.size());

    if (progress && (step % 100 == 0 || step + 1 == total_steps)) {
      (*progress) << "step " << step << " loss " << step_loss << " (smoothed " << running << ")\n";
      progress->flush();
    }
    if (cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0 &&
        step + 1 < total_steps) {
      const TrainerState ts = make_trainer_state(step + 1, running);
      save_checkpoint(model, out_dir / ("checkpoint_" + std::to_string(step + 1) + ".ckpt"),
                      step + 1, &ts);
    }
    result.final_loss = running;
  }

  const TrainerState ts = make_trainer_state(total_steps, result.final_loss);
  result.final_checkpoint = out_dir / "model.ckpt";
  save_checkpoint(model, result.final_checkpoint, total_steps, &ts);
  write_train_log_csv(out_dir / "training_log.csv", result.log);
  return result;
}

void write_train_log_csv(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
  CsvTable t;
  t.header = {"step", "loss", "rate_term", "distortion_term", "qp", "reference_mode"};
  for (const auto& r : log) {
    t.rows.push_back({std::to_string(r.step), format_number(r.loss), format_number(r.rate_term),
                      format_number(r.distortion_term), std::to_string(r.qp), to_string(r.mode)});
  }
  write_csv(path, t);
}

}  // namespace pvc
