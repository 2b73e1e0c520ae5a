#include "pvc/pipeline.hpp"

namespace pvc {

const char* to_string(CodingMode m) {
  return m == CodingMode::unified ? "unified" : "divided_refresh";
}

CodingMode coding_mode_from_string(const std::string& s) {
  if (s == "unified") return CodingMode::unified;
  if (s == "divided_refresh") return CodingMode::divided_refresh;
  throw ConfigError("unknown mode '" + s + "' (expected unified or divided_refresh)");
}

uint64_t digest_prior(const Tensor& mean, const Tensor& scale) {
  uint64_t h = fnv1a64(mean.data(), sizeof(float) * mean.size());
  return fnv1a64(scale.data(), sizeof(float) * scale.size(), h);
}

double SequenceReport::mean_psnr() const {
  double s = 0.0;
  for (double p : per_frame_psnr) s += p;
  return per_frame_psnr.empty() ? 0.0 : s / static_cast<double>(per_frame_psnr.size());
}

double SequenceReport::total_bits() const {
  // Pairwise order: the two half shares of one packet are added to each
  // other first, so the sum equals the packet-bit sum exactly in floating
  // point. An odd frame count means the tail entry already carries its
  // packet's full bits (flush attribution).
  double s = 0.0;
  const size_t n = per_frame_bits.size();
  const size_t paired = n - (n % 2);
  for (size_t i = 0; i < paired; i += 2) s += per_frame_bits[i] + per_frame_bits[i + 1];
  if (n % 2) s += per_frame_bits[n - 1];
  return s;
}

bool pair_crosses_period(int pair_index, int period) {
  if (period <= 0 || pair_index < 1) return false;
  // Some multiple of `period` inside [2p, 2p+1]?
  const int lo = 2 * pair_index;
  const int hi = 2 * pair_index + 1;
  return hi / period > (lo - 1) / period;
}

PairStreamer::PairStreamer(const CodecModel& model, const CodingConfig& cfg, int width, int height)
    : model_(&model), cfg_(cfg), width_(width), height_(height) {
  cfg_.validate();
  require_codable_dims(width, height);
  state_ = init_reference_blank(model, height, width);
}

std::optional<PairPacket> PairStreamer::push_frame(const Frame& frame) {
  if (frame.width != width_ || frame.height != height_)
    throw ShapeError("push_frame: frame is " + std::to_string(frame.width) + "x" +
                     std::to_string(frame.height) + ", streamer expects " +
                     std::to_string(width_) + "x" + std::to_string(height_));
  if (!pending_) {
    pending_ = frame;
    return std::nullopt;
  }
  Frame first = std::move(*pending_);
  pending_.reset();
  last_was_flush_ = false;
  return encode_one_pair(first, frame);
}

std::optional<PairPacket> PairStreamer::flush() {
  if (!pending_) return std::nullopt;
  Frame first = std::move(*pending_);
  pending_.reset();
  last_was_flush_ = true;
  return encode_one_pair(first, first);
}

PairPacket PairStreamer::encode_one_pair(const Frame& a, const Frame& b) {
  const int p = emitted_pairs_;
  if (pair_crosses_period(p, cfg_.intra_period)) {
    state_ = init_reference_blank(*model_, height_, width_);
  } else if (cfg_.mode == CodingMode::divided_refresh &&
             pair_crosses_period(p, cfg_.refresh_period)) {
    state_ = refresh_reference(*model_, last_recon_second_);
  }
  origin_audit_.push_back(state_.origin);

  const QpPair qp = qp_pair_for(cfg_.schedule(), p);
  const ContextPair ctx = extract_contexts(*model_, state_);
  const NormalizedFrame na = normalize(a);
  const NormalizedFrame nb = normalize(b);
  LatentCode latent = encode_pair(*model_, na, nb, ctx, qp);
  const RateEstimate rate = estimate_rate(latent);
  DecodedPair dec = decode_pair(*model_, latent, ctx, qp);

  state_ = std::move(dec.state);
  last_recon_first_ = denormalize(dec.first);
  last_recon_second_ = denormalize(dec.second);
  emitted_pairs_++;

  PairPacket pkt;
  pkt.pair_index = p;
  pkt.latent = std::move(latent);
  pkt.qp = qp;
  pkt.rate = rate;
  pkt.prior_digest = digest_prior(pkt.latent.prior_mean, pkt.latent.prior_scale);
  return pkt;
}

FeatureState refresh_reference(const CodecModel& model, const Frame& reconstructed_frame) {
  return make_reference_from_frame(model, normalize(reconstructed_frame), FeatureOrigin::refresh);
}

std::pair<std::vector<PairPacket>, SequenceReport> encode_sequence(const CodecModel& model,
                                                                   const Sequence& seq,
                                                                   const CodingConfig& cfg) {
  cfg.validate();
  seq.validate();
  require_codable_dims(seq.width(), seq.height());

  PairStreamer streamer(model, cfg, seq.width(), seq.height());
  std::vector<PairPacket> packets;
  SequenceReport report;
  report.reconstructions.name = seq.name + "_recon";
  report.reconstructions.frame_rate = seq.frame_rate;

  auto account_pair = [&](const PairPacket& pkt, bool flush_fill) {
    if (flush_fill) {
      // Odd tail: all packet bits are charged to the single real frame.
      report.per_frame_bits.push_back(pkt.rate.total_bits);
      report.reconstructions.frames.push_back(streamer.last_recon_first());
    } else {
      report.per_frame_bits.push_back(pkt.rate.per_frame_bits[0]);
      report.per_frame_bits.push_back(pkt.rate.per_frame_bits[1]);
      report.reconstructions.frames.push_back(streamer.last_recon_first());
      report.reconstructions.frames.push_back(streamer.last_recon_second());
    }
    packets.push_back(pkt);
  };

  for (const Frame& f : seq.frames) {
    if (auto pkt = streamer.push_frame(f)) account_pair(*pkt, false);
  }
  if (auto pkt = streamer.flush()) account_pair(*pkt, true);

  for (size_t i = 0; i < seq.frames.size(); i++) {
    const PlanePsnr p = psnr_yuv420(seq.frames[i], report.reconstructions.frames[i],
                                    cfg.psnr_weights);
    report.per_frame_components.push_back(p);
    report.per_frame_psnr.push_back(p.yuv);
  }
  report.total_bpp = report.total_bits() /
                     (static_cast<double>(seq.size()) * seq.width() * seq.height());
  return {std::move(packets), std::move(report)};
}

Sequence decode_sequence(const CodecModel& model, const std::vector<PairPacket>& packets,
                         const StreamDims& dims, const CodingConfig& cfg, bool verify_digests) {
  cfg.validate();
  require_codable_dims(dims.width, dims.height);

  Sequence out;
  out.name = "decoded";
  FeatureState state = init_reference_blank(model, dims.height, dims.width);
  Frame last_recon_second;

  int expected = 0;
  for (const PairPacket& pkt : packets) {
    if (pkt.pair_index != expected)
      throw StreamError("packet out of order: expected pair " + std::to_string(expected) +
                        ", got " + std::to_string(pkt.pair_index));
    expected++;

    if (pair_crosses_period(pkt.pair_index, cfg.intra_period)) {
      state = init_reference_blank(model, dims.height, dims.width);
    } else if (cfg.mode == CodingMode::divided_refresh &&
               pair_crosses_period(pkt.pair_index, cfg.refresh_period)) {
      state = refresh_reference(model, last_recon_second);
    }

    const QpPair qp = qp_pair_for(cfg.schedule(), pkt.pair_index);
    const ContextPair ctx = extract_contexts(model, state);

    if (verify_digests && pkt.prior_digest != 0) {
      Graph g(false);
      std::vector<float> gains = lookup_pair_gains(model.table_first(), model.table_second(), qp);
      Tensor gt(static_cast<int>(gains.size()), 1, 1);
      std::copy(gains.begin(), gains.end(), gt.data());
      auto [mu, sigma] = model.prior_forward(g, make_var(ctx.enc_ctx), make_var(std::move(gt)));
      if (digest_prior(mu->val, sigma->val) != pkt.prior_digest)
        throw StreamError("prior digest mismatch at pair " + std::to_string(pkt.pair_index) +
                          " (stream corrupt or wrong model)");
    }

    DecodedPair dec = decode_pair(model, pkt.latent, ctx, qp);
    state = std::move(dec.state);
    Frame fa = denormalize(dec.first);
    Frame fb = denormalize(dec.second);
    last_recon_second = fb;
    out.frames.push_back(std::move(fa));
    if (dims.frame_count <= 0 || static_cast<int64_t>(out.frames.size()) < dims.frame_count)
      out.frames.push_back(std::move(fb));
  }
  return out;
}

}  // namespace pvc
