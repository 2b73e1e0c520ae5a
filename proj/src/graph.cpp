#include "pvc/graph.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "pvc/gemm.hpp"
#include "pvc/kernels.hpp"

namespace pvc {

namespace {

double softplus_d(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double norm_pdf(double z) { return std::exp(-0.5 * z * z) * 0.3989422804014326779; }

void im2col(const Tensor& x, int k, int stride, int pad, int ho, int wo, float* cols) {
  const int cin = x.c(), ih = x.h(), iw = x.w();
  const size_t npix = static_cast<size_t>(ho) * wo;
  size_t r = 0;
  for (int ci = 0; ci < cin; ci++) {
    for (int dy = 0; dy < k; dy++) {
      for (int dx = 0; dx < k; dx++, r++) {
        float* dst = cols + r * npix;
        for (int oy = 0; oy < ho; oy++, dst += wo) {
          const int iy = oy * stride + dy - pad;
          if (iy < 0 || iy >= ih) {
            std::memset(dst, 0, sizeof(float) * wo);
            continue;
          }
          const float* src = x.data() + (static_cast<size_t>(ci) * ih + iy) * iw;
          if (stride == 1) {
            const int ix0 = dx - pad;
            int ox = 0;
            for (; ox < wo && ix0 + ox < 0; ox++) dst[ox] = 0.0f;
            const int run_end = std::min(wo, iw - ix0);
            if (run_end > ox) {
              std::memcpy(dst + ox, src + ix0 + ox, sizeof(float) * (run_end - ox));
              ox = run_end;
            }
            for (; ox < wo; ox++) dst[ox] = 0.0f;
          } else {
            for (int ox = 0; ox < wo; ox++) {
              const int ix = ox * stride + dx - pad;
              dst[ox] = (ix >= 0 && ix < iw) ? src[ix] : 0.0f;
            }
          }
        }
      }
    }
  }
}

void col2im_acc(const float* cols, int cin, int ih, int iw, int k, int stride, int pad, int ho,
                int wo, float* dx) {
  const size_t npix = static_cast<size_t>(ho) * wo;
  size_t r = 0;
  for (int ci = 0; ci < cin; ci++) {
    for (int dy = 0; dy < k; dy++) {
      for (int dx_ = 0; dx_ < k; dx_++, r++) {
        const float* src = cols + r * npix;
        for (int oy = 0; oy < ho; oy++, src += wo) {
          const int iy = oy * stride + dy - pad;
          if (iy < 0 || iy >= ih) continue;
          float* drow = dx + (static_cast<size_t>(ci) * ih + iy) * iw;
          for (int ox = 0; ox < wo; ox++) {
            const int ix = ox * stride + dx_ - pad;
            if (ix >= 0 && ix < iw) drow[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

void quant_gain_row(const float* raw_min, const float* raw_inc, int channels, int qp, float* out) {
  for (int c = 0; c < channels; c++) {
    double acc = raw_min[c];
    for (int i = 0; i < qp; i++) acc += softplus_d(raw_inc[static_cast<size_t>(i) * channels + c]);
    out[c] = static_cast<float>(std::exp(acc));
  }
}

VarPtr Graph::out_like(int c, int h, int w, std::initializer_list<VarPtr> inputs) {
  auto out = make_var(Tensor(c, h, w));
  if (recording_) {
    for (const auto& in : inputs) {
      if (in && in->requires_grad) {
        out->requires_grad = true;
        break;
      }
    }
  }
  return out;
}

VarPtr Graph::conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int kernel, int stride,
                     int pad) {
  const int cin = x->val.c(), ih = x->val.h(), iw = x->val.w();
  const int cout = w->val.c();
  if (w->val.h() != cin || w->val.w() != kernel * kernel)
    throw ShapeError("conv2d: weight shape " + w->val.shape_str() + " does not match input " +
                     x->val.shape_str() + " with kernel " + std::to_string(kernel));
  if (b && (b->val.c() != cout || b->val.h() != 1 || b->val.w() != 1))
    throw ShapeError("conv2d: bias shape mismatch");
  const int ho = (ih + 2 * pad - kernel) / stride + 1;
  const int wo = (iw + 2 * pad - kernel) / stride + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("conv2d: empty output");
  const int kk = cin * kernel * kernel;
  const int npix = ho * wo;

  const bool direct = (kernel == 1 && stride == 1 && pad == 0);
  std::shared_ptr<Tensor> cols;
  const float* colp = nullptr;
  if (direct) {
    colp = x->val.data();
  } else {
    cols = std::make_shared<Tensor>(kk, ho, wo);
    im2col(x->val, kernel, stride, pad, ho, wo, cols->data());
    colp = cols->data();
  }

  auto out = out_like(cout, ho, wo, {x, w, b});
  gemm_nn(w->val.data(), colp, out->val.data(), cout, kk, npix, false);
  if (b) {
    for (int o = 0; o < cout; o++) {
      const float bv = b->val[o];
      float* row = out->val.data() + static_cast<size_t>(o) * npix;
      for (int j = 0; j < npix; j++) row[j] += bv;
    }
  }

  if (out->requires_grad) {
    record([x, w, b, out, cols, direct, kernel, stride, pad, kk, npix, cout, cin, ih, iw, ho, wo] {
      if (!out->grad_ready) return;
      const float* dy = out->grad.data();
      if (b && b->requires_grad) {
        b->ensure_grad();
        for (int o = 0; o < cout; o++) {
          double s = 0.0;
          const float* row = dy + static_cast<size_t>(o) * npix;
          for (int j = 0; j < npix; j++) s += row[j];
          b->grad[o] += static_cast<float>(s);
        }
      }
      const float* colp = direct ? x->val.data() : cols->data();
      if (w->requires_grad) {
        w->ensure_grad();
        gemm_nt(dy, colp, w->grad.data(), cout, npix, kk, true);
      }
      if (x->requires_grad) {
        x->ensure_grad();
        if (direct) {
          gemm_tn(w->val.data(), dy, x->grad.data(), kk, cout, npix, true);
        } else {
          Tensor dcols(kk, ho, wo);
          gemm_tn(w->val.data(), dy, dcols.data(), kk, cout, npix, false);
          col2im_acc(dcols.data(), cin, ih, iw, kernel, stride, pad, ho, wo, x->grad.data());
        }
      }
    });
  }
  return out;
}

VarPtr Graph::leaky_relu(const VarPtr& x, float slope) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  kern::active().leaky_relu(x->val.data(), out->val.data(), x->val.size(), slope);
  if (out->requires_grad) {
    record([x, out, slope] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      kern::active().leaky_relu_grad(x->val.data(), out->grad.data(), x->grad.data(),
                                     x->val.size(), slope);
    });
  }
  return out;
}

VarPtr Graph::softplus(const VarPtr& x) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  const size_t n = x->val.size();
  for (size_t i = 0; i < n; i++) out->val[i] = static_cast<float>(softplus_d(x->val[i]));
  if (out->requires_grad) {
    record([x, out, n] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      for (size_t i = 0; i < n; i++)
        x->grad[i] += out->grad[i] * static_cast<float>(sigmoid_d(x->val[i]));
    });
  }
  return out;
}

VarPtr Graph::add(const VarPtr& a, const VarPtr& b) {
  if (!a->val.same_shape(b->val))
    throw ShapeError("add: shape mismatch " + a->val.shape_str() + " vs " + b->val.shape_str());
  auto out = out_like(a->val.c(), a->val.h(), a->val.w(), {a, b});
  kern::active().vadd(a->val.data(), b->val.data(), out->val.data(), a->val.size());
  if (out->requires_grad) {
    record([a, b, out] {
      if (!out->grad_ready) return;
      if (a->requires_grad) {
        a->ensure_grad();
        kern::active().axpy(1.0f, out->grad.data(), a->grad.data(), a->val.size());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kern::active().axpy(1.0f, out->grad.data(), b->grad.data(), b->val.size());
      }
    });
  }
  return out;
}

VarPtr Graph::sub(const VarPtr& a, const VarPtr& b) {
  if (!a->val.same_shape(b->val))
    throw ShapeError("sub: shape mismatch " + a->val.shape_str() + " vs " + b->val.shape_str());
  auto out = out_like(a->val.c(), a->val.h(), a->val.w(), {a, b});
  kern::active().vsub(a->val.data(), b->val.data(), out->val.data(), a->val.size());
  if (out->requires_grad) {
    record([a, b, out] {
      if (!out->grad_ready) return;
      if (a->requires_grad) {
        a->ensure_grad();
        kern::active().axpy(1.0f, out->grad.data(), a->grad.data(), a->val.size());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kern::active().axpy(-1.0f, out->grad.data(), b->grad.data(), b->val.size());
      }
    });
  }
  return out;
}

VarPtr Graph::mul(const VarPtr& a, const VarPtr& b) {
  if (!a->val.same_shape(b->val))
    throw ShapeError("mul: shape mismatch " + a->val.shape_str() + " vs " + b->val.shape_str());
  auto out = out_like(a->val.c(), a->val.h(), a->val.w(), {a, b});
  kern::active().vmul(a->val.data(), b->val.data(), out->val.data(), a->val.size());
  if (out->requires_grad) {
    record([a, b, out] {
      if (!out->grad_ready) return;
      const size_t n = a->val.size();
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < n; i++) a->grad[i] += out->grad[i] * b->val[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < n; i++) b->grad[i] += out->grad[i] * a->val[i];
      }
    });
  }
  return out;
}

VarPtr Graph::add_const(const VarPtr& x, float c) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  const size_t n = x->val.size();
  for (size_t i = 0; i < n; i++) out->val[i] = x->val[i] + c;
  if (out->requires_grad) {
    record([x, out] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      kern::active().axpy(1.0f, out->grad.data(), x->grad.data(), x->val.size());
    });
  }
  return out;
}

VarPtr Graph::mul_const(const VarPtr& x, float c) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  const size_t n = x->val.size();
  for (size_t i = 0; i < n; i++) out->val[i] = x->val[i] * c;
  if (out->requires_grad) {
    record([x, out, c] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      kern::active().axpy(c, out->grad.data(), x->grad.data(), x->val.size());
    });
  }
  return out;
}

VarPtr Graph::reciprocal(const VarPtr& x) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  const size_t n = x->val.size();
  for (size_t i = 0; i < n; i++) out->val[i] = 1.0f / x->val[i];
  if (out->requires_grad) {
    record([x, out, n] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      for (size_t i = 0; i < n; i++) x->grad[i] -= out->grad[i] * out->val[i] * out->val[i];
    });
  }
  return out;
}

VarPtr Graph::concat_c(const VarPtr& a, const VarPtr& b) {
  if (a->val.h() != b->val.h() || a->val.w() != b->val.w())
    throw ShapeError("concat_c: spatial mismatch " + a->val.shape_str() + " vs " +
                     b->val.shape_str());
  auto out = out_like(a->val.c() + b->val.c(), a->val.h(), a->val.w(), {a, b});
  std::memcpy(out->val.data(), a->val.data(), sizeof(float) * a->val.size());
  std::memcpy(out->val.data() + a->val.size(), b->val.data(), sizeof(float) * b->val.size());
  if (out->requires_grad) {
    record([a, b, out] {
      if (!out->grad_ready) return;
      if (a->requires_grad) {
        a->ensure_grad();
        kern::active().axpy(1.0f, out->grad.data(), a->grad.data(), a->val.size());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kern::active().axpy(1.0f, out->grad.data() + a->val.size(), b->grad.data(), b->val.size());
      }
    });
  }
  return out;
}

VarPtr Graph::slice_c(const VarPtr& x, int from, int count) {
  if (from < 0 || count <= 0 || from + count > x->val.c())
    throw ShapeError("slice_c: channels [" + std::to_string(from) + "," +
                     std::to_string(from + count) + ") out of " + std::to_string(x->val.c()));
  auto out = out_like(count, x->val.h(), x->val.w(), {x});
  const size_t plane = x->val.plane();
  std::memcpy(out->val.data(), x->val.data() + from * plane, sizeof(float) * count * plane);
  if (out->requires_grad) {
    record([x, out, from, count, plane] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      kern::active().axpy(1.0f, out->grad.data(), x->grad.data() + from * plane, count * plane);
    });
  }
  return out;
}

VarPtr Graph::upsample2x(const VarPtr& x) {
  const int c = x->val.c(), h = x->val.h(), w = x->val.w();
  auto out = out_like(c, 2 * h, 2 * w, {x});
  for (int ci = 0; ci < c; ci++) {
    for (int y = 0; y < h; y++) {
      const float* src = x->val.data() + (static_cast<size_t>(ci) * h + y) * w;
      float* d0 = out->val.data() + (static_cast<size_t>(ci) * 2 * h + 2 * y) * 2 * w;
      float* d1 = d0 + 2 * w;
      for (int xx = 0; xx < w; xx++) {
        d0[2 * xx] = d0[2 * xx + 1] = src[xx];
        d1[2 * xx] = d1[2 * xx + 1] = src[xx];
      }
    }
  }
  if (out->requires_grad) {
    record([x, out, c, h, w] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      for (int ci = 0; ci < c; ci++) {
        for (int y = 0; y < h; y++) {
          float* dst = x->grad.data() + (static_cast<size_t>(ci) * h + y) * w;
          const float* g0 = out->grad.data() + (static_cast<size_t>(ci) * 2 * h + 2 * y) * 2 * w;
          const float* g1 = g0 + 2 * w;
          for (int xx = 0; xx < w; xx++)
            dst[xx] += g0[2 * xx] + g0[2 * xx + 1] + g1[2 * xx] + g1[2 * xx + 1];
        }
      }
    });
  }
  return out;
}

VarPtr Graph::clamp01(const VarPtr& x) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  const size_t n = x->val.size();
  for (size_t i = 0; i < n; i++) {
    const float v = x->val[i];
    out->val[i] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
  if (out->requires_grad) {
    record([x, out, n] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      for (size_t i = 0; i < n; i++) {
        const float v = x->val[i];
        if (v >= 0.0f && v <= 1.0f) x->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

VarPtr Graph::round_ste(const VarPtr& x) {
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x});
  kern::active().round_haz(x->val.data(), out->val.data(), x->val.size());
  if (out->requires_grad) {
    record([x, out] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      kern::active().axpy(1.0f, out->grad.data(), x->grad.data(), x->val.size());
    });
  }
  return out;
}

VarPtr Graph::scale_channels(const VarPtr& x, const VarPtr& g) {
  if (g->val.c() != x->val.c() || g->val.h() != 1 || g->val.w() != 1)
    throw ShapeError("scale_channels: gain shape " + g->val.shape_str() + " vs input " +
                     x->val.shape_str());
  auto out = out_like(x->val.c(), x->val.h(), x->val.w(), {x, g});
  const size_t plane = x->val.plane();
  kern::active().scale_channels(x->val.data(), g->val.data(), out->val.data(), x->val.c(), plane,
                                false);
  if (out->requires_grad) {
    record([x, g, out, plane] {
      if (!out->grad_ready) return;
      const int c = x->val.c();
      if (x->requires_grad) {
        x->ensure_grad();
        kern::active().scale_channels(out->grad.data(), g->val.data(), x->grad.data(), c, plane,
                                      true);
      }
      if (g->requires_grad) {
        g->ensure_grad();
        for (int ci = 0; ci < c; ci++) {
          g->grad[ci] += kern::active().dot(out->grad.data() + ci * plane,
                                            x->val.data() + ci * plane, plane);
        }
      }
    });
  }
  return out;
}

VarPtr Graph::qp_gains(const VarPtr& raw_min, const VarPtr& raw_inc, int qp) {
  const int c = raw_min->val.c();
  if (raw_min->val.h() != 1 || raw_min->val.w() != 1)
    throw ShapeError("qp_gains: raw_min must be a vector");
  if (raw_inc->val.c() != 63 || raw_inc->val.h() != c || raw_inc->val.w() != 1)
    throw ShapeError("qp_gains: raw_inc must be (63, channels, 1)");
  if (qp < 0 || qp > 63) throw ConfigError("qp out of range [0,63]: " + std::to_string(qp));
  auto out = out_like(c, 1, 1, {raw_min, raw_inc});
  quant_gain_row(raw_min->val.data(), raw_inc->val.data(), c, qp, out->val.data());
  if (out->requires_grad) {
    record([raw_min, raw_inc, out, c, qp] {
      if (!out->grad_ready) return;
      for (int ci = 0; ci < c; ci++) {
        const float gg = out->grad[ci] * out->val[ci];
        if (raw_min->requires_grad) {
          raw_min->ensure_grad();
          raw_min->grad[ci] += gg;
        }
        if (raw_inc->requires_grad) {
          raw_inc->ensure_grad();
          for (int i = 0; i < qp; i++) {
            const size_t idx = static_cast<size_t>(i) * c + ci;
            raw_inc->grad[idx] += gg * static_cast<float>(sigmoid_d(raw_inc->val[idx]));
          }
        }
      }
    });
  }
  return out;
}

VarPtr Graph::gaussian_bits(const VarPtr& v, const VarPtr& mu, const VarPtr& sigma,
                            double p_floor) {
  if (!v->val.same_shape(mu->val) || !v->val.same_shape(sigma->val))
    throw ShapeError("gaussian_bits: value/prior shape mismatch");
  const size_t n = v->val.size();
  constexpr double kInvLn2 = 1.4426950408889634074;
  double total = 0.0;
  for (size_t i = 0; i < n; i++) {
    const double s = sigma->val[i];
    if (!(s > 0.0) || !std::isfinite(s) || !std::isfinite(mu->val[i]) ||
        !std::isfinite(static_cast<double>(v->val[i])))
      throw NumericError("gaussian_bits: non-finite or non-positive prior");
    const double d = static_cast<double>(v->val[i]) - static_cast<double>(mu->val[i]);
    double p = norm_cdf((d + 0.5) / s) - norm_cdf((d - 0.5) / s);
    if (p < p_floor) p = p_floor;
    if (p > 1.0) p = 1.0;
    total -= std::log(p) * kInvLn2;
  }
  auto out = out_like(1, 1, 1, {v, mu, sigma});
  out->val[0] = static_cast<float>(total);
  if (out->requires_grad) {
    record([v, mu, sigma, out, n, p_floor] {
      if (!out->grad_ready) return;
      const double go = out->grad[0];
      if (go == 0.0) return;
      constexpr double kInvLn2 = 1.4426950408889634074;
      for (size_t i = 0; i < n; i++) {
        const double s = sigma->val[i];
        const double d = static_cast<double>(v->val[i]) - static_cast<double>(mu->val[i]);
        const double zp = (d + 0.5) / s;
        const double zm = (d - 0.5) / s;
        const double p = norm_cdf(zp) - norm_cdf(zm);
        if (p <= p_floor || p >= 1.0) continue;  // clamped: zero gradient
        const double dbits_dp = -kInvLn2 / p * go;
        const double pp = norm_pdf(zp), pm = norm_pdf(zm);
        const double dp_dd = (pp - pm) / s;
        const double dp_ds = -(zp * pp - zm * pm) / s;
        if (v->requires_grad) {
          v->ensure_grad();
          v->grad[i] += static_cast<float>(dbits_dp * dp_dd);
        }
        if (mu->requires_grad) {
          mu->ensure_grad();
          mu->grad[i] -= static_cast<float>(dbits_dp * dp_dd);
        }
        if (sigma->requires_grad) {
          sigma->ensure_grad();
          sigma->grad[i] += static_cast<float>(dbits_dp * dp_ds);
        }
      }
    });
  }
  return out;
}

VarPtr Graph::mse(const VarPtr& a, const VarPtr& b) {
  if (!a->val.same_shape(b->val))
    throw ShapeError("mse: shape mismatch " + a->val.shape_str() + " vs " + b->val.shape_str());
  const size_t n = a->val.size();
  auto out = out_like(1, 1, 1, {a, b});
  out->val[0] =
      static_cast<float>(kern::active().sum_sq_diff(a->val.data(), b->val.data(), n) / n);
  if (out->requires_grad) {
    record([a, b, out, n] {
      if (!out->grad_ready) return;
      const float scale = out->grad[0] * 2.0f / static_cast<float>(n);
      if (scale == 0.0f) return;
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < n; i++) a->grad[i] += scale * (a->val[i] - b->val[i]);
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < n; i++) b->grad[i] -= scale * (a->val[i] - b->val[i]);
      }
    });
  }
  return out;
}

VarPtr Graph::sum_all(const VarPtr& x) {
  const size_t n = x->val.size();
  double s = 0.0;
  for (size_t i = 0; i < n; i++) s += x->val[i];
  auto out = out_like(1, 1, 1, {x});
  out->val[0] = static_cast<float>(s);
  if (out->requires_grad) {
    record([x, out, n] {
      if (!out->grad_ready || !x->requires_grad) return;
      x->ensure_grad();
      const float g = out->grad[0];
      for (size_t i = 0; i < n; i++) x->grad[i] += g;
    });
  }
  return out;
}

VarPtr Graph::affine_sum(const std::vector<std::pair<double, VarPtr>>& terms, double bias) {
  double s = bias;
  bool rg = false;
  for (const auto& [c, t] : terms) {
    if (!t->scalar()) throw ShapeError("affine_sum: all terms must be scalars");
    s += c * static_cast<double>(t->val[0]);
    rg = rg || t->requires_grad;
  }
  auto out = make_var(Tensor(1, 1, 1));
  out->val[0] = static_cast<float>(s);
  out->requires_grad = recording_ && rg;
  if (out->requires_grad) {
    record([terms, out] {
      if (!out->grad_ready) return;
      const float g = out->grad[0];
      for (const auto& [c, t] : terms) {
        if (t->requires_grad) {
          t->ensure_grad();
          t->grad[0] += static_cast<float>(c) * g;
        }
      }
    });
  }
  return out;
}

void Graph::backward(const VarPtr& loss) {
  if (!loss->scalar()) throw ShapeError("backward: loss must be scalar");
  if (!recording_) throw ConfigError("backward: graph is not recording");
  loss->ensure_grad();
  loss->grad[0] = 1.0f;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

}  // namespace pvc
