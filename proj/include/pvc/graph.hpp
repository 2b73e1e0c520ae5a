#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "pvc/tensor.hpp"

namespace pvc {

struct Var {
  Tensor val;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool grad_ready = false;

  Var() = default;
  explicit Var(Tensor v, bool rg = false) : val(std::move(v)), requires_grad(rg) {}

  void ensure_grad() {
    if (!grad_ready) {
      grad = Tensor(val.c(), val.h(), val.w());
      grad_ready = true;
    }
  }
  void zero_grad() {
    grad_ready = false;
    grad = Tensor();
  }
  bool scalar() const { return val.size() == 1; }
};

using VarPtr = std::shared_ptr<Var>;

inline VarPtr make_var(Tensor t, bool requires_grad = false) {
  return std::make_shared<Var>(std::move(t), requires_grad);
}

// Dynamic reverse-mode tape. Ops append their backward closure in build
// order, which is a valid topological order for the reverse sweep. A
// non-recording graph only computes values (inference path).
class Graph {
public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int kernel, int stride,
                int pad);
  VarPtr leaky_relu(const VarPtr& x, float slope = 0.1f);
  VarPtr softplus(const VarPtr& x);
  VarPtr add(const VarPtr& a, const VarPtr& b);
  VarPtr sub(const VarPtr& a, const VarPtr& b);
  VarPtr mul(const VarPtr& a, const VarPtr& b);
  VarPtr add_const(const VarPtr& x, float c);
  VarPtr mul_const(const VarPtr& x, float c);
  VarPtr reciprocal(const VarPtr& x);
  VarPtr concat_c(const VarPtr& a, const VarPtr& b);
  VarPtr slice_c(const VarPtr& x, int from, int count);
  VarPtr upsample2x(const VarPtr& x);
  VarPtr clamp01(const VarPtr& x);

  // Forward rounds half away from zero; backward passes gradients through
  // unchanged (straight-through surrogate).
  VarPtr round_ste(const VarPtr& x);

  // y[c,:,:] = x[c,:,:] * g[c]; g has shape (c,1,1).
  VarPtr scale_channels(const VarPtr& x, const VarPtr& g);

  // Monotone quantization-gain row: out[c] = exp(raw_min[c] + sum_{i<qp} softplus(raw_inc[i,c])).
  VarPtr qp_gains(const VarPtr& raw_min, const VarPtr& raw_inc, int qp);

  // Total code length in bits of integer symbols v under N(mu, sigma^2) with
  // half-unit bins; per-symbol probability floored at p_floor. Scalar output.
  VarPtr gaussian_bits(const VarPtr& v, const VarPtr& mu, const VarPtr& sigma, double p_floor);

  VarPtr mse(const VarPtr& a, const VarPtr& b);  // scalar mean squared error
  VarPtr sum_all(const VarPtr& x);               // scalar sum of elements

  // bias + sum_i coeff_i * scalar_i
  VarPtr affine_sum(const std::vector<std::pair<double, VarPtr>>& terms, double bias = 0.0);

  void backward(const VarPtr& loss);

  size_t tape_size() const { return tape_.size(); }

private:
  VarPtr out_like(int c, int h, int w, std::initializer_list<VarPtr> inputs);
  void record(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

  bool recording_;
  std::vector<std::function<void()>> tape_;
};

// Shared by the graph op and by inference-time table materialization so both
// paths produce bit-identical gains.
void quant_gain_row(const float* raw_min, const float* raw_inc, int channels, int qp, float* out);

}  // namespace pvc
