#pragma once

#include <cmath>
#include <vector>

#include "pvc/graph.hpp"
#include "pvc/kernels.hpp"

namespace pvc {

// Adam with bias correction and optional global-norm clipping over a fixed
// parameter list. Moment buffers are serialized with training checkpoints.
class AdamOptimizer {
public:
  struct Hyper {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float clip_norm = 5.0f;  // 0 disables clipping
  };

  AdamOptimizer(std::vector<VarPtr> params, Hyper hyper) : params_(std::move(params)), hp_(hyper) {
    for (const auto& p : params_) {
      m_.emplace_back(p->val.c(), p->val.h(), p->val.w());
      v_.emplace_back(p->val.c(), p->val.h(), p->val.w());
    }
  }

  // Applies one update from the accumulated gradients. Parameters with no
  // accumulated gradient this step contribute zero gradient (their moments
  // still decay). Returns the pre-clip global gradient norm.
  double step(float lr_override = -1.0f) {
    t_++;
    double norm_sq = 0.0;
    for (const auto& p : params_) {
      if (!p->grad_ready) continue;
      for (size_t j = 0; j < p->grad.size(); j++)
        norm_sq += static_cast<double>(p->grad[j]) * p->grad[j];
    }
    const double norm = std::sqrt(norm_sq);
    float scale = 1.0f;
    if (hp_.clip_norm > 0.0f && norm > hp_.clip_norm)
      scale = static_cast<float>(hp_.clip_norm / norm);

    const float lr = lr_override > 0.0f ? lr_override : hp_.lr;
    const float bc1 = 1.0f / (1.0f - std::pow(hp_.beta1, static_cast<float>(t_)));
    const float bc2 = 1.0f / (1.0f - std::pow(hp_.beta2, static_cast<float>(t_)));
    for (size_t i = 0; i < params_.size(); i++) {
      auto& p = params_[i];
      p->ensure_grad();
      if (scale != 1.0f) {
        for (size_t j = 0; j < p->grad.size(); j++) p->grad[j] *= scale;
      }
      kern::active().adam_step(p->val.data(), p->grad.data(), m_[i].data(), v_[i].data(),
                               p->val.size(), lr, hp_.beta1, hp_.beta2, hp_.eps, bc1, bc2);
    }
    return norm;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  std::vector<Tensor>& m_state() { return m_; }
  std::vector<Tensor>& v_state() { return v_; }
  const Hyper& hyper() const { return hp_; }

private:
  std::vector<VarPtr> params_;
  Hyper hp_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace pvc
