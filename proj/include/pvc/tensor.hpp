#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pvc/common.hpp"

namespace pvc {

// Dense float32 array in CHW order. Vectors use (c,1,1).
class Tensor {
public:
  Tensor() = default;
  Tensor(int c, int h, int w) : c_(c), h_(h), w_(w), v_(static_cast<size_t>(c) * h * w, 0.0f) {
    if (c < 0 || h < 0 || w < 0) throw ShapeError("negative tensor dimension");
  }

  static Tensor full(int c, int h, int w, float value) {
    Tensor t(c, h, w);
    for (auto& x : t.v_) x = value;
    return t;
  }

  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  size_t size() const { return v_.size(); }
  size_t plane() const { return static_cast<size_t>(h_) * w_; }

  float* data() { return v_.data(); }
  const float* data() const { return v_.data(); }

  float& at(int c, int y, int x) { return v_[(static_cast<size_t>(c) * h_ + y) * w_ + x]; }
  float at(int c, int y, int x) const { return v_[(static_cast<size_t>(c) * h_ + y) * w_ + x]; }
  float& operator[](size_t i) { return v_[i]; }
  float operator[](size_t i) const { return v_[i]; }

  bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  std::string shape_str() const {
    return "(" + std::to_string(c_) + "," + std::to_string(h_) + "," + std::to_string(w_) + ")";
  }

  void fill(float v) {
    for (auto& x : v_) x = v;
  }

  bool all_finite() const;

private:
  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<float> v_;
};

inline bool Tensor::all_finite() const {
  for (float x : v_) {
    if (!(x - x == 0.0f)) return false;  // catches NaN and +-inf
  }
  return true;
}

}  // namespace pvc
