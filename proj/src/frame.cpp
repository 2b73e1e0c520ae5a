#include "pvc/frame.hpp"

#include <cmath>

namespace pvc {

namespace {

void plane_to_unit(const std::vector<uint8_t>& src, Tensor& dst) {
  constexpr float kInv = 1.0f / 255.0f;
  float* d = dst.data();
  for (size_t i = 0; i < src.size(); i++) d[i] = src[i] * kInv;
}

// Round half up after clamping, pinned by test (0.5 -> 128).
uint8_t unit_to_byte(float v) {
  if (v < 0.0f) v = 0.0f;
  if (v > 1.0f) v = 1.0f;
  return static_cast<uint8_t>(std::floor(v * 255.0f + 0.5f));
}

void plane_to_bytes(const Tensor& src, std::vector<uint8_t>& dst) {
  const float* s = src.data();
  for (size_t i = 0; i < dst.size(); i++) dst[i] = unit_to_byte(s[i]);
}

}  // namespace

NormalizedFrame normalize(const Frame& f) {
  Frame::check_dims(f.width, f.height);
  NormalizedFrame nf{Tensor(1, f.height, f.width), Tensor(1, f.chroma_height(), f.chroma_width()),
                     Tensor(1, f.chroma_height(), f.chroma_width())};
  plane_to_unit(f.y, nf.y);
  plane_to_unit(f.u, nf.u);
  plane_to_unit(f.v, nf.v);
  return nf;
}

Frame denormalize(const NormalizedFrame& nf) {
  Frame f(nf.width(), nf.height());
  plane_to_bytes(nf.y, f.y);
  plane_to_bytes(nf.u, f.u);
  plane_to_bytes(nf.v, f.v);
  return f;
}

}  // namespace pvc
