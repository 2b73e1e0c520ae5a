#include "pvc/metrics.hpp"

#include <cmath>

namespace pvc {

double mse_plane(const uint8_t* a, const uint8_t* b, size_t n) {
  uint64_t acc = 0;
  for (size_t i = 0; i < n; i++) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    acc += static_cast<uint64_t>(d) * d;
  }
  return static_cast<double>(acc) / static_cast<double>(n);
}

namespace {

double psnr_from_mse(double mse) {
  if (mse < kMseFloor) mse = kMseFloor;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace

PlanePsnr psnr_yuv420(const Frame& a, const Frame& b, const std::array<double, 3>& weights) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeError("psnr_yuv420: dimension mismatch " + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height));
  const double my = mse_plane(a.y.data(), b.y.data(), a.luma_size());
  const double mu = mse_plane(a.u.data(), b.u.data(), a.chroma_size());
  const double mv = mse_plane(a.v.data(), b.v.data(), a.chroma_size());
  PlanePsnr p;
  p.y = psnr_from_mse(my);
  p.u = psnr_from_mse(mu);
  p.v = psnr_from_mse(mv);
  p.yuv = psnr_from_mse(weights[0] * my + weights[1] * mu + weights[2] * mv);
  return p;
}

}  // namespace pvc
