#pragma once

#include <array>

#include "pvc/frame.hpp"

namespace pvc {

struct PlanePsnr {
  double y = 0.0, u = 0.0, v = 0.0, yuv = 0.0;
};

// MSE floor corresponding to the 100 dB PSNR cap (255^2 * 1e-10).
inline constexpr double kMseFloor = 255.0 * 255.0 * 1e-10;

// Per-plane PSNR plus the weighted-MSE combination
//   psnr_yuv = 10*log10(255^2 / (w_y*MSE_y + w_u*MSE_u + w_v*MSE_v)).
PlanePsnr psnr_yuv420(const Frame& a, const Frame& b,
                      const std::array<double, 3>& weights = {6.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0});

double mse_plane(const uint8_t* a, const uint8_t* b, size_t n);

}  // namespace pvc
