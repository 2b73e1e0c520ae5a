#pragma once

#include <string>
#include <vector>

#include "pvc/common.hpp"

namespace pvc {

struct RDPoint {
  double bpp = 0.0;
  double psnr = 0.0;  // dB
};

// At least four points, strictly increasing in bpp. PSNR should be
// non-decreasing in bpp; violations only warn (set `monotone_warning`).
struct RDCurve {
  std::vector<RDPoint> points;
  std::string label;
  bool monotone_warning = false;

  static RDCurve make(std::vector<RDPoint> pts, std::string label);
};

// Bjontegaard delta-rate in percent: monotone piecewise-cubic Hermite
// interpolation of log-rate over PSNR, mean difference over the common PSNR
// interval via trapezoid integration, then 100*(exp(mean)-1). Negative means
// the test curve spends fewer bits.
double bd_rate(const RDCurve& anchor, const RDCurve& test, int samples = 1000);

// Fritsch-Carlson monotone cubic interpolant, exposed for tests.
class Pchip {
public:
  Pchip(std::vector<double> x, std::vector<double> y);  // x strictly increasing
  double operator()(double xq) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

private:
  std::vector<double> x_, y_, d_;
};

}  // namespace pvc
