#include "pvc/bdrate.hpp"

#include <algorithm>
#include <cmath>

namespace pvc {

RDCurve RDCurve::make(std::vector<RDPoint> pts, std::string label) {
  if (pts.size() < 4)
    throw ConfigError("RD curve '" + label + "' needs at least 4 points, got " +
                      std::to_string(pts.size()));
  std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  RDCurve c;
  for (size_t i = 0; i < pts.size(); i++) {
    if (!(pts[i].bpp > 0.0))
      throw ConfigError("RD curve '" + label + "' has non-positive bpp");
    if (!std::isfinite(pts[i].psnr))
      throw ConfigError("RD curve '" + label + "' has non-finite PSNR");
    if (i > 0 && !(pts[i].bpp > pts[i - 1].bpp))
      throw ConfigError("RD curve '" + label + "' has duplicate bpp values");
    if (i > 0 && pts[i].psnr < pts[i - 1].psnr) c.monotone_warning = true;
  }
  c.points = std::move(pts);
  c.label = std::move(label);
  return c;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw ConfigError("pchip needs >= 2 points");
  for (size_t i = 1; i < n; i++) {
    if (!(x_[i] > x_[i - 1]))
      throw ConfigError("pchip abscissae must be strictly increasing");
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (size_t i = 0; i + 1 < n; i++) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = delta[0];
    return;
  }
  for (size_t i = 1; i + 1 < n; i++) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0)
      d = 0.0;
    else if (d0 * d1 < 0.0 && std::fabs(d) > 3.0 * std::fabs(d0))
      d = 3.0 * d0;
    return d;
  };
  d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double xq) const {
  const size_t n = x_.size();
  size_t i;
  if (xq <= x_.front()) {
    i = 0;
  } else if (xq >= x_.back()) {
    i = n - 2;
  } else {
    i = static_cast<size_t>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
  }
  const double h = x_[i + 1] - x_[i];
  const double t = (xq - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double bd_rate(const RDCurve& anchor, const RDCurve& test, int samples) {
  if (samples < 2) throw ConfigError("bd_rate needs at least 2 samples");
  auto prepare = [](const RDCurve& c) {
    std::vector<double> psnr, logr;
    psnr.reserve(c.points.size());
    logr.reserve(c.points.size());
    for (const RDPoint& p : c.points) {
      psnr.push_back(p.psnr);
      logr.push_back(std::log(p.bpp));
    }
    for (size_t i = 1; i < psnr.size(); i++) {
      if (!(psnr[i] > psnr[i - 1]))
        throw ConfigError("bd_rate: curve '" + c.label +
                          "' PSNR must be strictly increasing for interpolation");
    }
    return Pchip(std::move(psnr), std::move(logr));
  };
  const Pchip a = prepare(anchor);
  const Pchip t = prepare(test);

  const double lo = std::max(a.x_min(), t.x_min());
  const double hi = std::min(a.x_max(), t.x_max());
  if (!(hi > lo))
    throw ConfigError("bd_rate: no PSNR overlap between '" + anchor.label + "' [" +
                      std::to_string(a.x_min()) + ", " + std::to_string(a.x_max()) + "] and '" +
                      test.label + "' [" + std::to_string(t.x_min()) + ", " +
                      std::to_string(t.x_max()) + "]");

  // Trapezoid rule over `samples` evenly spaced evaluation points.
  double integral = 0.0;
  double prev = t(lo) - a(lo);
  const double step = (hi - lo) / static_cast<double>(samples - 1);
  for (int i = 1; i < samples; i++) {
    const double x = lo + step * i;
    const double cur = t(x) - a(x);
    integral += 0.5 * (prev + cur) * step;
    prev = cur;
  }
  const double mean_diff = integral / (hi - lo);
  return 100.0 * (std::exp(mean_diff) - 1.0);
}

}  // namespace pvc
