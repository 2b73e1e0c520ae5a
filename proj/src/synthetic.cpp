#include "pvc/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "pvc/rng.hpp"

namespace pvc {

Sequence make_moving_gradient_clip(int width, int height, int frames, uint64_t seed, int period) {
  Frame::check_dims(width, height);
  if (frames < 1 || period < 1) throw ConfigError("frames and period must be >= 1");
  RandomSource rng(seed);
  const double fx = static_cast<double>(rng.uniform_int(1, 2));
  const double fy = static_cast<double>(rng.uniform_int(1, 2));
  const double p1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double p3 = rng.uniform(0.0, 2.0 * std::numbers::pi);

  auto to_byte = [](double unit) {
    double v = unit * 255.0;
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    return static_cast<uint8_t>(std::floor(v + 0.5));
  };

  Sequence seq;
  seq.name = "gradient_" + std::to_string(seed);
  for (int t = 0; t < frames; t++) {
    const double phase = 2.0 * std::numbers::pi * (t % period) / period;
    Frame f(width, height);
    for (int y = 0; y < height; y++) {
      for (int x = 0; x < width; x++) {
        const double ramp = 0.5 * (static_cast<double>(x) / (width - 1) +
                                   static_cast<double>(y) / (height - 1));
        const double wave = std::sin(2.0 * std::numbers::pi * (fx * x / width + fy * y / height) +
                                     phase + p1);
        f.y[static_cast<size_t>(y) * width + x] =
            to_byte(0.15 + 0.35 * ramp + 0.45 * (0.5 + 0.5 * wave));
      }
    }
    const int cw = f.chroma_width(), ch = f.chroma_height();
    for (int y = 0; y < ch; y++) {
      for (int x = 0; x < cw; x++) {
        const double su = std::sin(2.0 * std::numbers::pi * x / cw - phase + p2);
        const double sv = std::cos(2.0 * std::numbers::pi * y / ch + phase + p3);
        f.u[static_cast<size_t>(y) * cw + x] = to_byte(0.5 + 0.2 * su);
        f.v[static_cast<size_t>(y) * cw + x] = to_byte(0.5 + 0.2 * sv);
      }
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

Sequence loop_sequence(const Sequence& clip, int total_frames) {
  clip.validate();
  Sequence out;
  out.name = clip.name + "_loop";
  out.frame_rate = clip.frame_rate;
  for (int i = 0; i < total_frames; i++)
    out.frames.push_back(clip.frames[i % clip.frames.size()]);
  return out;
}

}  // namespace pvc
