#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvc/common.hpp"
#include "pvc/tensor.hpp"

namespace pvc {

// One 8-bit YUV420 picture. Chroma planes are half size in both axes.
struct Frame {
  int width = 0, height = 0;
  std::vector<uint8_t> y, u, v;

  Frame() = default;
  Frame(int w, int h)
      : width(w),
        height(h),
        y(static_cast<size_t>(w) * h),
        u(static_cast<size_t>(w / 2) * (h / 2)),
        v(static_cast<size_t>(w / 2) * (h / 2)) {
    check_dims(w, h);
  }

  static void check_dims(int w, int h) {
    if (w < 2 || h < 2 || w % 2 != 0 || h % 2 != 0)
      throw ShapeError("frame dimensions must be even and >= 2, got " + std::to_string(w) + "x" +
                       std::to_string(h));
  }

  size_t luma_size() const { return static_cast<size_t>(width) * height; }
  size_t chroma_size() const { return static_cast<size_t>(width / 2) * (height / 2); }
  int chroma_width() const { return width / 2; }
  int chroma_height() const { return height / 2; }

  bool operator==(const Frame& o) const {
    return width == o.width && height == o.height && y == o.y && u == o.u && v == o.v;
  }
};

struct Sequence {
  std::vector<Frame> frames;
  std::string name;
  double frame_rate = 30.0;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  size_t size() const { return frames.size(); }

  void validate() const {
    if (frames.empty()) throw FormatError("sequence '" + name + "' has no frames");
    for (const auto& f : frames) {
      if (f.width != width() || f.height != height())
        throw FormatError("sequence '" + name + "' mixes frame dimensions");
    }
  }
};

// Planes scaled to [0,1]; same geometry as Frame.
struct NormalizedFrame {
  Tensor y;  // (1, H, W)
  Tensor u;  // (1, H/2, W/2)
  Tensor v;  // (1, H/2, W/2)

  int width() const { return y.w(); }
  int height() const { return y.h(); }
};

NormalizedFrame normalize(const Frame& f);
Frame denormalize(const NormalizedFrame& nf);

}  // namespace pvc
