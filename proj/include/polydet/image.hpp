#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "polydet/geometry.hpp"

namespace polydet {

/// 8-bit image, interleaved row-major, 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
      throw std::invalid_argument("image must be non-empty with 1 or 3 channels");
  }

  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels &&
           pixels == o.pixels;
  }
};

/// Single-channel intensity array in double precision.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("plane dimensions must be positive");
  }

  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
};

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

/// Channel mean converted to a double plane. Gray images copy through.
inline Plane to_gray(const Image& img) {
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 1) {
        p.at(x, y) = img.at(x, y, 0);
      } else {
        p.at(x, y) = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
      }
    }
  }
  return p;
}

/// Bilinear sample at (sx, sy) in pixel-index coordinates with edge clamping.
inline double bilinear_at(const Plane& p, double sx, double sy) {
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const double ax = sx - fx;
  const double ay = sy - fy;
  const auto cx = [&](long long i) {
    return static_cast<int>(std::clamp<long long>(i, 0, p.width - 1));
  };
  const auto cy = [&](long long i) {
    return static_cast<int>(std::clamp<long long>(i, 0, p.height - 1));
  };
  const auto x0 = cx(static_cast<long long>(fx)), x1 = cx(static_cast<long long>(fx) + 1);
  const auto y0 = cy(static_cast<long long>(fy)), y1 = cy(static_cast<long long>(fy) + 1);
  const double top = p.at(x0, y0) * (1.0 - ax) + p.at(x1, y0) * ax;
  const double bot = p.at(x0, y1) * (1.0 - ax) + p.at(x1, y1) * ax;
  return top * (1.0 - ay) + bot * ay;
}

/// Bilinear sample with zero fill outside the plane instead of edge clamping.
/// Used for mask resampling so masks never bleed past their source extent.
inline double bilinear_at_zero(const Plane& p, double sx, double sy) {
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const double ax = sx - fx;
  const double ay = sy - fy;
  const auto tap = [&](long long x, long long y) -> double {
    if (x < 0 || y < 0 || x >= p.width || y >= p.height) return 0.0;
    return p.at(static_cast<int>(x), static_cast<int>(y));
  };
  const auto ix = static_cast<long long>(fx);
  const auto iy = static_cast<long long>(fy);
  const double top = tap(ix, iy) * (1.0 - ax) + tap(ix + 1, iy) * ax;
  const double bot = tap(ix, iy + 1) * (1.0 - ax) + tap(ix + 1, iy + 1) * ax;
  return top * (1.0 - ay) + bot * ay;
}

/// Box-mean downsample at the given stride; edge cells may be partial.
inline Plane pool_mean(const Plane& src, double stride) {
  if (stride <= 0.0) throw std::invalid_argument("stride must be positive");
  const int out_w = static_cast<int>(std::ceil(src.width / stride));
  const int out_h = static_cast<int>(std::ceil(src.height / stride));
  Plane dst(out_w, out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    const int y0 = static_cast<int>(std::floor(oy * stride));
    const int y1 = std::min(src.height, static_cast<int>(std::ceil((oy + 1) * stride)));
    for (int ox = 0; ox < out_w; ++ox) {
      const int x0 = static_cast<int>(std::floor(ox * stride));
      const int x1 = std::min(src.width, static_cast<int>(std::ceil((ox + 1) * stride)));
      double sum = 0.0;
      int n = 0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          sum += src.at(x, y);
          ++n;
        }
      dst.at(ox, oy) = n > 0 ? sum / n : 0.0;
    }
  }
  return dst;
}

/// Right-angle clockwise rotations. 90/270 swap the output dimensions.
enum class Rotation { deg90, deg180, deg270 };

/// Mirror axes. Horizontal mirrors left-right, vertical top-bottom.
enum class FlipAxis { horizontal, vertical };

inline Image rotate_image(const Image& src, Rotation rot) {
  const int w = src.width, h = src.height;
  const bool swap = rot != Rotation::deg180;
  Image dst(swap ? h : w, swap ? w : h, src.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int dx = 0, dy = 0;
      switch (rot) {
        case Rotation::deg90: dx = h - 1 - y; dy = x; break;
        case Rotation::deg180: dx = w - 1 - x; dy = h - 1 - y; break;
        case Rotation::deg270: dx = y; dy = w - 1 - x; break;
      }
      for (int c = 0; c < src.channels; ++c) dst.at(dx, dy, c) = src.at(x, y, c);
    }
  }
  return dst;
}

inline Image flip_image(const Image& src, FlipAxis axis) {
  Image dst(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const int dx = axis == FlipAxis::horizontal ? src.width - 1 - x : x;
      const int dy = axis == FlipAxis::vertical ? src.height - 1 - y : y;
      for (int c = 0; c < src.channels; ++c) dst.at(dx, dy, c) = src.at(x, y, c);
    }
  }
  return dst;
}

inline BinaryMask rotate_mask(const BinaryMask& src, Rotation rot) {
  const int w = src.width, h = src.height;
  const bool swap = rot != Rotation::deg180;
  BinaryMask dst(swap ? h : w, swap ? w : h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src.at(x, y)) continue;
      switch (rot) {
        case Rotation::deg90: dst.set(h - 1 - y, x); break;
        case Rotation::deg180: dst.set(w - 1 - x, h - 1 - y); break;
        case Rotation::deg270: dst.set(y, w - 1 - x); break;
      }
    }
  }
  return dst;
}

inline BinaryMask flip_mask(const BinaryMask& src, FlipAxis axis) {
  BinaryMask dst(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      if (!src.at(x, y)) continue;
      const int dx = axis == FlipAxis::horizontal ? src.width - 1 - x : x;
      const int dy = axis == FlipAxis::vertical ? src.height - 1 - y : y;
      dst.set(dx, dy);
    }
  }
  return dst;
}

/// Box image of a clockwise rotation of a frame_w x frame_h frame.
inline BoundingBox rotate_box(const BoundingBox& b, Rotation rot, double frame_w,
                              double frame_h) {
  switch (rot) {
    case Rotation::deg90: return {frame_h - b.bottom(), b.x, b.h, b.w};
    case Rotation::deg180: return {frame_w - b.right(), frame_h - b.bottom(), b.w, b.h};
    case Rotation::deg270: return {b.y, frame_w - b.right(), b.h, b.w};
  }
  throw std::logic_error("unreachable");
}

inline BoundingBox flip_box(const BoundingBox& b, FlipAxis axis, double frame_w,
                            double frame_h) {
  if (axis == FlipAxis::horizontal) return {frame_w - b.right(), b.y, b.w, b.h};
  return {b.x, frame_h - b.bottom(), b.w, b.h};
}

}  // namespace polydet
