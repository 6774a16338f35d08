#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "polydet/error.hpp"

namespace polydet {

/// A 2-D point in pixel coordinates.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle anchored at its top-left corner, in pixel units.
/// Coordinates are continuous reals; width and height must be positive.
/// Boxes are frame-independent; clipping to a frame is an explicit operation.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  BoundingBox() = default;
  BoundingBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
    if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h)))
      throw std::invalid_argument("bounding box coordinates must be finite");
    if (!(w > 0.0 && h > 0.0))
      throw std::invalid_argument("bounding box width and height must be positive");
  }

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }

  bool operator==(const BoundingBox& o) const {
    return x == o.x && y == o.y && w == o.w && h == o.h;
  }
};

/// Per-pixel boolean annotation sharing the owning frame's dimensions.
/// True pixels mark the annotated region.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bitmap;  // row-major, 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bitmap(static_cast<size_t>(w) * h, 0) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("mask dimensions must be positive");
  }

  bool at(int px, int py) const {
    return bitmap[static_cast<size_t>(py) * width + px] != 0;
  }
  void set(int px, int py, bool v = true) {
    bitmap[static_cast<size_t>(py) * width + px] = v ? 1 : 0;
  }
  std::size_t true_count() const {
    std::size_t n = 0;
    for (auto v : bitmap) n += (v != 0);
    return n;
  }

  bool operator==(const BinaryMask& o) const {
    return width == o.width && height == o.height && bitmap == o.bitmap;
  }
};

/// Box-regression target: dimensionless center offsets and log-scale factors.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

/// Intersection area over union area of two boxes. Zero when disjoint,
/// symmetric in its arguments, and 1 exactly when the boxes coincide.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a == b) return 1.0;
  const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return std::clamp(inter / (a.area() + b.area() - inter), 0.0, 1.0);
}

/// Box center (x + w/2, y + h/2).
inline Point centroid(const BoundingBox& b) {
  return {b.x + b.w / 2.0, b.y + b.h / 2.0};
}

/// True iff p rounds (half-up) to an in-bounds pixel whose mask value is true.
/// Points outside the frame always return false.
inline bool contains(const BinaryMask& m, const Point& p) {
  const auto px = static_cast<long long>(std::floor(p.x + 0.5));
  const auto py = static_cast<long long>(std::floor(p.y + 0.5));
  if (px < 0 || py < 0 || px >= m.width || py >= m.height) return false;
  return m.at(static_cast<int>(px), static_cast<int>(py));
}

/// Encode gt relative to anchor as center offsets over anchor size and
/// log size ratios: tx=(gx-ax)/aw, ty=(gy-ay)/ah, tw=ln(gw/aw), th=ln(gh/ah)
/// with centers rather than corners.
inline BoxDelta encode_box(const BoundingBox& anchor, const BoundingBox& gt) {
  const Point ac = centroid(anchor);
  const Point gc = centroid(gt);
  return {(gc.x - ac.x) / anchor.w, (gc.y - ac.y) / anchor.h,
          std::log(gt.w / anchor.w), std::log(gt.h / anchor.h)};
}

/// Inverse of encode_box. Performs no clipping.
inline BoundingBox decode_box(const BoundingBox& anchor, const BoxDelta& d) {
  const Point ac = centroid(anchor);
  const double cx = ac.x + d.tx * anchor.w;
  const double cy = ac.y + d.ty * anchor.h;
  const double w = anchor.w * std::exp(d.tw);
  const double h = anchor.h * std::exp(d.th);
  return {cx - w / 2.0, cy - h / 2.0, w, h};
}

/// Intersect b with the frame rectangle [0,width]x[0,height].
/// Returns nothing when the intersection is empty or degenerate.
inline std::optional<BoundingBox> clip_to_frame(const BoundingBox& b, double width,
                                                double height) {
  if (width <= 0.0 || height <= 0.0)
    throw std::invalid_argument("frame dimensions must be positive");
  const double x0 = std::max(b.x, 0.0);
  const double y0 = std::max(b.y, 0.0);
  const double x1 = std::min(b.right(), width);
  const double y1 = std::min(b.bottom(), height);
  if (x1 - x0 <= 0.0 || y1 - y0 <= 0.0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

/// Tight axis-aligned bounding box of the mask's true region.
/// Throws DataError("empty annotation") when the mask has no true pixel.
inline BoundingBox mask_bbox(const BinaryMask& m) {
  int min_x = m.width, min_y = m.height, max_x = -1, max_y = -1;
  for (int py = 0; py < m.height; ++py) {
    for (int px = 0; px < m.width; ++px) {
      if (!m.at(px, py)) continue;
      min_x = std::min(min_x, px);
      min_y = std::min(min_y, py);
      max_x = std::max(max_x, px);
      max_y = std::max(max_y, py);
    }
  }
  if (max_x < 0) throw DataError("empty annotation");
  return {static_cast<double>(min_x), static_cast<double>(min_y),
          static_cast<double>(max_x - min_x + 1), static_cast<double>(max_y - min_y + 1)};
}

}  // namespace polydet
