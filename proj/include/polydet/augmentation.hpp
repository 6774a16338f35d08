#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "polydet/frame.hpp"

namespace polydet {

/// The four training-set augmentation families, smallest to largest.
enum class StrategyKind { none, rot, aug_i, aug_ii };

/// Parameters of an augmentation family. Factors and magnitudes are
/// fractions of the frame size; gains are multiplicative intensities.
struct AugmentationStrategy {
  StrategyKind name = StrategyKind::none;
  std::vector<double> zoom_in_factors{0.10};
  std::vector<double> zoom_out_factors{0.10, 0.30, 0.50};
  std::vector<double> shear_magnitudes{0.20, -0.20};  // applied per axis
  double blur_sigma = 1.0;
  std::vector<double> brightness_gains{1.3, 0.7};
  double visibility_threshold = 0.5;

  static AugmentationStrategy make(StrategyKind k) {
    AugmentationStrategy s;
    s.name = k;
    return s;
  }
};

namespace detail {

inline std::string pct_tag(double v) {
  const long p = std::lround(std::fabs(v) * 100.0);
  return std::to_string(p);
}

inline Plane mask_to_plane(const BinaryMask& m) {
  Plane p(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) p.at(x, y) = m.at(x, y) ? 1.0 : 0.0;
  return p;
}

inline BinaryMask plane_to_mask(const Plane& p) {
  BinaryMask m(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      if (p.at(x, y) >= 0.5) m.set(x, y);
  return m;
}

}  // namespace detail

/// Clockwise right-angle rotation of pixels, masks, and boxes together.
/// Output dimensions swap for 90/270. Exact pixel permutation.
inline AnnotatedFrame rotate(const AnnotatedFrame& f, Rotation rot) {
  const double w = f.image.width, h = f.image.height;
  AnnotatedFrame out;
  out.frame_id = f.frame_id;
  out.image = rotate_image(f.image, rot);
  for (const auto& a : f.annotations)
    out.annotations.push_back({rotate_mask(a.mask, rot), rotate_box(a.box, rot, w, h)});
  return out;
}

/// Mirror pixels, masks, and boxes about the given axis. Involution.
inline AnnotatedFrame flip(const AnnotatedFrame& f, FlipAxis axis) {
  const double w = f.image.width, h = f.image.height;
  AnnotatedFrame out;
  out.frame_id = f.frame_id;
  out.image = flip_image(f.image, axis);
  for (const auto& a : f.annotations)
    out.annotations.push_back({flip_mask(a.mask, axis), flip_box(a.box, axis, w, h)});
  return out;
}

/// Zoom by a signed fraction: factor > 0 magnifies by cropping the central
/// window and upscaling; factor < 0 shrinks the frame and pads the border
/// with replicated edge pixels. Masks are resampled and re-thresholded at
/// 0.5; boxes are recomputed from the resampled masks.
///
/// Returns nothing when any annotation keeps less than visibility_threshold
/// of its expected post-zoom area (the fraction lost to cropping), or when
/// an annotation vanishes entirely.
inline std::optional<AnnotatedFrame> zoom(const AnnotatedFrame& f, double factor,
                                          double visibility_threshold = 0.5) {
  if (!(std::fabs(factor) < 1.0)) throw std::invalid_argument("|zoom factor| must be < 1");
  if (factor == 0.0) return f;

  const int W = f.image.width, H = f.image.height;
  // Inverse map from output pixel centers to source index coordinates.
  double su, sv, ou, ov;  // scale and offset: src = (dst + 0.5) * s + o - 0.5
  if (factor > 0.0) {
    const double cw = W / (1.0 + factor), ch = H / (1.0 + factor);
    su = cw / W;
    sv = ch / H;
    ou = (W - cw) / 2.0;
    ov = (H - ch) / 2.0;
  } else {
    const double p = -factor;
    const int sw = std::max<long>(1, std::lround(W * (1.0 - p)));
    const int sh = std::max<long>(1, std::lround(H * (1.0 - p)));
    su = static_cast<double>(W) / sw;
    sv = static_cast<double>(H) / sh;
    ou = -su * ((W - sw) / 2);
    ov = -sv * ((H - sh) / 2);
  }
  const auto src_x = [&](int x) { return (x + 0.5) * su + ou - 0.5; };
  const auto src_y = [&](int y) { return (y + 0.5) * sv + ov - 0.5; };

  AnnotatedFrame out;
  out.frame_id = f.frame_id;
  out.image = Image(W, H, f.image.channels);
  for (int c = 0; c < f.image.channels; ++c) {
    Plane ch(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) ch.at(x, y) = f.image.at(x, y, c);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        out.image.at(x, y, c) = clamp_u8(bilinear_at(ch, src_x(x), src_y(y)));
  }

  const double scale = factor > 0.0 ? 1.0 + factor : 1.0 / su;  // linear object scale
  for (const auto& a : f.annotations) {
    Plane mp = detail::mask_to_plane(a.mask);
    Plane rp(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) rp.at(x, y) = bilinear_at_zero(mp, src_x(x), src_y(y));
    BinaryMask rm = detail::plane_to_mask(rp);
    const double surviving = static_cast<double>(rm.true_count());
    const double expected = static_cast<double>(a.mask.true_count()) * scale * scale;
    if (surviving <= 0.0 || surviving < visibility_threshold * expected)
      return std::nullopt;  // too much of the region left the frame
    out.annotations.push_back(Annotation::from_mask(std::move(rm)));
  }
  return out;
}

/// Affine shear (x-axis: x' = x + m*y; y-axis: y' = y + m*x) resampled onto
/// a canvas enlarged to hold the sheared extent. Masks are co-sheared and
/// re-thresholded; boxes come from the sheared masks.
inline AnnotatedFrame shear(const AnnotatedFrame& f, char axis, double magnitude) {
  if (axis != 'x' && axis != 'y') throw std::invalid_argument("shear axis must be x or y");
  if (!(std::fabs(magnitude) <= 0.5))
    throw std::invalid_argument("|shear magnitude| must be <= 0.5");

  const int W = f.image.width, H = f.image.height;
  const bool on_x = axis == 'x';
  const int span = on_x ? H : W;
  const double off = std::max(0.0, -magnitude * span);
  const int out_w = on_x ? static_cast<int>(std::ceil(W + std::fabs(magnitude) * H)) : W;
  const int out_h = on_x ? H : static_cast<int>(std::ceil(H + std::fabs(magnitude) * W));

  // Inverse map in continuous coordinates, then shift to index space.
  const auto src_of = [&](int dx, int dy) {
    const double u = dx + 0.5, v = dy + 0.5;
    double sx, sy;
    if (on_x) {
      sy = v;
      sx = u - off - magnitude * v;
    } else {
      sx = u;
      sy = v - off - magnitude * u;
    }
    return Point{sx - 0.5, sy - 0.5};
  };

  AnnotatedFrame out;
  out.frame_id = f.frame_id;
  out.image = Image(out_w, out_h, f.image.channels);
  for (int c = 0; c < f.image.channels; ++c) {
    Plane ch(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) ch.at(x, y) = f.image.at(x, y, c);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        const Point s = src_of(x, y);
        out.image.at(x, y, c) = clamp_u8(bilinear_at(ch, s.x, s.y));
      }
  }
  for (const auto& a : f.annotations) {
    Plane mp = detail::mask_to_plane(a.mask);
    Plane rp(out_w, out_h);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        const Point s = src_of(x, y);
        rp.at(x, y) = bilinear_at_zero(mp, s.x, s.y);
      }
    BinaryMask rm = detail::plane_to_mask(rp);
    if (rm.true_count() == 0) continue;  // sub-pixel mask lost to re-thresholding
    out.annotations.push_back(Annotation::from_mask(std::move(rm)));
  }
  return out;
}

/// Per-channel Gaussian blur with kernel radius ceil(3*sigma) and
/// edge-replicated borders, applied separably. Annotations unchanged.
inline AnnotatedFrame blur(const AnnotatedFrame& f, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("blur sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += kernel[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& k : kernel) k /= sum;

  const int W = f.image.width, H = f.image.height;
  AnnotatedFrame out = f;
  for (int c = 0; c < f.image.channels; ++c) {
    Plane tmp(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i)
          acc += kernel[i + r] * f.image.at(std::clamp(x + i, 0, W - 1), y, c);
        tmp.at(x, y) = acc;
      }
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += kernel[i + r] * tmp.at(x, std::clamp(y + i, 0, H - 1));
        out.image.at(x, y, c) = clamp_u8(acc);
      }
  }
  return out;
}

/// Multiply every intensity by gain, saturating to the 8-bit range.
/// Annotations unchanged.
inline AnnotatedFrame adjust_brightness(const AnnotatedFrame& f, double gain) {
  if (!(gain > 0.0)) throw std::invalid_argument("brightness gain must be positive");
  AnnotatedFrame out = f;
  for (auto& v : out.image.pixels) v = clamp_u8(v * gain);
  return out;
}

/// Enumerate the frames a strategy produces, in deterministic order:
/// the six rotation/flip bases first, then the shears of the original,
/// then the zooms of every base, then (largest family) blur and the two
/// brightness variants of every base. Zoomed outputs that fail the
/// visibility test are skipped. Output ids carry a transform tag suffix.
inline std::vector<AnnotatedFrame> apply_strategy(const AnnotatedFrame& f,
                                                  const AugmentationStrategy& s) {
  if (s.name == StrategyKind::none) return {f};

  const auto tagged = [](AnnotatedFrame fr, const std::string& tag) {
    fr.frame_id += "__" + tag;
    return fr;
  };

  std::vector<AnnotatedFrame> bases;
  bases.push_back(f);
  bases.push_back(tagged(rotate(f, Rotation::deg90), "rot90"));
  bases.push_back(tagged(rotate(f, Rotation::deg180), "rot180"));
  bases.push_back(tagged(rotate(f, Rotation::deg270), "rot270"));
  bases.push_back(tagged(flip(f, FlipAxis::horizontal), "fliph"));
  bases.push_back(tagged(flip(f, FlipAxis::vertical), "flipv"));
  if (s.name == StrategyKind::rot) return bases;

  std::vector<AnnotatedFrame> out = bases;
  for (char axis : {'x', 'y'}) {
    for (double m : s.shear_magnitudes) {
      std::string tag = std::string("sh") + axis + (m < 0 ? "m" : "") + detail::pct_tag(m);
      out.push_back(tagged(shear(f, axis, m), tag));
    }
  }
  for (const auto& base : bases) {
    for (double p : s.zoom_in_factors)
      if (auto z = zoom(base, p, s.visibility_threshold))
        out.push_back(tagged(std::move(*z), "zi" + detail::pct_tag(p)));
    for (double p : s.zoom_out_factors)
      if (auto z = zoom(base, -p, s.visibility_threshold))
        out.push_back(tagged(std::move(*z), "zo" + detail::pct_tag(p)));
  }
  if (s.name == StrategyKind::aug_i) return out;

  for (const auto& base : bases) {
    out.push_back(tagged(blur(base, s.blur_sigma), "blur"));
    for (double g : s.brightness_gains)
      out.push_back(tagged(adjust_brightness(base, g), "br" + detail::pct_tag(g)));
  }
  return out;
}

}  // namespace polydet
