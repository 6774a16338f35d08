#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "polydet/detection.hpp"
#include "polydet/geometry.hpp"
#include "polydet/image.hpp"

namespace polydet {

/// Anchor grid parameters. k = |scales| * |aspect_ratios| reference boxes
/// are generated per feature-map position.
struct AnchorConfig {
  double base_size = 128.0;
  std::vector<double> scales{0.25, 0.5, 1.0, 2.0};
  std::vector<double> aspect_ratios{0.5, 1.0, 2.0};  // h/w
  double stride = 16.0;

  std::size_t k() const { return scales.size() * aspect_ratios.size(); }

  void validate() const {
    if (!(base_size > 0.0) || !(stride > 0.0) || scales.empty() || aspect_ratios.empty())
      throw ConfigError("invalid anchor config");
    for (double s : scales)
      if (!(s > 0.0)) throw ConfigError("anchor scales must be positive");
    for (double r : aspect_ratios)
      if (!(r > 0.0)) throw ConfigError("anchor aspect ratios must be positive");
  }
};

enum class AnchorLabelKind { positive, negative, ignore };

/// Training label for one anchor. Positive anchors carry the index of the
/// ground-truth box they are matched to.
struct AnchorLabel {
  AnchorLabelKind kind = AnchorLabelKind::negative;
  std::optional<std::size_t> matched_gt;
};

/// Minibatch selection parameters: IoU thresholds for labeling and the
/// size/ratio of the sampled training batch.
struct SamplingConfig {
  std::size_t minibatch_size = 256;
  double positive_fraction = 0.5;
  double pos_iou = 0.6;
  double neg_iou = 0.3;
  std::uint64_t rng_seed = 0;
  // Force the best-overlapping anchor of every gt positive even below
  // pos_iou, so no gt goes without a training signal.
  bool per_gt_argmax = true;

  void validate() const {
    if (!(0.0 <= neg_iou && neg_iou < pos_iou && pos_iou <= 1.0))
      throw ConfigError("sampling requires 0 <= neg_iou < pos_iou <= 1");
    if (minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
    if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0))
      throw ConfigError("positive_fraction must be in [0,1]");
  }
};

/// NMS thresholds and the proposal cap applied after scoring.
struct ProposalConfig {
  double train_nms_iou = 0.7;
  double test_nms_iou = 0.6;
  std::size_t max_proposals = 300;

  void validate() const {
    if (!(train_nms_iou > 0.0 && train_nms_iou <= 1.0) ||
        !(test_nms_iou > 0.0 && test_nms_iou <= 1.0))
      throw ConfigError("nms thresholds must be in (0,1]");
    if (max_proposals < 1) throw ConfigError("max_proposals must be >= 1");
  }
};

/// Fixed output size of the crop-and-resize sampling grid.
struct RoiConfig {
  int out_h = 8;
  int out_w = 8;

  void validate() const {
    if (out_h < 2 || out_w < 2) throw ConfigError("roi output dims must be >= 2");
  }
};

enum class ProposalMode { train, test };

/// Generate feature_h * feature_w * k anchors, row-major by position with
/// scales outer and ratios inner. Anchor (i,j) is centered at
/// ((j+0.5)*stride, (i+0.5)*stride); scale s with ratio r has size
/// (base*s/sqrt(r), base*s*sqrt(r)), preserving area across ratios.
/// Anchors are not clipped to any frame.
inline std::vector<BoundingBox> generate_anchors(int feature_h, int feature_w,
                                                 const AnchorConfig& cfg) {
  if (feature_h < 1 || feature_w < 1)
    throw std::invalid_argument("feature dims must be >= 1");
  cfg.validate();
  std::vector<BoundingBox> out;
  out.reserve(static_cast<size_t>(feature_h) * feature_w * cfg.k());
  for (int i = 0; i < feature_h; ++i) {
    const double cy = (i + 0.5) * cfg.stride;
    for (int j = 0; j < feature_w; ++j) {
      const double cx = (j + 0.5) * cfg.stride;
      for (double s : cfg.scales) {
        for (double r : cfg.aspect_ratios) {
          const double w = cfg.base_size * s / std::sqrt(r);
          const double h = cfg.base_size * s * std::sqrt(r);
          out.emplace_back(cx - w / 2.0, cy - h / 2.0, w, h);
        }
      }
    }
  }
  return out;
}

/// Label every anchor positive/negative/ignore against the ground truth.
/// IoU >= pos_iou is positive (matched to the argmax gt, ties to the lowest
/// index); IoU <= neg_iou against all gts is negative; anything between is
/// ignored. With per_gt_argmax, each gt's best-overlapping anchor is
/// positive regardless of threshold. No gt boxes labels everything negative.
inline std::vector<AnchorLabel> assign_labels(const std::vector<BoundingBox>& anchors,
                                              const std::vector<BoundingBox>& gt_boxes,
                                              const SamplingConfig& cfg) {
  cfg.validate();
  std::vector<AnchorLabel> labels(anchors.size());
  if (gt_boxes.empty()) return labels;  // all negative

  std::vector<double> best_iou(anchors.size(), 0.0);
  std::vector<std::size_t> best_gt(anchors.size(), 0);
  std::vector<double> gt_best_iou(gt_boxes.size(), -1.0);
  std::vector<std::size_t> gt_best_anchor(gt_boxes.size(), 0);

  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
      const double v = iou(anchors[i], gt_boxes[j]);
      if (v > best_iou[i]) {
        best_iou[i] = v;
        best_gt[i] = j;
      }
      if (v > gt_best_iou[j]) {
        gt_best_iou[j] = v;
        gt_best_anchor[j] = i;
      }
    }
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (best_iou[i] >= cfg.pos_iou) {
      labels[i] = {AnchorLabelKind::positive, best_gt[i]};
    } else if (best_iou[i] <= cfg.neg_iou) {
      labels[i] = {AnchorLabelKind::negative, std::nullopt};
    } else {
      labels[i] = {AnchorLabelKind::ignore, std::nullopt};
    }
  }
  if (cfg.per_gt_argmax) {
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
      const std::size_t i = gt_best_anchor[j];
      labels[i] = {AnchorLabelKind::positive, best_gt[i]};
    }
  }
  return labels;
}

/// Indices selected for one training minibatch. undersized is set when the
/// pools could not fill the configured batch size.
struct MinibatchSample {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  bool undersized = false;
};

namespace detail {

// Partial Fisher-Yates draw of k indices without replacement; depends only
// on the engine sequence, not on std::uniform_int_distribution.
inline std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool,
                                                         std::size_t k,
                                                         std::mt19937_64& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

/// Sample up to minibatch_size * positive_fraction positives uniformly
/// without replacement, then fill the remainder with negatives. Ignored
/// anchors are never sampled. Throws DataError when both pools are empty.
inline MinibatchSample sample_minibatch(const std::vector<AnchorLabel>& labels,
                                        const SamplingConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  std::vector<std::size_t> pos_pool, neg_pool;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].kind == AnchorLabelKind::positive) pos_pool.push_back(i);
    if (labels[i].kind == AnchorLabelKind::negative) neg_pool.push_back(i);
  }
  if (pos_pool.empty() && neg_pool.empty()) throw DataError("nothing to sample");

  const auto target_pos =
      static_cast<std::size_t>(cfg.minibatch_size * cfg.positive_fraction);
  MinibatchSample out;
  out.positives = detail::draw_without_replacement(std::move(pos_pool), target_pos, rng);
  out.negatives = detail::draw_without_replacement(
      std::move(neg_pool), cfg.minibatch_size - out.positives.size(), rng);
  out.undersized = out.positives.size() + out.negatives.size() < cfg.minibatch_size;
  return out;
}

inline MinibatchSample sample_minibatch(const std::vector<AnchorLabel>& labels,
                                        const SamplingConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  return sample_minibatch(labels, cfg, rng);
}

/// Greedy non-maximum suppression: keep the highest-scoring remaining
/// detection, discard everything overlapping it above the threshold, repeat.
/// Score ties break by lower box x, then y, then size, making the result
/// independent of input order. Output is sorted by descending score.
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t ia, std::size_t ib) {
    const Detection& a = dets[ia];
    const Detection& b = dets[ib];
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    if (a.box.w != b.box.w) return a.box.w < b.box.w;
    return a.box.h < b.box.h;
  });
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!suppressed[j] && iou(dets[i].box, dets[j].box) > iou_threshold)
        suppressed[j] = true;
    }
  }
  return kept;
}

/// Clip scored boxes to the frame, drop degenerate ones, suppress with the
/// mode's NMS threshold, and keep at most max_proposals.
inline std::vector<Detection> select_proposals(const std::vector<Detection>& scored,
                                               const ProposalConfig& cfg,
                                               ProposalMode mode, double frame_w,
                                               double frame_h) {
  cfg.validate();
  std::vector<Detection> clipped;
  clipped.reserve(scored.size());
  for (const auto& d : scored) {
    if (auto b = clip_to_frame(d.box, frame_w, frame_h))
      clipped.emplace_back(*b, d.score);
  }
  auto kept = nms(clipped, mode == ProposalMode::train ? cfg.train_nms_iou
                                                       : cfg.test_nms_iou);
  if (kept.size() > cfg.max_proposals) kept.resize(cfg.max_proposals);
  return kept;
}

/// Resample the box region to a fixed out_h x out_w grid with bilinear
/// interpolation. The grid is corner-aligned with the box's pixel footprint:
/// row 0 samples the box's top edge and the last row its bottom edge, so a
/// full-image box at native size reproduces the image exactly. Samples
/// falling outside the plane replicate the nearest edge pixel. Throws
/// DataError("empty crop") when the box does not overlap the plane.
inline Plane crop_and_resize(const Plane& img, const BoundingBox& box,
                             const RoiConfig& cfg) {
  cfg.validate();
  if (box.x >= img.width || box.right() <= 0.0 || box.y >= img.height ||
      box.bottom() <= 0.0)
    throw DataError("empty crop");
  Plane out(cfg.out_w, cfg.out_h);
  for (int i = 0; i < cfg.out_h; ++i) {
    const double sy = box.y + i * (box.h - 1.0) / (cfg.out_h - 1.0);
    for (int j = 0; j < cfg.out_w; ++j) {
      const double sx = box.x + j * (box.w - 1.0) / (cfg.out_w - 1.0);
      out.at(j, i) = bilinear_at(img, sx, sy);
    }
  }
  return out;
}

}  // namespace polydet
