#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "polydet/frame.hpp"
#include "polydet/proposal.hpp"

namespace polydet {

/// Cosine distance below which two exemplar features are considered the
/// same region and deduplicated.
inline constexpr double kExemplarDedupCosine = 0.999;

/// A training region for negative (false-positive) learning: a source
/// image plus the box to learn from.
struct TrainingRegion {
  Image image;
  BoundingBox box;
};

/// The reference detector: stored positive/negative region features
/// matched by cosine similarity. Deterministic, trainable by insertion,
/// and serializable. Stands behind the same contract a learned backbone
/// would implement: detect, train_positive, train_negative, save/load.
///
/// All exemplar vectors are unit length with dimension out_h * out_w.
struct ExemplarModel {
  std::vector<std::vector<double>> positive_exemplars;
  std::vector<std::vector<double>> negative_exemplars;
  double detect_threshold = 0.9;
  RoiConfig roi_cfg;
  AnchorConfig anchor_cfg;
  ProposalConfig proposal_cfg;

  std::size_t feature_dim() const {
    return static_cast<std::size_t>(roi_cfg.out_h) * roi_cfg.out_w;
  }

  void validate() const {
    roi_cfg.validate();
    anchor_cfg.validate();
    proposal_cfg.validate();
    if (!(detect_threshold >= 0.0 && detect_threshold <= 1.0))
      throw ConfigError("detect_threshold must be in [0,1]");
    for (const auto* list : {&positive_exemplars, &negative_exemplars})
      for (const auto& e : *list)
        if (e.size() != feature_dim()) throw DataError("exemplar dimension mismatch");
  }
};

inline bool box_overlaps(const BoundingBox& b, double width, double height) {
  return b.x < width && b.right() > 0.0 && b.y < height && b.bottom() > 0.0;
}

/// Crop the box region of a grayscale plane to the fixed RoI size, remove
/// the patch mean, and scale to unit Euclidean norm. Constant patches map
/// to the zero vector, so the feature is invariant to global affine
/// intensity changes of the patch.
inline std::vector<double> extract_feature(const Plane& gray, const BoundingBox& box,
                                           const RoiConfig& roi) {
  const Plane crop = crop_and_resize(gray, box, roi);
  std::vector<double> f = crop.values;
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  double sq = 0.0;
  for (double& v : f) {
    v -= mean;
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm <= 1e-12) return std::vector<double>(f.size(), 0.0);
  for (double& v : f) v /= norm;
  return f;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Similarity score in [0,1]: (1 + s+ - s-)/2 clamped, where s+/s- are the
/// best cosine matches against the positive/negative exemplars, floored at
/// 0 so an empty side and an anti-correlated side read the same. The floor
/// keeps score monotone under exemplar insertion. An untrained model
/// scores everything 0.5.
inline double score_region(const ExemplarModel& m, const std::vector<double>& feature) {
  if (feature.size() != m.feature_dim())
    throw std::invalid_argument("feature dimension does not match model");
  double s_pos = 0.0, s_neg = 0.0;
  for (const auto& e : m.positive_exemplars) s_pos = std::max(s_pos, dot(feature, e));
  for (const auto& e : m.negative_exemplars) s_neg = std::max(s_neg, dot(feature, e));
  return std::clamp((1.0 + s_pos - s_neg) / 2.0, 0.0, 1.0);
}

namespace detail {

// Append skipping zero features (not normalizable) and near-duplicates.
inline void add_exemplar(std::vector<std::vector<double>>& list,
                         std::vector<double> feature) {
  double sq = 0.0;
  for (double v : feature) sq += v * v;
  if (sq <= 0.5) return;  // zero feature from a constant patch
  for (const auto& e : list)
    if (dot(e, feature) > kExemplarDedupCosine) return;
  list.push_back(std::move(feature));
}

}  // namespace detail

/// Two-stage detection. Stage 1 scores every anchor on a stride-pooled
/// intensity grid (the stand-in for a conv feature map) and filters them
/// through test-mode proposal selection. Stage 2 rescores each surviving
/// proposal on its exact full-resolution crop and keeps scores at or above
/// detect_threshold. Box regression is the identity. Output is sorted by
/// descending score, ties by box position.
inline std::vector<Detection> detect(const ExemplarModel& m, const Image& frame) {
  const Plane gray = to_gray(frame);
  const Plane grid = pool_mean(gray, m.anchor_cfg.stride);
  const auto anchors = generate_anchors(grid.height, grid.width, m.anchor_cfg);

  std::vector<Detection> scored;
  scored.reserve(anchors.size());
  const double inv_stride = 1.0 / m.anchor_cfg.stride;
  for (const auto& a : anchors) {
    BoundingBox grid_box{a.x * inv_stride, a.y * inv_stride, a.w * inv_stride,
                         a.h * inv_stride};
    double s = 0.0;
    if (box_overlaps(grid_box, grid.width, grid.height))
      s = score_region(m, extract_feature(grid, grid_box, m.roi_cfg));
    scored.emplace_back(a, s);
  }
  const auto proposals = select_proposals(scored, m.proposal_cfg, ProposalMode::test,
                                          frame.width, frame.height);

  std::vector<Detection> out;
  for (const auto& p : proposals) {
    const double s = score_region(m, extract_feature(gray, p.box, m.roi_cfg));
    if (s >= m.detect_threshold) out.emplace_back(p.box, s);
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    return a.box.y < b.box.y;
  });
  return out;
}

/// Train on annotated frames: assign labels to the anchor grid of each
/// frame, sample a minibatch, and insert the matched ground-truth crops as
/// positive exemplars and (optionally) the sampled negative anchor crops as
/// negative exemplars. One RNG seeded from cfg.rng_seed drives all frames,
/// so the result is deterministic for a given frame list.
inline ExemplarModel train_positive(ExemplarModel model,
                                    const std::vector<AnnotatedFrame>& frames,
                                    const SamplingConfig& cfg,
                                    bool add_negatives = true) {
  cfg.validate();
  model.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  for (const auto& f : frames) {
    const Plane gray = to_gray(f.image);
    const int fh = static_cast<int>(std::ceil(f.image.height / model.anchor_cfg.stride));
    const int fw = static_cast<int>(std::ceil(f.image.width / model.anchor_cfg.stride));
    const auto anchors = generate_anchors(fh, fw, model.anchor_cfg);
    const auto gts = f.gt_boxes();
    const auto labels = assign_labels(anchors, gts, cfg);
    const auto mb = sample_minibatch(labels, cfg, rng);
    for (std::size_t i : mb.positives) {
      const auto& gt = gts[*labels[i].matched_gt];
      detail::add_exemplar(model.positive_exemplars,
                           extract_feature(gray, gt, model.roi_cfg));
    }
    if (!add_negatives) continue;
    for (std::size_t i : mb.negatives) {
      if (!box_overlaps(anchors[i], f.image.width, f.image.height)) continue;
      detail::add_exemplar(model.negative_exemplars,
                           extract_feature(gray, anchors[i], model.roi_cfg));
    }
  }
  return model;
}

/// Insert each region's crop feature as a negative exemplar. Positive
/// exemplars are untouched; adding negatives can only lower scores.
inline ExemplarModel train_negative(ExemplarModel model,
                                    const std::vector<TrainingRegion>& regions) {
  model.validate();
  for (const auto& r : regions) {
    const Plane gray = to_gray(r.image);
    detail::add_exemplar(model.negative_exemplars,
                         extract_feature(gray, r.box, model.roi_cfg));
  }
  return model;
}

/// The pluggable detector contract. Any model type providing deterministic
/// detection plus insertion-style positive/negative training (including a
/// positives-only switch) works with the post-learning procedures. A real
/// deployment also provides serialization for its model type, as
/// save_model/load_model do for ExemplarModel.
template <typename M>
concept DetectorContract =
    requires(M model, const M& cmodel, const Image& frame,
             const std::vector<AnnotatedFrame>& frames, const SamplingConfig& sampling,
             const std::vector<TrainingRegion>& regions) {
      { detect(cmodel, frame) } -> std::same_as<std::vector<Detection>>;
      { train_positive(std::move(model), frames, sampling) } -> std::same_as<M>;
      { train_positive(std::move(model), frames, sampling, false) } -> std::same_as<M>;
      { train_negative(std::move(model), regions) } -> std::same_as<M>;
    };

static_assert(DetectorContract<ExemplarModel>);

}  // namespace polydet
