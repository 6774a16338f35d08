#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polydet/augmentation.hpp"
#include "polydet/detector.hpp"

namespace polydet {

/// A high-confidence detection collected from a polyp-free frame.
struct FPRecord {
  std::string frame_id;
  BoundingBox box;
  double score = 0.0;
};

/// Right-angle transforms used to augment collected regions.
enum class RigidTransform { identity, rot90, rot180, rot270, flip_h, flip_v };

inline std::vector<RigidTransform> default_fp_augmentation() {
  return {RigidTransform::identity, RigidTransform::rot90, RigidTransform::rot180,
          RigidTransform::rot270,   RigidTransform::flip_h, RigidTransform::flip_v};
}

/// Post-learning parameters: score cutoffs for collecting regions and the
/// augmentation applied before retraining.
struct PostLearnConfig {
  double fp_score_threshold = 0.99;
  double reliable_score_threshold = 0.99;
  std::vector<RigidTransform> fp_augmentation = default_fp_augmentation();
  AugmentationStrategy offline_augmentation = AugmentationStrategy::make(StrategyKind::rot);

  void validate() const {
    if (!(fp_score_threshold > 0.0 && fp_score_threshold <= 1.0) ||
        !(reliable_score_threshold > 0.0 && reliable_score_threshold <= 1.0))
      throw ConfigError("post-learning score thresholds must be in (0,1]");
  }
};

/// Rasterize a box into a frame-sized mask. Returns nothing when the box
/// rounds to an empty pixel rectangle.
inline std::optional<BinaryMask> rasterize_box(const BoundingBox& b, int width,
                                               int height) {
  const int x0 = static_cast<int>(std::max(0l, std::lround(b.x)));
  const int y0 = static_cast<int>(std::max(0l, std::lround(b.y)));
  const int x1 = static_cast<int>(std::min<long>(width, std::lround(b.right())));
  const int y1 = static_cast<int>(std::min<long>(height, std::lround(b.bottom())));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  BinaryMask m(width, height);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.set(x, y);
  return m;
}

/// Run the detector over polyp-free frames and record every detection at
/// or above the FP score threshold. On ground-truth-free frames every
/// detection is by definition a false positive.
template <DetectorContract M>
std::vector<FPRecord> collect_false_positives(
    const M& model, const std::vector<AnnotatedFrame>& negative_frames,
    const PostLearnConfig& cfg) {
  cfg.validate();
  for (const auto& f : negative_frames)
    if (f.has_annotations())
      throw DataError("frame " + f.frame_id + " carries annotations; FP collection needs polyp-free frames");
  std::vector<FPRecord> records;
  for (const auto& f : negative_frames) {
    for (const auto& d : detect(model, f.image)) {
      if (d.score >= cfg.fp_score_threshold)
        records.push_back({f.frame_id, d.box, d.score});
    }
  }
  return records;
}

/// Expand each record into the original region plus its images under the
/// configured rigid transforms, with the box co-transformed. Regions whose
/// transformed box clips to nothing are dropped.
inline std::vector<TrainingRegion> augment_fp_records(
    const std::vector<FPRecord>& records, const std::vector<AnnotatedFrame>& frames,
    const PostLearnConfig& cfg) {
  cfg.validate();
  std::map<std::string, const AnnotatedFrame*> by_id;
  for (const auto& f : frames) by_id[f.frame_id] = &f;

  std::vector<TrainingRegion> regions;
  for (const auto& rec : records) {
    const auto it = by_id.find(rec.frame_id);
    if (it == by_id.end())
      throw DataError("record references unknown frame " + rec.frame_id);
    const Image& src = it->second->image;
    const double w = src.width, h = src.height;
    for (RigidTransform t : cfg.fp_augmentation) {
      Image img;
      BoundingBox box = rec.box;
      switch (t) {
        case RigidTransform::identity:
          img = src;
          break;
        case RigidTransform::rot90:
          img = rotate_image(src, Rotation::deg90);
          box = rotate_box(box, Rotation::deg90, w, h);
          break;
        case RigidTransform::rot180:
          img = rotate_image(src, Rotation::deg180);
          box = rotate_box(box, Rotation::deg180, w, h);
          break;
        case RigidTransform::rot270:
          img = rotate_image(src, Rotation::deg270);
          box = rotate_box(box, Rotation::deg270, w, h);
          break;
        case RigidTransform::flip_h:
          img = flip_image(src, FlipAxis::horizontal);
          box = flip_box(box, FlipAxis::horizontal, w, h);
          break;
        case RigidTransform::flip_v:
          img = flip_image(src, FlipAxis::vertical);
          box = flip_box(box, FlipAxis::vertical, w, h);
          break;
      }
      const auto clipped = clip_to_frame(box, img.width, img.height);
      if (!clipped) continue;
      regions.push_back({std::move(img), *clipped});
    }
  }
  return regions;
}

template <DetectorContract M>
struct FpLearnResult {
  M model;
  std::vector<FPRecord> records;
};

/// The automatic false-positive learning loop: collect high-confidence
/// detections from polyp-free video, augment them, and retrain the model
/// with them as negatives. Positive exemplars are unchanged, so no
/// region's score can increase.
template <DetectorContract M>
FpLearnResult<M> fp_learn(M model, const std::vector<AnnotatedFrame>& negative_frames,
                          const PostLearnConfig& cfg) {
  auto records = collect_false_positives(model, negative_frames, cfg);
  auto regions = augment_fp_records(records, negative_frames, cfg);
  model = train_negative(std::move(model), regions);
  return {std::move(model), std::move(records)};
}

template <DetectorContract M>
struct OfflineLearnResult {
  M model;
  std::vector<FPRecord> reliable_regions;
};

/// Video-specific offline learning: detect over the whole video, keep the
/// detections at or above the reliability threshold, pseudo-label them by
/// rasterizing their boxes into masks, augment those frames, and retrain
/// with them as additional positives. Ground truth on the input frames is
/// ignored (withheld); no negative exemplars are added. The returned model
/// is meant for a second pass over the same video.
template <DetectorContract M>
OfflineLearnResult<M> offline_learn(M model, const std::vector<AnnotatedFrame>& video,
                                    const PostLearnConfig& cfg,
                                    const SamplingConfig& sampling) {
  cfg.validate();
  if (video.empty()) throw DataError("empty video");

  std::vector<FPRecord> reliable;
  std::vector<AnnotatedFrame> pseudo;
  for (const auto& f : video) {
    std::vector<Annotation> anns;
    for (const auto& d : detect(model, f.image)) {
      if (d.score < cfg.reliable_score_threshold) continue;
      reliable.push_back({f.frame_id, d.box, d.score});
      if (auto m = rasterize_box(d.box, f.image.width, f.image.height))
        anns.push_back(Annotation::from_mask(std::move(*m)));
    }
    if (!anns.empty())
      pseudo.emplace_back(f.frame_id, f.image, std::move(anns));
  }

  std::vector<AnnotatedFrame> augmented;
  for (const auto& f : pseudo) {
    auto outs = apply_strategy(f, cfg.offline_augmentation);
    for (auto& o : outs) augmented.push_back(std::move(o));
  }
  model = train_positive(std::move(model), augmented, sampling, /*add_negatives=*/false);
  return {std::move(model), std::move(reliable)};
}

}  // namespace polydet
