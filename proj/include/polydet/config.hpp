#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polydet/augmentation.hpp"
#include "polydet/evaluation.hpp"
#include "polydet/post_learning.hpp"
#include "polydet/proposal.hpp"

namespace polydet {

struct DetectorConfig {
  double detect_threshold = 0.9;

  void validate() const {
    if (!(detect_threshold >= 0.0 && detect_threshold <= 1.0))
      throw ConfigError("detect_threshold must be in [0,1]");
  }
};

struct EvaluationSettings {
  double fps = 25.0;
  bool duplicates_as_fp = false;

  EvalConfig eval_config() const { return {fps}; }
};

/// Optimizer settings of the original training recipe, recorded for
/// provenance only; the exemplar detector does not use them.
struct OptimizerProvenance {
  double momentum = 0.9;
  double learning_rate = 1e-3;
  int max_epochs = 30;
};

/// Everything a pipeline run needs, loadable from one JSON document.
/// Unknown keys are rejected; all sub-config invariants are checked on
/// load. All randomness in a run flows from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  AugmentationStrategy augmentation;
  AnchorConfig anchors;
  SamplingConfig sampling;
  ProposalConfig proposals;
  RoiConfig roi;
  DetectorConfig detector;
  PostLearnConfig post_learning;
  EvaluationSettings evaluation;
  OptimizerProvenance optimizer;

  void validate() const {
    anchors.validate();
    sampling.validate();
    proposals.validate();
    roi.validate();
    detector.validate();
    post_learning.validate();
    if (!(evaluation.fps > 0.0)) throw ConfigError("fps must be positive");
    if (!(augmentation.visibility_threshold > 0.0 &&
          augmentation.visibility_threshold <= 1.0))
      throw ConfigError("visibility_threshold must be in (0,1]");
    if (!(augmentation.blur_sigma > 0.0)) throw ConfigError("blur_sigma must be positive");
    for (double g : augmentation.brightness_gains)
      if (!(g > 0.0)) throw ConfigError("brightness gains must be positive");
    for (double z : augmentation.zoom_in_factors)
      if (!(z > 0.0 && z < 1.0)) throw ConfigError("zoom factors must be in (0,1)");
    for (double z : augmentation.zoom_out_factors)
      if (!(z > 0.0 && z < 1.0)) throw ConfigError("zoom factors must be in (0,1)");
    for (double s : augmentation.shear_magnitudes)
      if (!(std::fabs(s) <= 0.5)) throw ConfigError("|shear magnitudes| must be <= 0.5");
  }

  SamplingConfig seeded_sampling() const {
    SamplingConfig s = sampling;
    s.rng_seed = seed;
    return s;
  }

  ExemplarModel make_model() const {
    ExemplarModel m;
    m.detect_threshold = detector.detect_threshold;
    m.roi_cfg = roi;
    m.anchor_cfg = anchors;
    m.proposal_cfg = proposals;
    return m;
  }
};

inline StrategyKind strategy_from_name(const std::string& name) {
  if (name == "none") return StrategyKind::none;
  if (name == "rot") return StrategyKind::rot;
  if (name == "aug-i" || name == "aug1" || name == "augi") return StrategyKind::aug_i;
  if (name == "aug-ii" || name == "aug2" || name == "augii") return StrategyKind::aug_ii;
  throw ConfigError("unknown augmentation strategy: " + name);
}

inline std::string strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::none: return "none";
    case StrategyKind::rot: return "rot";
    case StrategyKind::aug_i: return "aug-i";
    case StrategyKind::aug_ii: return "aug-ii";
  }
  return "none";
}

inline RigidTransform rigid_from_name(const std::string& name) {
  if (name == "identity") return RigidTransform::identity;
  if (name == "rot90") return RigidTransform::rot90;
  if (name == "rot180") return RigidTransform::rot180;
  if (name == "rot270") return RigidTransform::rot270;
  if (name == "fliph") return RigidTransform::flip_h;
  if (name == "flipv") return RigidTransform::flip_v;
  throw ConfigError("unknown transform: " + name);
}

inline std::string rigid_name(RigidTransform t) {
  switch (t) {
    case RigidTransform::identity: return "identity";
    case RigidTransform::rot90: return "rot90";
    case RigidTransform::rot180: return "rot180";
    case RigidTransform::rot270: return "rot270";
    case RigidTransform::flip_h: return "fliph";
    case RigidTransform::flip_v: return "flipv";
  }
  return "identity";
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key: " + where + key);
}

template <typename T>
void assign(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for " + where + key);
  }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::assign;
  using detail::reject_unknown;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(j,
                 {"seed", "augmentation", "anchors", "sampling", "proposals", "roi",
                  "detector", "post_learning", "evaluation", "optimizer"},
                 "");
  RunConfig c;
  assign(j, "seed", c.seed, "");

  if (j.contains("augmentation")) {
    const auto& a = j.at("augmentation");
    reject_unknown(a,
                   {"strategy", "zoom_in_factors", "zoom_out_factors", "shear_magnitudes",
                    "blur_sigma", "brightness_gains", "visibility_threshold"},
                   "augmentation.");
    if (a.contains("strategy"))
      c.augmentation.name = strategy_from_name(a.at("strategy").get<std::string>());
    assign(a, "zoom_in_factors", c.augmentation.zoom_in_factors, "augmentation.");
    assign(a, "zoom_out_factors", c.augmentation.zoom_out_factors, "augmentation.");
    assign(a, "shear_magnitudes", c.augmentation.shear_magnitudes, "augmentation.");
    assign(a, "blur_sigma", c.augmentation.blur_sigma, "augmentation.");
    assign(a, "brightness_gains", c.augmentation.brightness_gains, "augmentation.");
    assign(a, "visibility_threshold", c.augmentation.visibility_threshold, "augmentation.");
  }
  if (j.contains("anchors")) {
    const auto& a = j.at("anchors");
    reject_unknown(a, {"base_size", "scales", "aspect_ratios", "stride"}, "anchors.");
    assign(a, "base_size", c.anchors.base_size, "anchors.");
    assign(a, "scales", c.anchors.scales, "anchors.");
    assign(a, "aspect_ratios", c.anchors.aspect_ratios, "anchors.");
    assign(a, "stride", c.anchors.stride, "anchors.");
  }
  if (j.contains("sampling")) {
    const auto& a = j.at("sampling");
    reject_unknown(a,
                   {"minibatch_size", "positive_fraction", "pos_iou", "neg_iou",
                    "per_gt_argmax"},
                   "sampling.");
    assign(a, "minibatch_size", c.sampling.minibatch_size, "sampling.");
    assign(a, "positive_fraction", c.sampling.positive_fraction, "sampling.");
    assign(a, "pos_iou", c.sampling.pos_iou, "sampling.");
    assign(a, "neg_iou", c.sampling.neg_iou, "sampling.");
    assign(a, "per_gt_argmax", c.sampling.per_gt_argmax, "sampling.");
  }
  if (j.contains("proposals")) {
    const auto& a = j.at("proposals");
    reject_unknown(a, {"train_nms_iou", "test_nms_iou", "max_proposals"}, "proposals.");
    assign(a, "train_nms_iou", c.proposals.train_nms_iou, "proposals.");
    assign(a, "test_nms_iou", c.proposals.test_nms_iou, "proposals.");
    assign(a, "max_proposals", c.proposals.max_proposals, "proposals.");
  }
  if (j.contains("roi")) {
    const auto& a = j.at("roi");
    reject_unknown(a, {"out_h", "out_w"}, "roi.");
    assign(a, "out_h", c.roi.out_h, "roi.");
    assign(a, "out_w", c.roi.out_w, "roi.");
  }
  if (j.contains("detector")) {
    const auto& a = j.at("detector");
    reject_unknown(a, {"detect_threshold"}, "detector.");
    assign(a, "detect_threshold", c.detector.detect_threshold, "detector.");
  }
  if (j.contains("post_learning")) {
    const auto& a = j.at("post_learning");
    reject_unknown(a,
                   {"fp_score_threshold", "reliable_score_threshold", "fp_augmentation",
                    "offline_augmentation"},
                   "post_learning.");
    assign(a, "fp_score_threshold", c.post_learning.fp_score_threshold, "post_learning.");
    assign(a, "reliable_score_threshold", c.post_learning.reliable_score_threshold,
           "post_learning.");
    if (a.contains("fp_augmentation")) {
      c.post_learning.fp_augmentation.clear();
      for (const auto& t : a.at("fp_augmentation"))
        c.post_learning.fp_augmentation.push_back(rigid_from_name(t.get<std::string>()));
    }
    if (a.contains("offline_augmentation")) {
      c.post_learning.offline_augmentation = c.augmentation;
      c.post_learning.offline_augmentation.name =
          strategy_from_name(a.at("offline_augmentation").get<std::string>());
    }
  }
  if (j.contains("evaluation")) {
    const auto& a = j.at("evaluation");
    reject_unknown(a, {"fps", "duplicates_as_fp"}, "evaluation.");
    assign(a, "fps", c.evaluation.fps, "evaluation.");
    assign(a, "duplicates_as_fp", c.evaluation.duplicates_as_fp, "evaluation.");
  }
  if (j.contains("optimizer")) {
    const auto& a = j.at("optimizer");
    reject_unknown(a, {"momentum", "learning_rate", "max_epochs"}, "optimizer.");
    assign(a, "momentum", c.optimizer.momentum, "optimizer.");
    assign(a, "learning_rate", c.optimizer.learning_rate, "optimizer.");
    assign(a, "max_epochs", c.optimizer.max_epochs, "optimizer.");
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["augmentation"] = {{"strategy", strategy_name(c.augmentation.name)},
                       {"zoom_in_factors", c.augmentation.zoom_in_factors},
                       {"zoom_out_factors", c.augmentation.zoom_out_factors},
                       {"shear_magnitudes", c.augmentation.shear_magnitudes},
                       {"blur_sigma", c.augmentation.blur_sigma},
                       {"brightness_gains", c.augmentation.brightness_gains},
                       {"visibility_threshold", c.augmentation.visibility_threshold}};
  j["anchors"] = {{"base_size", c.anchors.base_size},
                  {"scales", c.anchors.scales},
                  {"aspect_ratios", c.anchors.aspect_ratios},
                  {"stride", c.anchors.stride}};
  j["sampling"] = {{"minibatch_size", c.sampling.minibatch_size},
                   {"positive_fraction", c.sampling.positive_fraction},
                   {"pos_iou", c.sampling.pos_iou},
                   {"neg_iou", c.sampling.neg_iou},
                   {"per_gt_argmax", c.sampling.per_gt_argmax}};
  j["proposals"] = {{"train_nms_iou", c.proposals.train_nms_iou},
                    {"test_nms_iou", c.proposals.test_nms_iou},
                    {"max_proposals", c.proposals.max_proposals}};
  j["roi"] = {{"out_h", c.roi.out_h}, {"out_w", c.roi.out_w}};
  j["detector"] = {{"detect_threshold", c.detector.detect_threshold}};
  std::vector<std::string> fp_aug;
  for (auto t : c.post_learning.fp_augmentation) fp_aug.push_back(rigid_name(t));
  j["post_learning"] = {{"fp_score_threshold", c.post_learning.fp_score_threshold},
                        {"reliable_score_threshold", c.post_learning.reliable_score_threshold},
                        {"fp_augmentation", fp_aug},
                        {"offline_augmentation",
                         strategy_name(c.post_learning.offline_augmentation.name)}};
  j["evaluation"] = {{"fps", c.evaluation.fps},
                     {"duplicates_as_fp", c.evaluation.duplicates_as_fp}};
  j["optimizer"] = {{"momentum", c.optimizer.momentum},
                    {"learning_rate", c.optimizer.learning_rate},
                    {"max_epochs", c.optimizer.max_epochs}};
  return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("config not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

/// FNV-1a over the canonical JSON form; stable across runs and platforms.
inline std::uint64_t config_hash(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash_hex(const RunConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(c)));
  return buf;
}

}  // namespace polydet
