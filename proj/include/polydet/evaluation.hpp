#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "polydet/detection.hpp"
#include "polydet/geometry.hpp"

namespace polydet {

/// Frame-level outcome counts. tn is 0 or 1: a frame is a true negative
/// only when it has no ground truth and no detections.
struct FrameResult {
  std::string frame_id;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;
  double processing_time = 0.0;  // seconds, detection only
};

/// Aggregated counts, rate metrics (percent), and the video metrics.
/// Video fields are absent for still-frame corpora; mpt is absent when no
/// timing data was recorded.
struct MetricReport {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;
  double pre = 0.0;
  double rec = 0.0;
  double spe = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  std::optional<double> pdr;         // percent
  std::optional<double> rt_frames;
  std::optional<double> rt_seconds;
  std::optional<double> mpt;         // seconds per frame
};

struct EvalConfig {
  double fps = 25.0;

  void validate() const {
    if (!(fps > 0.0)) throw ConfigError("fps must be positive");
  }
};

/// Classify one frame's detections against its ground-truth masks using
/// the centroid-in-mask rule. A mask is a TP when at least one detection
/// centroid falls inside it (one TP per polyp); a detection matches the
/// first mask containing its centroid in annotation order. Detections
/// inside no mask are FPs. Extra detections on an already-matched mask are
/// neither TP nor FP unless duplicates_as_fp is set. Unmatched masks are
/// FNs, and a frame with no masks and no detections is the single TN case.
inline FrameResult classify_frame(const std::vector<Detection>& dets,
                                  const std::vector<BinaryMask>& gts,
                                  bool duplicates_as_fp = false) {
  FrameResult r;
  std::vector<bool> matched(gts.size(), false);
  for (const auto& d : dets) {
    const Point c = centroid(d.box);
    std::size_t first = gts.size();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (contains(gts[j], c)) {
        first = j;
        break;
      }
    }
    if (first == gts.size()) {
      ++r.fp;
    } else if (!matched[first]) {
      matched[first] = true;
      ++r.tp;
    } else if (duplicates_as_fp) {
      ++r.fp;
    }
  }
  r.fn = static_cast<int>(gts.size()) - r.tp;
  r.tn = (gts.empty() && dets.empty()) ? 1 : 0;
  return r;
}

/// Pre = TP/(TP+FP), Rec = TP/(TP+FN), Spe = TN/(FP+TN), as percentages,
/// with F1 = 2PR/(P+R) and F2 = 5PR/(4P+R). Metrics with a zero
/// denominator are 0, and the F-scores are 0 when Pre+Rec is 0.
inline MetricReport metrics_from_counts(long long tp, long long fp, long long fn,
                                        long long tn) {
  MetricReport m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.pre = tp + fp > 0 ? 100.0 * tp / (tp + fp) : 0.0;
  m.rec = tp + fn > 0 ? 100.0 * tp / (tp + fn) : 0.0;
  m.spe = fp + tn > 0 ? 100.0 * tn / (fp + tn) : 0.0;
  if (m.pre + m.rec > 0.0) {
    m.f1 = 2.0 * m.pre * m.rec / (m.pre + m.rec);
    m.f2 = 5.0 * m.pre * m.rec / (4.0 * m.pre + m.rec);
  }
  return m;
}

/// Sum frame results and derive the rate metrics.
inline MetricReport aggregate(const std::vector<FrameResult>& results) {
  if (results.empty()) throw DataError("no frame results to aggregate");
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& r : results) {
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    tn += r.tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

/// Per-video detection rate and reaction time. rt is absent when the polyp
/// was never detected (PDR 0).
struct VideoMetrics {
  double pdr = 0.0;  // percent
  std::optional<double> rt_frames;
  std::optional<double> rt_seconds;
};

/// PDR is 100% iff any frame scores a TP. RT is the frame delay between
/// the polyp's first appearance and the first TP, also expressed in
/// seconds at the configured frame rate. Results must be in sequence
/// order; throws when the sequence contains no polyp frames.
inline VideoMetrics video_metrics(const std::vector<FrameResult>& ordered,
                                  std::size_t first_polyp_frame_index,
                                  const EvalConfig& cfg) {
  cfg.validate();
  bool any_polyp = false;
  for (const auto& r : ordered) any_polyp = any_polyp || (r.tp + r.fn > 0);
  if (!any_polyp) throw DataError("not a positive sequence");

  VideoMetrics vm;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (ordered[i].tp >= 1) {
      vm.pdr = 100.0;
      vm.rt_frames = static_cast<double>(i) - static_cast<double>(first_polyp_frame_index);
      vm.rt_seconds = *vm.rt_frames / cfg.fps;
      break;
    }
  }
  return vm;
}

/// Combine per-video metrics: PDR averages over all videos, RT averages
/// over the videos that detected their polyp.
inline VideoMetrics aggregate_videos(const std::vector<VideoMetrics>& videos,
                                     const EvalConfig& cfg) {
  cfg.validate();
  if (videos.empty()) throw DataError("no videos to aggregate");
  VideoMetrics out;
  double pdr_sum = 0.0, rt_sum = 0.0;
  std::size_t rt_n = 0;
  for (const auto& v : videos) {
    pdr_sum += v.pdr;
    if (v.rt_frames) {
      rt_sum += *v.rt_frames;
      ++rt_n;
    }
  }
  out.pdr = pdr_sum / static_cast<double>(videos.size());
  if (rt_n > 0) {
    out.rt_frames = rt_sum / static_cast<double>(rt_n);
    out.rt_seconds = *out.rt_frames / cfg.fps;
  }
  return out;
}

/// Arithmetic mean of per-frame detection times, in seconds.
inline double measure_mpt(const std::vector<double>& times) {
  if (times.empty()) throw DataError("no processing times recorded");
  double s = 0.0;
  for (double t : times) s += t;
  return s / static_cast<double>(times.size());
}

namespace detail {

inline std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

/// Machine-readable report: one "name value" record per line. Counts print
/// as integers, everything else with three decimals; absent fields are
/// omitted. Field names: tp fp fn tn precision_pct recall_pct
/// specificity_pct f1_pct f2_pct pdr_pct rt_frames rt_seconds mpt_seconds.
inline std::string render_records(const MetricReport& m) {
  std::string out;
  out += "tp " + std::to_string(m.tp) + "\n";
  out += "fp " + std::to_string(m.fp) + "\n";
  out += "fn " + std::to_string(m.fn) + "\n";
  out += "tn " + std::to_string(m.tn) + "\n";
  out += "precision_pct " + detail::fmt3(m.pre) + "\n";
  out += "recall_pct " + detail::fmt3(m.rec) + "\n";
  out += "specificity_pct " + detail::fmt3(m.spe) + "\n";
  out += "f1_pct " + detail::fmt3(m.f1) + "\n";
  out += "f2_pct " + detail::fmt3(m.f2) + "\n";
  if (m.pdr) out += "pdr_pct " + detail::fmt3(*m.pdr) + "\n";
  if (m.rt_frames) out += "rt_frames " + detail::fmt3(*m.rt_frames) + "\n";
  if (m.rt_seconds) out += "rt_seconds " + detail::fmt3(*m.rt_seconds) + "\n";
  if (m.mpt) out += "mpt_seconds " + detail::fmt3(*m.mpt) + "\n";
  return out;
}

/// Human-readable summary table.
inline std::string render_table(const MetricReport& m) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%8s %8s %8s %8s %8s %8s %8s %8s %8s\n", "TP", "FP",
                "FN", "TN", "Pre(%)", "Rec(%)", "Spe(%)", "F1(%)", "F2(%)");
  out += buf;
  std::snprintf(buf, sizeof buf,
                "%8lld %8lld %8lld %8lld %8.1f %8.1f %8.1f %8.1f %8.1f\n", m.tp, m.fp,
                m.fn, m.tn, m.pre, m.rec, m.spe, m.f1, m.f2);
  out += buf;
  if (m.pdr) out += "PDR: " + detail::fmt3(*m.pdr) + "%\n";
  if (m.rt_frames)
    out += "RT: " + detail::fmt3(*m.rt_frames) + " frames, " +
           detail::fmt3(*m.rt_seconds) + " s\n";
  if (m.mpt) out += "MPT: " + detail::fmt3(*m.mpt) + " s/frame\n";
  return out;
}

}  // namespace polydet
