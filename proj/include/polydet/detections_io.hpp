#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polydet/detection.hpp"
#include "polydet/error.hpp"

namespace polydet {

/// One persisted detection: the frame it belongs to, its box, and score.
struct DetectionRecord {
  std::string frame_id;
  BoundingBox box;
  double score = 0.0;
};

namespace detail {

inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void sort_records(std::vector<DetectionRecord>& recs) {
  std::sort(recs.begin(), recs.end(), [](const DetectionRecord& a, const DetectionRecord& b) {
    if (a.frame_id != b.frame_id) return a.frame_id < b.frame_id;
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    if (a.box.w != b.box.w) return a.box.w < b.box.w;
    return a.box.h < b.box.h;
  });
}

}  // namespace detail

/// Write one record per line: frame_id x y w h score. Box coordinates are
/// printed at full precision and scores with six decimals. Lines are
/// sorted by frame id and then by descending score. Leading '#' lines are
/// the provenance header.
inline void write_detections(const std::filesystem::path& path,
                             std::vector<DetectionRecord> records,
                             const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  for (const auto& line : header) out << "# " << line << "\n";
  detail::sort_records(records);
  char score_buf[32];
  for (const auto& r : records) {
    std::snprintf(score_buf, sizeof score_buf, "%.6f", r.score);
    out << r.frame_id << ' ' << detail::fmt_full(r.box.x) << ' '
        << detail::fmt_full(r.box.y) << ' ' << detail::fmt_full(r.box.w) << ' '
        << detail::fmt_full(r.box.h) << ' ' << score_buf << "\n";
  }
  if (!out) throw FileError("failed writing " + path.string());
}

/// Inverse of write_detections up to the score's printed precision.
/// Malformed lines report their line number.
inline std::vector<DetectionRecord> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<DetectionRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string id;
    double x, y, w, h, score;
    std::string extra;
    if (!(ss >> id >> x >> y >> w >> h >> score) || (ss >> extra))
      throw DataError("malformed detection record at line " + std::to_string(lineno) +
                      " in " + path.string());
    try {
      records.push_back({id, BoundingBox{x, y, w, h}, score});
    } catch (const std::invalid_argument& e) {
      throw DataError("invalid record at line " + std::to_string(lineno) + " in " +
                      path.string() + ": " + e.what());
    }
    if (!(score >= 0.0 && score <= 1.0))
      throw DataError("invalid score at line " + std::to_string(lineno) + " in " +
                      path.string());
  }
  return records;
}

/// Per-frame wall-clock detection times: frame_id seconds.
inline void write_timings(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, double>>& times,
                          const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  for (const auto& line : header) out << "# " << line << "\n";
  char buf[32];
  for (const auto& [id, t] : times) {
    std::snprintf(buf, sizeof buf, "%.9f", t);
    out << id << ' ' << buf << "\n";
  }
}

inline std::vector<std::pair<std::string, double>> read_timings(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string id;
    double t;
    if (!(ss >> id >> t))
      throw DataError("malformed timing record at line " + std::to_string(lineno) +
                      " in " + path.string());
    out.emplace_back(id, t);
  }
  return out;
}

}  // namespace polydet
