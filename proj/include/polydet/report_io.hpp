#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polydet/evaluation.hpp"

namespace polydet {

inline void write_report(const std::filesystem::path& path, const MetricReport& m,
                         const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  for (const auto& line : header) out << "# " << line << "\n";
  out << render_records(m);
  if (!out) throw FileError("failed writing " + path.string());
}

inline MetricReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  MetricReport m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name;
    double value;
    if (!(ss >> name >> value))
      throw DataError("malformed report record at line " + std::to_string(lineno) +
                      " in " + path.string());
    if (name == "tp") tp = static_cast<long long>(value);
    else if (name == "fp") fp = static_cast<long long>(value);
    else if (name == "fn") fn = static_cast<long long>(value);
    else if (name == "tn") tn = static_cast<long long>(value);
    else if (name == "pdr_pct") m.pdr = value;
    else if (name == "rt_frames") m.rt_frames = value;
    else if (name == "rt_seconds") m.rt_seconds = value;
    else if (name == "mpt_seconds") m.mpt = value;
    else if (name == "precision_pct" || name == "recall_pct" ||
             name == "specificity_pct" || name == "f1_pct" || name == "f2_pct") {
      // recomputed from counts below
    } else {
      throw DataError("unknown report field '" + name + "' at line " +
                      std::to_string(lineno) + " in " + path.string());
    }
  }
  const auto rates = metrics_from_counts(tp, fp, fn, tn);
  m.tp = rates.tp;
  m.fp = rates.fp;
  m.fn = rates.fn;
  m.tn = rates.tn;
  m.pre = rates.pre;
  m.rec = rates.rec;
  m.spe = rates.spe;
  m.f1 = rates.f1;
  m.f2 = rates.f2;
  return m;
}

/// Merge several reports: counts are summed and the rate metrics derived
/// from the sums; PDR averages over the reports carrying it, RT and MPT
/// over the reports carrying them.
inline MetricReport merge_reports(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw DataError("no reports to merge");
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double pdr_sum = 0, rt_f_sum = 0, rt_s_sum = 0, mpt_sum = 0;
  std::size_t pdr_n = 0, rt_n = 0, mpt_n = 0;
  for (const auto& r : reports) {
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    tn += r.tn;
    if (r.pdr) {
      pdr_sum += *r.pdr;
      ++pdr_n;
    }
    if (r.rt_frames) {
      rt_f_sum += *r.rt_frames;
      rt_s_sum += r.rt_seconds.value_or(0.0);
      ++rt_n;
    }
    if (r.mpt) {
      mpt_sum += *r.mpt;
      ++mpt_n;
    }
  }
  MetricReport m = metrics_from_counts(tp, fp, fn, tn);
  if (pdr_n) m.pdr = pdr_sum / static_cast<double>(pdr_n);
  if (rt_n) {
    m.rt_frames = rt_f_sum / static_cast<double>(rt_n);
    m.rt_seconds = rt_s_sum / static_cast<double>(rt_n);
  }
  if (mpt_n) m.mpt = mpt_sum / static_cast<double>(mpt_n);
  return m;
}

}  // namespace polydet
