#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "polydet/detector.hpp"
#include "polydet/version.hpp"

namespace polydet {

/// Provenance stored alongside a serialized model.
struct ModelMeta {
  std::string toolkit_version = kVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

// Model file layout (little-endian), version 1:
//   8 bytes magic "PDEXMDL\0", u32 format version
//   u32 toolkit version length + bytes, u64 config hash, u64 seed
//   f64 detect_threshold, u32 roi out_h, u32 roi out_w
//   f64 anchor base_size, f64 stride, u32 scale count + f64 each,
//   u32 ratio count + f64 each
//   f64 train_nms_iou, f64 test_nms_iou, u64 max_proposals
//   u64 feature dim, u64 positive count + f64 data, u64 negative count + f64 data
inline constexpr char kModelMagic[8] = {'P', 'D', 'E', 'X', 'M', 'D', 'L', '\0'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError("truncated model file: " + path);
  return v;
}

inline void put_vec(std::ofstream& out, const std::vector<double>& v) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
  for (double d : v) put(out, d);
}

inline std::vector<double> get_vec(std::ifstream& in, const std::string& path) {
  const auto n = get<std::uint32_t>(in, path);
  std::vector<double> v(n);
  for (auto& d : v) d = get<double>(in, path);
  return v;
}

}  // namespace detail

inline void save_model(const std::filesystem::path& path, const ExemplarModel& m,
                       const ModelMeta& meta = {}) {
  m.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  detail::put(out, kModelFormatVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.toolkit_version.size()));
  out.write(meta.toolkit_version.data(),
            static_cast<std::streamsize>(meta.toolkit_version.size()));
  detail::put(out, meta.config_hash);
  detail::put(out, meta.seed);
  detail::put(out, m.detect_threshold);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.roi_cfg.out_h));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.roi_cfg.out_w));
  detail::put(out, m.anchor_cfg.base_size);
  detail::put(out, m.anchor_cfg.stride);
  detail::put_vec(out, m.anchor_cfg.scales);
  detail::put_vec(out, m.anchor_cfg.aspect_ratios);
  detail::put(out, m.proposal_cfg.train_nms_iou);
  detail::put(out, m.proposal_cfg.test_nms_iou);
  detail::put<std::uint64_t>(out, m.proposal_cfg.max_proposals);
  detail::put<std::uint64_t>(out, m.feature_dim());
  const auto dump = [&](const std::vector<std::vector<double>>& list) {
    detail::put<std::uint64_t>(out, list.size());
    for (const auto& e : list)
      for (double d : e) detail::put(out, d);
  };
  dump(m.positive_exemplars);
  dump(m.negative_exemplars);
  if (!out) throw FileError("failed writing " + path.string());
}

struct LoadedModel {
  ExemplarModel model;
  ModelMeta meta;
};

inline LoadedModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FileError("model not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  const std::string p = path.string();

  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    throw DataError("not a model file: " + p);
  const auto version = detail::get<std::uint32_t>(in, p);
  if (version != kModelFormatVersion)
    throw DataError("unsupported model file version " + std::to_string(version));

  LoadedModel out;
  const auto ver_len = detail::get<std::uint32_t>(in, p);
  out.meta.toolkit_version.resize(ver_len);
  in.read(out.meta.toolkit_version.data(), ver_len);
  if (!in) throw DataError("truncated model file: " + p);
  out.meta.config_hash = detail::get<std::uint64_t>(in, p);
  out.meta.seed = detail::get<std::uint64_t>(in, p);

  ExemplarModel& m = out.model;
  m.detect_threshold = detail::get<double>(in, p);
  m.roi_cfg.out_h = static_cast<int>(detail::get<std::uint32_t>(in, p));
  m.roi_cfg.out_w = static_cast<int>(detail::get<std::uint32_t>(in, p));
  m.anchor_cfg.base_size = detail::get<double>(in, p);
  m.anchor_cfg.stride = detail::get<double>(in, p);
  m.anchor_cfg.scales = detail::get_vec(in, p);
  m.anchor_cfg.aspect_ratios = detail::get_vec(in, p);
  m.proposal_cfg.train_nms_iou = detail::get<double>(in, p);
  m.proposal_cfg.test_nms_iou = detail::get<double>(in, p);
  m.proposal_cfg.max_proposals =
      static_cast<std::size_t>(detail::get<std::uint64_t>(in, p));
  const auto dim = detail::get<std::uint64_t>(in, p);
  if (dim != m.feature_dim()) throw DataError("inconsistent feature dimension in " + p);
  const auto load_list = [&](std::vector<std::vector<double>>& list) {
    const auto n = detail::get<std::uint64_t>(in, p);
    list.resize(n);
    for (auto& e : list) {
      e.resize(dim);
      for (auto& d : e) d = detail::get<double>(in, p);
    }
  };
  load_list(m.positive_exemplars);
  load_list(m.negative_exemplars);
  m.validate();
  return out;
}

}  // namespace polydet
