#pragma once

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polydet/frame.hpp"
#include "polydet/png_io.hpp"

namespace polydet {

enum class DatasetKind { still, video };

/// One discovered frame: the image file and its optional mask file.
struct DatasetEntry {
  std::string frame_id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
};

/// Frames discovered under <root>/frames with masks paired by shared stem
/// under <root>/masks, ordered by zero-padded lexicographic frame id.
struct DatasetManifest {
  std::filesystem::path root;
  DatasetKind kind = DatasetKind::still;
  double fps = 25.0;
  std::vector<DatasetEntry> frames;

  std::size_t size() const { return frames.size(); }
};

namespace detail {

inline bool supported_image(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
  return ext == ".png" || ext == ".bmp";
}

inline std::map<std::string, std::filesystem::path> scan_stems(
    const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file() || !supported_image(e.path())) continue;
    const std::string stem = e.path().stem().string();
    if (out.count(stem))
      throw DataError("duplicate stems: " + stem + " in " + dir.string());
    out[stem] = e.path();
  }
  return out;
}

}  // namespace detail

/// Discover a dataset directory. Frames without a mask file are negative
/// frames. Throws FileError("no frames found ...") on an empty or missing
/// frames directory and DataError on duplicate stems.
inline DatasetManifest load_dataset(const std::filesystem::path& root, DatasetKind kind,
                                    double fps = 25.0) {
  DatasetManifest m;
  m.root = root;
  m.kind = kind;
  m.fps = fps;
  const auto images = detail::scan_stems(root / "frames");
  if (images.empty()) throw FileError("no frames found in " + root.string());
  const auto masks = detail::scan_stems(root / "masks");
  for (const auto& [stem, path] : images) {  // std::map iterates in sorted order
    DatasetEntry e{stem, path, std::nullopt};
    const auto it = masks.find(stem);
    if (it != masks.end()) e.mask_path = it->second;
    m.frames.push_back(std::move(e));
  }
  return m;
}

/// Split a mask into its 8-connected components, each returned as a
/// frame-sized mask, ordered by first pixel in row-major scan order.
inline std::vector<BinaryMask> connected_components(const BinaryMask& m) {
  std::vector<BinaryMask> comps;
  std::vector<std::uint8_t> seen(m.bitmap.size(), 0);
  for (int sy = 0; sy < m.height; ++sy) {
    for (int sx = 0; sx < m.width; ++sx) {
      const std::size_t si = static_cast<std::size_t>(sy) * m.width + sx;
      if (!m.bitmap[si] || seen[si]) continue;
      BinaryMask comp(m.width, m.height);
      std::deque<std::pair<int, int>> queue{{sx, sy}};
      seen[si] = 1;
      while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        comp.set(x, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * m.width + nx;
            if (!m.bitmap[ni] || seen[ni]) continue;
            seen[ni] = 1;
            queue.emplace_back(nx, ny);
          }
        }
      }
      comps.push_back(std::move(comp));
    }
  }
  return comps;
}

/// Load one frame's pixels and annotations. Each connected component of
/// the mask file becomes its own annotation. Throws DataError on mask /
/// frame dimension mismatches or an all-zero mask file.
inline AnnotatedFrame load_frame(const DatasetManifest& m, std::size_t index) {
  const DatasetEntry& e = m.frames.at(index);
  Image img = read_image(e.image_path);
  std::vector<Annotation> anns;
  if (e.mask_path) {
    const Image mask_img = read_image(*e.mask_path);
    if (mask_img.width != img.width || mask_img.height != img.height)
      throw DataError("dimension mismatch: mask for frame " + e.frame_id +
                      " does not match the frame");
    const BinaryMask mask = image_to_mask(mask_img);
    auto comps = connected_components(mask);
    if (comps.empty()) throw DataError("empty annotation: mask file for frame " + e.frame_id);
    for (auto& c : comps) anns.push_back(Annotation::from_mask(std::move(c)));
  }
  return {e.frame_id, std::move(img), std::move(anns)};
}

inline std::vector<AnnotatedFrame> load_all_frames(const DatasetManifest& m) {
  std::vector<AnnotatedFrame> out;
  out.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.push_back(load_frame(m, i));
  return out;
}

/// Write a frame into a dataset directory: frames/<id>.png plus, when
/// annotated, the union of its masks as masks/<id>.png.
inline void write_frame(const std::filesystem::path& root, const AnnotatedFrame& f) {
  std::filesystem::create_directories(root / "frames");
  write_png((root / "frames" / (f.frame_id + ".png")).string(), f.image);
  if (!f.has_annotations()) return;
  BinaryMask merged(f.image.width, f.image.height);
  for (const auto& a : f.annotations)
    for (std::size_t i = 0; i < merged.bitmap.size(); ++i)
      merged.bitmap[i] = merged.bitmap[i] || a.mask.bitmap[i];
  std::filesystem::create_directories(root / "masks");
  write_png((root / "masks" / (f.frame_id + ".png")).string(), mask_to_image(merged));
}

}  // namespace polydet
