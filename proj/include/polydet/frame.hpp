#pragma once

#include <string>
#include <utility>
#include <vector>

#include "polydet/geometry.hpp"
#include "polydet/image.hpp"

namespace polydet {

/// A ground-truth region: a frame-sized mask plus its tight bounding box.
/// The box always equals mask_bbox of the mask; use from_mask to construct.
struct Annotation {
  BinaryMask mask;
  BoundingBox box;

  static Annotation from_mask(BinaryMask m) {
    BoundingBox b = mask_bbox(m);  // throws on empty masks
    return {std::move(m), b};
  }

  bool operator==(const Annotation& o) const { return mask == o.mask && box == o.box; }
};

/// One dataset record: pixels plus zero or more ground-truth annotations.
/// All masks share the frame's dimensions.
struct AnnotatedFrame {
  std::string frame_id;
  Image image;
  std::vector<Annotation> annotations;

  AnnotatedFrame() = default;
  AnnotatedFrame(std::string id, Image img, std::vector<Annotation> anns = {})
      : frame_id(std::move(id)), image(std::move(img)), annotations(std::move(anns)) {
    for (const auto& a : annotations) {
      if (a.mask.width != image.width || a.mask.height != image.height)
        throw DataError("dimension mismatch: mask does not match frame " + frame_id);
    }
  }

  bool has_annotations() const { return !annotations.empty(); }

  std::vector<BoundingBox> gt_boxes() const {
    std::vector<BoundingBox> out;
    out.reserve(annotations.size());
    for (const auto& a : annotations) out.push_back(a.box);
    return out;
  }

  bool operator==(const AnnotatedFrame& o) const {
    return frame_id == o.frame_id && image == o.image && annotations == o.annotations;
  }
};

}  // namespace polydet
