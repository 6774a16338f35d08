#pragma once

#include <stdexcept>

#include "polydet/geometry.hpp"

namespace polydet {

/// A scored region: the detector's unit of output.
struct Detection {
  BoundingBox box;
  double score = 0.0;

  Detection() = default;
  Detection(BoundingBox b, double s) : box(b), score(s) {
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("detection score must be in [0,1]");
  }

  bool operator==(const Detection& o) const { return box == o.box && score == o.score; }
};

}  // namespace polydet
