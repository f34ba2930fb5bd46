#pragma once

#include "poseverify/image.hpp"

namespace pv {

// Per-site similarity grid; scores meaningful only where validity is set.
struct SimilarityMap {
  Grid<float> score;
  MaskGrid validity;
};

}  // namespace pv
