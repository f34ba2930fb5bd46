#pragma once

#include "poseverify/geometry.hpp"
#include "poseverify/image.hpp"
#include "poseverify/rendering.hpp"
#include "poseverify/similarity.hpp"

namespace pv {

struct NormalMap {
  Grid<Vec3f> normal;  // camera-frame unit vectors at valid pixels
  MaskGrid validity;
};

// Total-least-squares plane fit over the window x window neighborhood of each
// valid depth pixel (>= 6 points after rejecting relative depth jumps > 10%),
// normal oriented toward the camera. Window must be odd and >= 3.
NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& k,
                             int window = 5);

// Per-pixel cosine similarity, in [-1,1]; invalid where either side is.
SimilarityMap normal_similarity(const NormalMap& nq, const NormalMap& nd);

NormalMap normal_map_from_view(const RenderedView& v);

namespace serial {
NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& k,
                             int window = 5);
}

}  // namespace pv
