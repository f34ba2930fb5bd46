#pragma once

#include <span>
#include <string>
#include <vector>

#include "poseverify/geometry.hpp"
#include "poseverify/image.hpp"
#include "poseverify/point_cloud.hpp"

namespace pv {

// Aligned per-pixel grids produced by view synthesis. Invalid pixels carry
// depth 0, label 255, zero color/normal.
struct RenderedView {
  ColorImage color;
  DepthMap depth;
  Grid<Vec3f> normal;  // camera-frame unit vectors at valid pixels
  LabelMap label;
  MaskGrid validity;
  bool has_normals = false;
  bool has_labels = false;
};

// Z-buffer point-splat rendering. Each surviving point writes a square splat
// of side (2*splat_radius_px+1); the smallest depth wins, equal depths
// (within 1e-6 m) resolved by lowest point index. Clouds with normals get
// back-face culling (camera-frame normal dot view direction > 0 culled).
// Throws std::invalid_argument on an empty cloud.
RenderedView render_view(const PointCloud& cloud, const Pose& pose,
                         const Intrinsics& k, int splat_radius_px = 1);

// Several clouds into one shared z-buffer; point indices run across clouds in
// order, so the tie rule stays global. Throws if all clouds are empty.
RenderedView render_clouds(std::span<const PointCloud* const> clouds,
                           const Pose& pose, const Intrinsics& k,
                           int splat_radius_px = 1);

double invalid_pixel_ratio(const RenderedView& v);

namespace serial {
// Reference implementation: one loop over points, no tiling, no threads.
// Kept as the oracle the parallel kernel is tested against.
RenderedView render_view(const PointCloud& cloud, const Pose& pose,
                         const Intrinsics& k, int splat_radius_px = 1);
RenderedView render_clouds(std::span<const PointCloud* const> clouds,
                           const Pose& pose, const Intrinsics& k,
                           int splat_radius_px = 1);
}  // namespace serial

// Applies the POSEVERIFY_THREADS env cap to OpenMP; call once at startup.
void apply_thread_cap_from_env();

}  // namespace pv
