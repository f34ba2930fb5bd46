#include "poseverify/normal_maps.hpp"

#include <cmath>
#include <stdexcept>

namespace pv {

namespace {

void fit_pixel(const DepthMap& depth, const Intrinsics& k, int window, int x,
               int y, NormalMap& out) {
  const float d0 = depth(x, y);
  if (d0 <= 0.0f) return;
  const int r = window / 2;
  Eigen::Vector3d pts[25 * 25];
  int n = 0;
  for (int dy = -r; dy <= r; ++dy) {
    const int yy = y + dy;
    if (yy < 0 || yy >= depth.height) continue;
    for (int dx = -r; dx <= r; ++dx) {
      const int xx = x + dx;
      if (xx < 0 || xx >= depth.width) continue;
      const float d = depth(xx, yy);
      if (d <= 0.0f) continue;
      if (std::abs(d - d0) > 0.1f * d0) continue;  // depth discontinuity
      pts[n].x() = (xx - k.cx) / k.fx * d;
      pts[n].y() = (yy - k.cy) / k.fy * d;
      pts[n].z() = d;
      ++n;
    }
  }
  if (n < 6) return;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) mean += pts[i];
  mean /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d d = pts[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d normal = es.eigenvectors().col(0);
  // Viewing ray through the pixel; orient the normal toward the camera.
  const Eigen::Vector3d ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
  if (normal.dot(ray) > 0.0) normal = -normal;
  normal.normalize();
  out.normal(x, y) = {float(normal.x()), float(normal.y()), float(normal.z())};
  out.validity(x, y) = 1;
}

NormalMap normals_impl(const DepthMap& depth, const Intrinsics& k, int window,
                       bool parallel) {
  if (window < 3 || window % 2 == 0 || window > 25) {
    throw std::invalid_argument("normals_from_depth: window must be odd, in [3,25]");
  }
  NormalMap out;
  out.normal = Grid<Vec3f>(depth.width, depth.height, {0, 0, 0});
  out.validity = MaskGrid(depth.width, depth.height, 0);
  if (parallel) {
    #pragma omp parallel for schedule(static)
    for (int y = 0; y < depth.height; ++y) {
      for (int x = 0; x < depth.width; ++x) fit_pixel(depth, k, window, x, y, out);
    }
  } else {
    for (int y = 0; y < depth.height; ++y) {
      for (int x = 0; x < depth.width; ++x) fit_pixel(depth, k, window, x, y, out);
    }
  }
  return out;
}

}  // namespace

NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& k,
                             int window) {
  return normals_impl(depth, k, window, true);
}

namespace serial {
NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& k,
                             int window) {
  return normals_impl(depth, k, window, false);
}
}  // namespace serial

SimilarityMap normal_similarity(const NormalMap& nq, const NormalMap& nd) {
  if (!nq.normal.same_shape(nd.normal)) {
    throw std::invalid_argument("normal_similarity: shape mismatch");
  }
  SimilarityMap out;
  out.score = Grid<float>(nq.normal.width, nq.normal.height, 0.0f);
  out.validity = MaskGrid(nq.normal.width, nq.normal.height, 0);
  for (size_t i = 0; i < nq.normal.size(); ++i) {
    if (!nq.validity.data[i] || !nd.validity.data[i]) continue;
    const Vec3f& a = nq.normal.data[i];
    const Vec3f& b = nd.normal.data[i];
    float s = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    out.score.data[i] = std::clamp(s, -1.0f, 1.0f);
    out.validity.data[i] = 1;
  }
  return out;
}

NormalMap normal_map_from_view(const RenderedView& v) {
  if (!v.has_normals) {
    throw std::invalid_argument("rendered view carries no normals");
  }
  NormalMap out;
  out.normal = v.normal;
  out.validity = v.validity;
  return out;
}

}  // namespace pv
