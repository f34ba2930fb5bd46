#include "poseverify/dense_descriptor.hpp"

#include <cmath>
#include <stdexcept>

namespace pv {

namespace {

constexpr int kCells = 4;
constexpr int kBins = 8;

std::vector<double> luma(const ColorImage& img) {
  std::vector<double> g(img.size());
  for (size_t i = 0; i < img.size(); ++i) {
    const Vec3f& c = img.data[i];
    g[i] = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
  }
  return g;
}

void describe_site(const std::vector<double>& gray, int w, int h, int x0,
                   int y0, int patch, double* desc) {
  const int cell = patch / kCells;
  for (int i = 0; i < kCells * kCells * kBins; ++i) desc[i] = 0.0;
  for (int py = 0; py < patch; ++py) {
    const int y = y0 + py;
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int px = 0; px < patch; ++px) {
      const int x = x0 + px;
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      const double gx = gray[size_t(y) * w + xp] - gray[size_t(y) * w + xm];
      const double gy = gray[size_t(yp) * w + x] - gray[size_t(ym) * w + x];
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += 2.0 * M_PI;
      const double bin_pos = angle / (2.0 * M_PI) * kBins;
      const int b0 = int(bin_pos) % kBins;
      const int b1 = (b0 + 1) % kBins;
      const double f = bin_pos - std::floor(bin_pos);
      const int cx = px / cell;
      const int cy = py / cell;
      double* hist = desc + (cy * kCells + cx) * kBins;
      hist[b0] += mag * (1.0 - f);
      hist[b1] += mag * f;
    }
  }
}

void normalize_site(double* desc, int dim, NormMode mode) {
  if (mode == NormMode::RootSift) {
    double l1 = 0.0;
    for (int i = 0; i < dim; ++i) l1 += desc[i];
    if (l1 <= 0.0) return;
    for (int i = 0; i < dim; ++i) desc[i] = std::sqrt(desc[i] / l1);
  }
  double l2 = 0.0;
  for (int i = 0; i < dim; ++i) l2 += desc[i] * desc[i];
  if (l2 <= 0.0) return;
  const double inv = 1.0 / std::sqrt(l2);
  for (int i = 0; i < dim; ++i) desc[i] *= inv;
}

DescriptorMap extract_impl(const ColorImage& image, int stride, int patch,
                           NormMode mode, bool parallel) {
  if (patch % 2 != 0 || patch < kCells) {
    throw std::invalid_argument("extract_dense: patch must be even and >= 4");
  }
  if (image.width < patch || image.height < patch) {
    throw std::invalid_argument("extract_dense: image smaller than patch");
  }
  DescriptorMap map;
  map.stride = stride;
  map.patch = patch;
  map.mode = mode;
  map.grid_width = (image.width - patch) / stride + 1;
  map.grid_height = (image.height - patch) / stride + 1;
  map.data.assign(size_t(map.grid_width) * map.grid_height * map.dim, 0.0);
  const auto gray = luma(image);

  #pragma omp parallel for schedule(static) if (parallel)
  for (int gy = 0; gy < map.grid_height; ++gy) {
    for (int gx = 0; gx < map.grid_width; ++gx) {
      double* desc =
          map.data.data() + (size_t(gy) * map.grid_width + gx) * map.dim;
      describe_site(gray, image.width, image.height, gx * stride, gy * stride,
                    patch, desc);
      normalize_site(desc, map.dim, mode);
    }
  }
  return map;
}

void check_shapes(const DescriptorMap& a, const DescriptorMap& b) {
  if (a.grid_width != b.grid_width || a.grid_height != b.grid_height ||
      a.dim != b.dim) {
    throw std::invalid_argument("descriptor maps: shape mismatch");
  }
}

}  // namespace

bool DescriptorMap::is_zero(int gx, int gy) const {
  const double* d = at(gx, gy);
  for (int i = 0; i < dim; ++i) {
    if (d[i] != 0.0) return false;
  }
  return true;
}

DescriptorMap extract_dense(const ColorImage& image, int stride, int patch,
                            NormMode mode) {
  return extract_impl(image, stride, patch, mode, true);
}

namespace serial {
DescriptorMap extract_dense(const ColorImage& image, int stride, int patch,
                            NormMode mode) {
  return extract_impl(image, stride, patch, mode, false);
}
}  // namespace serial

SimilarityMap similarity_inverse_distance(const DescriptorMap& a,
                                          const DescriptorMap& b,
                                          double epsilon) {
  check_shapes(a, b);
  SimilarityMap out;
  out.score = Grid<float>(a.grid_width, a.grid_height, 0.0f);
  out.validity = MaskGrid(a.grid_width, a.grid_height, 0);
  for (int gy = 0; gy < a.grid_height; ++gy) {
    for (int gx = 0; gx < a.grid_width; ++gx) {
      if (a.is_zero(gx, gy) || b.is_zero(gx, gy)) continue;
      const double* da = a.at(gx, gy);
      const double* db = b.at(gx, gy);
      double d2 = 0.0;
      for (int i = 0; i < a.dim; ++i) {
        const double d = da[i] - db[i];
        d2 += d * d;
      }
      out.score(gx, gy) = float(1.0 / std::max(std::sqrt(d2), epsilon));
      out.validity(gx, gy) = 1;
    }
  }
  return out;
}

SimilarityMap similarity_cosine(const DescriptorMap& a,
                                const DescriptorMap& b) {
  check_shapes(a, b);
  SimilarityMap out;
  out.score = Grid<float>(a.grid_width, a.grid_height, 0.0f);
  out.validity = MaskGrid(a.grid_width, a.grid_height, 0);
  for (int gy = 0; gy < a.grid_height; ++gy) {
    for (int gx = 0; gx < a.grid_width; ++gx) {
      if (a.is_zero(gx, gy) || b.is_zero(gx, gy)) continue;
      const double* da = a.at(gx, gy);
      const double* db = b.at(gx, gy);
      double na = 0.0, nb = 0.0, dot = 0.0;
      for (int i = 0; i < a.dim; ++i) {
        na += da[i] * da[i];
        nb += db[i] * db[i];
        dot += da[i] * db[i];
      }
      const double s = dot / std::sqrt(na * nb);
      out.score(gx, gy) = float(std::clamp(s, -1.0, 1.0));
      out.validity(gx, gy) = 1;
    }
  }
  return out;
}

}  // namespace pv
