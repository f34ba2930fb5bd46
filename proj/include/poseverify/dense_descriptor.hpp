#pragma once

#include <vector>

#include "poseverify/image.hpp"
#include "poseverify/similarity.hpp"

namespace pv {

enum class NormMode { L2, RootSift };

// Dense gradient-orientation descriptors on a regular grid. Sites are laid
// out row-major; site (gx,gy) covers pixels [gx*stride, gx*stride+patch).
struct DescriptorMap {
  int grid_width = 0;
  int grid_height = 0;
  int dim = 128;
  int stride = 4;
  int patch = 16;
  NormMode mode = NormMode::RootSift;
  std::vector<double> data;  // grid_height * grid_width * dim

  const double* at(int gx, int gy) const {
    return data.data() + (size_t(gy) * grid_width + gx) * dim;
  }
  bool is_zero(int gx, int gy) const;
  // Image pixel at the center of a site's window.
  int center_x(int gx) const { return gx * stride + patch / 2; }
  int center_y(int gy) const { return gy * stride + patch / 2; }
};

// 4x4 spatial cells x 8 orientation bins over a patch-sized window at every
// stride-spaced site; gradients of the luma image, bilinear orientation
// binning. RootSift mode L1-normalizes, takes the square root, and
// L2-normalizes. Throws if the image is smaller than the patch.
DescriptorMap extract_dense(const ColorImage& image, int stride = 4,
                            int patch = 16, NormMode mode = NormMode::RootSift);

// score = 1 / max(||a - b||, epsilon); invalid where either side is a zero
// descriptor.
SimilarityMap similarity_inverse_distance(const DescriptorMap& a,
                                          const DescriptorMap& b,
                                          double epsilon = 1e-6);

// Dot product of L2-normalized descriptors, in [-1,1].
SimilarityMap similarity_cosine(const DescriptorMap& a, const DescriptorMap& b);

namespace serial {
DescriptorMap extract_dense(const ColorImage& image, int stride = 4,
                            int patch = 16, NormMode mode = NormMode::RootSift);
}

}  // namespace pv
