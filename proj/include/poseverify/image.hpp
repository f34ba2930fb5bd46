#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pv {

template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(size_t(w) * h, fill) {}

  T& operator()(int x, int y) { return data[size_t(y) * width + x]; }
  const T& operator()(int x, int y) const { return data[size_t(y) * width + x]; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width == other.width && height == other.height;
  }
  size_t size() const { return data.size(); }
};

using Vec3f = std::array<float, 3>;

using ColorImage = Grid<Vec3f>;       // RGB in [0,1]
using DepthMap = Grid<float>;         // meters; 0 = invalid
using LabelMap = Grid<std::uint8_t>;  // class ids; 255 = invalid
using MaskGrid = Grid<std::uint8_t>;  // 0/1

inline constexpr std::uint8_t kInvalidLabel = 255;

}  // namespace pv
