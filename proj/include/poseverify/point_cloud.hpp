#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "poseverify/image.hpp"

namespace pv {

struct PointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Vec3f> colors;
  std::vector<Eigen::Vector3d> normals;  // empty, or one unit vector per point
  std::vector<std::uint8_t> labels;      // empty, or one class id per point

  size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_labels() const { return !labels.empty(); }
};

// ASCII PLY: x y z nx ny nz red green blue label.
void write_ply(const std::string& path, const PointCloud& cloud);
PointCloud read_ply(const std::string& path);

}  // namespace pv
