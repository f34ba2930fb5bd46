#include "poseverify/point_cloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pv {

void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const size_t n = cloud.size();
  out << "ply\nformat ascii 1.0\nelement vertex " << n << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property uchar label\nend_header\n";
  char buf[256];
  for (size_t i = 0; i < n; ++i) {
    const auto& p = cloud.positions[i];
    const Eigen::Vector3d nrm =
        cloud.has_normals() ? cloud.normals[i] : Eigen::Vector3d::Zero();
    const Vec3f c = cloud.colors.empty() ? Vec3f{0, 0, 0} : cloud.colors[i];
    const int label = cloud.has_labels() ? cloud.labels[i] : kInvalidLabel;
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %d %d %d %d\n",
                  p.x(), p.y(), p.z(), nrm.x(), nrm.y(), nrm.z(),
                  int(std::lround(c[0] * 255)), int(std::lround(c[1] * 255)),
                  int(std::lround(c[2] * 255)), label);
    out << buf;
  }
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  size_t n = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.rfind("element vertex", 0) == 0) {
      n = std::stoull(line.substr(15));
    } else if (line == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw std::runtime_error("bad PLY header: " + path);
  PointCloud cloud;
  cloud.positions.reserve(n);
  cloud.colors.reserve(n);
  cloud.normals.reserve(n);
  cloud.labels.reserve(n);
  bool any_normal = false;
  bool any_label = false;
  for (size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated PLY");
    std::istringstream ss(line);
    double x, y, z, nx, ny, nz;
    int r, g, b, label;
    if (!(ss >> x >> y >> z >> nx >> ny >> nz >> r >> g >> b >> label)) {
      throw std::runtime_error("malformed PLY vertex: " + line);
    }
    cloud.positions.emplace_back(x, y, z);
    cloud.normals.emplace_back(nx, ny, nz);
    cloud.colors.push_back({float(r) / 255.0f, float(g) / 255.0f, float(b) / 255.0f});
    cloud.labels.push_back(std::uint8_t(label));
    any_normal = any_normal || nx != 0.0 || ny != 0.0 || nz != 0.0;
    any_label = any_label || label != kInvalidLabel;
  }
  if (!any_normal) cloud.normals.clear();
  if (!any_label) cloud.labels.clear();
  return cloud;
}

}  // namespace pv
