#include "poseverify/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pv {

bool Pose::is_rigid(double tol) const {
  const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
  return (rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -out.rotation * p.translation;
  return out;
}

std::optional<Projection> project(const Eigen::Vector3d& x_world,
                                  const Pose& pose, const Intrinsics& k) {
  const Eigen::Vector3d xc = pose.apply(x_world);
  if (xc.z() <= 0.0) return std::nullopt;
  Projection pr;
  pr.uv.x() = k.fx * xc.x() / xc.z() + k.cx;
  pr.uv.y() = k.fy * xc.y() / xc.z() + k.cy;
  pr.depth = xc.z();
  return pr;
}

Eigen::Vector3d unproject(const Eigen::Vector2d& uv, double depth,
                          const Pose& pose, const Intrinsics& k) {
  if (depth <= 0.0) throw std::invalid_argument("unproject: depth <= 0");
  Eigen::Vector3d xc;
  xc.x() = (uv.x() - k.cx) / k.fx * depth;
  xc.y() = (uv.y() - k.cy) / k.fy * depth;
  xc.z() = depth;
  return pose.rotation.transpose() * (xc - pose.translation);
}

PoseError pose_error(const Pose& est, const Pose& gt) {
  PoseError e;
  e.position_m = (est.camera_center() - gt.camera_center()).norm();
  const Eigen::Matrix3d rel = est.rotation * gt.rotation.transpose();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  e.rotation_deg = std::acos(c) * 180.0 / M_PI;
  return e;
}

Pose perturb_pose(const Pose& p, double max_trans_m, double max_rot_deg,
                  std::uint64_t seed) {
  if (max_trans_m == 0.0 && max_rot_deg == 0.0) return p;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(-max_trans_m, max_trans_m);
  std::uniform_real_distribution<double> ur(-max_rot_deg, max_rot_deg);
  const Eigen::Vector3d dt(ut(rng), ut(rng), ut(rng));
  const double deg2rad = M_PI / 180.0;
  const double az = ur(rng) * deg2rad;
  const double ay = ur(rng) * deg2rad;
  const double ax = ur(rng) * deg2rad;
  const Eigen::Matrix3d dr =
      (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  Pose out;
  out.rotation = dr * p.rotation;
  const Eigen::Vector3d c = p.camera_center() + dt;
  out.translation = -out.rotation * c;
  return out;
}

Pose pose_from_quat(double qw, double qx, double qy, double qz, double tx,
                    double ty, double tz) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  q.normalize();
  Pose p;
  p.rotation = q.toRotationMatrix();
  p.translation = Eigen::Vector3d(tx, ty, tz);
  return p;
}

void pose_to_quat(const Pose& p, double q[4], double t[3]) {
  Eigen::Quaterniond eq(p.rotation);
  if (eq.w() < 0.0) eq.coeffs() *= -1.0;
  q[0] = eq.w();
  q[1] = eq.x();
  q[2] = eq.y();
  q[3] = eq.z();
  t[0] = p.translation.x();
  t[1] = p.translation.y();
  t[2] = p.translation.z();
}

std::vector<std::pair<std::string, Pose>> read_pose_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose file: " + path);
  std::vector<std::pair<std::string, Pose>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string id;
    double qw, qx, qy, qz, tx, ty, tz;
    if (!(ss >> id >> qw >> qx >> qy >> qz >> tx >> ty >> tz)) {
      throw std::runtime_error("malformed pose line: " + line);
    }
    out.emplace_back(id, pose_from_quat(qw, qx, qy, qz, tx, ty, tz));
  }
  return out;
}

void write_pose_file(const std::string& path,
                     const std::vector<std::pair<std::string, Pose>>& poses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pose file: " + path);
  out << "# image_id qw qx qy qz tx ty tz (camera-from-world)\n";
  char buf[512];
  for (const auto& [id, p] : poses) {
    double q[4], t[3];
    pose_to_quat(p, q, t);
    std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  id.c_str(), q[0], q[1], q[2], q[3], t[0], t[1], t[2]);
    out << buf;
  }
}

}  // namespace pv
