#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pv {

// Pinhole intrinsics. Pixel (0,0) is the center of the top-left pixel.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
           cx < width && cy >= 0.0 && cy < height;
  }
};

// Rigid camera-from-world transform: X_cam = R * X_world + t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return rotation * x + translation;
  }

  // Position of the camera in world coordinates: -R^T t.
  Eigen::Vector3d camera_center() const {
    return -rotation.transpose() * translation;
  }

  bool is_rigid(double tol = 1e-9) const;
};

struct PoseError {
  double position_m = 0.0;
  double rotation_deg = 0.0;
};

// a after b: (compose(a,b)).apply(X) == a.apply(b.apply(X)).
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

struct Projection {
  Eigen::Vector2d uv;  // pixels; may lie outside the image bounds
  double depth = 0.0;  // camera-frame z, meters
};

// Returns nullopt when the point is behind the camera (z <= 0).
std::optional<Projection> project(const Eigen::Vector3d& x_world,
                                  const Pose& pose, const Intrinsics& k);

// Inverse of project for depth > 0; throws std::invalid_argument otherwise.
Eigen::Vector3d unproject(const Eigen::Vector2d& uv, double depth,
                          const Pose& pose, const Intrinsics& k);

// Position error is camera-center distance; rotation error the angle of
// R_est * R_gt^T, arccos argument clamped to [-1,1].
PoseError pose_error(const Pose& est, const Pose& gt);

// Uniform per-axis draws: translation in [-max_trans_m, +max_trans_m] applied
// to the camera center, ZYX Euler angles in [-max_rot_deg, +max_rot_deg]
// composed onto the rotation. Deterministic for a fixed seed.
Pose perturb_pose(const Pose& p, double max_trans_m, double max_rot_deg,
                  std::uint64_t seed);

// Unit quaternion (w,x,y,z) conversion, camera-from-world.
Pose pose_from_quat(double qw, double qx, double qy, double qz, double tx,
                    double ty, double tz);
void pose_to_quat(const Pose& p, double q[4], double t[3]);

// Pose text file: one record per line, `image_id qw qx qy qz tx ty tz`,
// '#'-prefixed comments. Throws std::runtime_error on malformed input.
std::vector<std::pair<std::string, Pose>> read_pose_file(
    const std::string& path);
void write_pose_file(const std::string& path,
                     const std::vector<std::pair<std::string, Pose>>& poses);

}  // namespace pv
