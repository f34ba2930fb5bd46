#include "poseverify/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace pv {
namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double hash01(uint64_t x) {
  return double(splitmix64(x) >> 11) * 0x1.0p-53;
}

// ---- scene geometry -------------------------------------------------------

struct SynthBox {
  Eigen::Vector3d lo, hi;
  uint8_t label = kBox;
};

struct SynthEllipsoid {
  Eigen::Vector3d center, radii;
  uint8_t label = kPerson;
};

struct EpochGeometry {
  double w = 0, d = 0, h = 0;  // room extents, interior [0,w]x[0,d]x[0,h]
  std::vector<SynthBox> boxes;
  std::vector<SynthEllipsoid> people;
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // toward the ray origin
  uint8_t label = kInvalidLabel;
};

// Exit of a ray starting inside the room box; origin is always interior.
bool hit_room(const EpochGeometry& g, const Eigen::Vector3d& o,
              const Eigen::Vector3d& dir, Hit* hit) {
  const double lo[3] = {0, 0, 0};
  const double hi[3] = {g.w, g.d, g.h};
  double best = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 1e-12) {
      const double t = (hi[a] - o[a]) / dir[a];
      if (t > 0 && t < best) best = t, axis = a, sign = 1;
    } else if (dir[a] < -1e-12) {
      const double t = (lo[a] - o[a]) / dir[a];
      if (t > 0 && t < best) best = t, axis = a, sign = -1;
    }
  }
  if (axis < 0) return false;
  hit->t = best;
  hit->point = o + best * dir;
  hit->normal = Eigen::Vector3d::Zero();
  hit->normal[axis] = -sign;  // inward
  hit->label = axis < 2 ? kWall : (sign < 0 ? kFloor : kCeiling);
  return true;
}

bool hit_box(const SynthBox& b, const Eigen::Vector3d& o,
             const Eigen::Vector3d& dir, Hit* hit) {
  double tmin = 0, tmax = std::numeric_limits<double>::infinity();
  int entry_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-12) {
      if (o[a] < b.lo[a] || o[a] > b.hi[a]) return false;
      continue;
    }
    double t0 = (b.lo[a] - o[a]) / dir[a];
    double t1 = (b.hi[a] - o[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > tmin) tmin = t0, entry_axis = a;
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  if (entry_axis < 0 || tmin <= 1e-9) return false;  // origin inside or behind
  hit->t = tmin;
  hit->point = o + tmin * dir;
  hit->normal = Eigen::Vector3d::Zero();
  hit->normal[entry_axis] = dir[entry_axis] > 0 ? -1.0 : 1.0;
  hit->label = b.label;
  return true;
}

bool hit_ellipsoid(const SynthEllipsoid& e, const Eigen::Vector3d& o,
                   const Eigen::Vector3d& dir, Hit* hit) {
  const Eigen::Vector3d oc = (o - e.center).cwiseQuotient(e.radii);
  const Eigen::Vector3d dc = dir.cwiseQuotient(e.radii);
  const double a = dc.squaredNorm();
  const double b = 2.0 * oc.dot(dc);
  const double c = oc.squaredNorm() - 1.0;
  const double disc = b * b - 4 * a * c;
  if (disc <= 0 || a < 1e-24) return false;
  const double t = (-b - std::sqrt(disc)) / (2 * a);
  if (t <= 1e-9) return false;
  hit->t = t;
  hit->point = o + t * dir;
  hit->normal =
      (hit->point - e.center).cwiseQuotient(e.radii.cwiseAbs2()).normalized();
  hit->label = e.label;
  return true;
}

bool raycast(const EpochGeometry& g, const Eigen::Vector3d& o,
             const Eigen::Vector3d& dir, Hit* best) {
  if (!hit_room(g, o, dir, best)) return false;
  Hit h;
  for (const auto& box : g.boxes) {
    if (hit_box(box, o, dir, &h) && h.t < best->t) *best = h;
  }
  for (const auto& person : g.people) {
    if (hit_ellipsoid(person, o, dir, &h) && h.t < best->t) *best = h;
  }
  return true;
}

// ---- procedural texture ---------------------------------------------------

// Seeded luma noise on a 3D cell grid; the hit point is pushed slightly off
// the surface along its normal so cell indices are stable on axis planes.
// Grayscale with luma <= 0.7 keeps illumination gains up to 1.4 clamp-free.
Vec3f surface_color(const Eigen::Vector3d& point, const Eigen::Vector3d& normal,
                    double cell_m, double density, uint64_t tex_seed) {
  const Eigen::Vector3d q = point + 0.01 * normal;
  uint64_t h = tex_seed;
  for (int a = 0; a < 3; ++a) {
    h = splitmix64(h ^ uint64_t(int64_t(std::floor(q[a] / cell_m)) + (1LL << 32)));
  }
  double luma = 0.5;
  if (hash01(h) < density) luma = 0.2 + 0.5 * hash01(splitmix64(h));
  const float v = float(luma);
  return {v, v, v};
}

// ---- cameras --------------------------------------------------------------

// Camera-from-world pose at center c looking along yaw/pitch, world z up,
// camera axes x-right / y-down / z-forward.
Pose look_pose(const Eigen::Vector3d& c, double yaw, double pitch) {
  const Eigen::Vector3d f(std::cos(pitch) * std::cos(yaw),
                          std::cos(pitch) * std::sin(yaw), std::sin(pitch));
  const Eigen::Vector3d x = Eigen::Vector3d(f.y(), -f.x(), 0).normalized();
  const Eigen::Vector3d y = f.cross(x);
  Pose p;
  p.rotation.row(0) = x;
  p.rotation.row(1) = y;
  p.rotation.row(2) = f;
  p.translation = -p.rotation * c;
  return p;
}

struct RaycastImage {
  ColorImage color;
  DepthMap depth;
  LabelMap labels;
};

RaycastImage raycast_image(const EpochGeometry& g, const Pose& pose,
                           const Intrinsics& k, double cell_m, double density,
                           uint64_t tex_seed, double gain) {
  RaycastImage out;
  out.color = ColorImage(k.width, k.height);
  out.depth = DepthMap(k.width, k.height);
  out.labels = LabelMap(k.width, k.height, kInvalidLabel);
  const Eigen::Matrix3d r_wc = pose.rotation.transpose();
  const Eigen::Vector3d c = pose.camera_center();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      // d_cam.z = 1, so the ray parameter equals camera-frame depth.
      const Eigen::Vector3d d_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      Hit hit;
      if (!raycast(g, c, r_wc * d_cam, &hit)) continue;
      const Vec3f base =
          surface_color(hit.point, hit.normal, cell_m, density, tex_seed);
      out.color(x, y) = {float(base[0] * gain), float(base[1] * gain),
                         float(base[2] * gain)};
      out.depth(x, y) = float(hit.t);
      out.labels(x, y) = hit.label;
    }
  }
  return out;
}

PointCloud sample_scan(const EpochGeometry& g, const Eigen::Vector3d& origin,
                       double step_deg, double cell_m, double density,
                       uint64_t tex_seed) {
  const double step = step_deg * kPi / 180.0;
  const int n_el = std::max(1, int(std::lround(kPi / step)));
  const int n_az = std::max(1, int(std::lround(2 * kPi / step)));
  PointCloud cloud;
  cloud.positions.reserve(size_t(n_el) * n_az);
  for (int i = 0; i < n_el; ++i) {
    const double el = -kPi / 2 + (i + 0.5) * kPi / n_el;
    for (int j = 0; j < n_az; ++j) {
      const double az = j * 2 * kPi / n_az;
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az),
                                std::cos(el) * std::sin(az), std::sin(el));
      Hit hit;
      if (!raycast(g, origin, dir, &hit)) continue;
      cloud.positions.push_back(hit.point);
      cloud.normals.push_back(hit.normal);
      cloud.colors.push_back(
          surface_color(hit.point, hit.normal, cell_m, density, tex_seed));
      cloud.labels.push_back(hit.label);
    }
  }
  return cloud;
}

// ---- placement ------------------------------------------------------------

SynthBox place_box(std::mt19937_64& rng, const SceneConfig& cfg, double min_side,
                   double max_side, double max_height, uint8_t label) {
  std::uniform_real_distribution<double> side(min_side, max_side);
  std::uniform_real_distribution<double> height(min_side, max_height);
  const double sx = side(rng), sy = side(rng), sz = height(rng);
  std::uniform_real_distribution<double> px(0.3, cfg.room_w - 0.3 - sx);
  std::uniform_real_distribution<double> py(0.3, cfg.room_d - 0.3 - sy);
  SynthBox b;
  b.lo = Eigen::Vector3d(px(rng), py(rng), 0.0);
  b.hi = b.lo + Eigen::Vector3d(sx, sy, sz);
  b.label = label;
  return b;
}

bool near_any_object(const EpochGeometry& g, const Eigen::Vector3d& p,
                     double margin) {
  for (const auto& b : g.boxes) {
    if ((p.cwiseMax(b.lo - Eigen::Vector3d::Constant(margin))
             .cwiseMin(b.hi + Eigen::Vector3d::Constant(margin)) -
         p).norm() < 1e-12) {
      return true;
    }
  }
  for (const auto& e : g.people) {
    if (((p - e.center).cwiseQuotient(e.radii + Eigen::Vector3d::Constant(margin)))
            .norm() < 1.0) {
      return true;
    }
  }
  return false;
}

}  // namespace

ClassTable synthetic_class_table() {
  ClassTable t;
  t.mapping = {{kWall, Superclass::Fixed},      {kFloor, Superclass::Fixed},
               {kCeiling, Superclass::Fixed},   {kTable, Superclass::Stable},
               {kSofa, Superclass::Stable},     {kChair, Superclass::Transient},
               {kBox, Superclass::Transient},   {kPerson, Superclass::People}};
  return t;
}

void SceneConfig::validate() const {
  if (room_w <= 1.0 || room_d <= 1.0 || room_h <= 1.0) {
    throw std::invalid_argument("degenerate room dimensions");
  }
  if (texture_density < 0 || texture_density > 1) {
    throw std::invalid_argument("texture_density must be in [0,1]");
  }
  if (texture_cell_m <= 0) throw std::invalid_argument("bad texture cell size");
  if (furniture_count < 0 || transient_count < 0 || person_count < 0) {
    throw std::invalid_argument("negative object count");
  }
  if (transient_churn < 0 || transient_churn > 1) {
    throw std::invalid_argument("transient_churn must be in [0,1]");
  }
  if (gain_min <= 0 || gain_max < gain_min) {
    throw std::invalid_argument("bad gain range");
  }
  if (scan_step_deg <= 0 || scan_step_deg > 10) {
    throw std::invalid_argument("bad scan angular step");
  }
  if (db_yaws < 1 || query_count < 0) throw std::invalid_argument("bad counts");
  if (image_width < 16 || image_height < 16 || focal_px <= 0) {
    throw std::invalid_argument("bad image geometry");
  }
  if (!seed_set) throw std::invalid_argument("seed is mandatory");
  for (const auto& p : scan_positions) {
    if (p[0] <= 0 || p[0] >= room_w || p[1] <= 0 || p[1] >= room_d || p[2] <= 0 ||
        p[2] >= room_h) {
      throw std::invalid_argument("scan position outside room");
    }
  }
}

SceneConfig scene_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SceneConfig cfg;
  if (j.contains("room")) {
    cfg.room_w = j["room"].at(0);
    cfg.room_d = j["room"].at(1);
    cfg.room_h = j["room"].at(2);
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("texture_density", cfg.texture_density);
  get("texture_cell_m", cfg.texture_cell_m);
  get("furniture_count", cfg.furniture_count);
  get("transient_count", cfg.transient_count);
  get("transient_churn", cfg.transient_churn);
  get("person_count", cfg.person_count);
  get("gain_min", cfg.gain_min);
  get("gain_max", cfg.gain_max);
  get("scan_step_deg", cfg.scan_step_deg);
  get("db_yaws", cfg.db_yaws);
  get("query_count", cfg.query_count);
  get("image_width", cfg.image_width);
  get("image_height", cfg.image_height);
  get("focal_px", cfg.focal_px);
  if (j.contains("scan_positions")) {
    for (const auto& p : j["scan_positions"]) {
      cfg.scan_positions.push_back({p.at(0), p.at(1), p.at(2)});
    }
  }
  if (j.contains("query_poses")) {
    for (const auto& p : j["query_poses"]) {
      cfg.query_poses.push_back(pose_from_quat(p.at(0), p.at(1), p.at(2),
                                               p.at(3), p.at(4), p.at(5),
                                               p.at(6)));
    }
  }
  if (j.contains("seed")) {
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.seed_set = true;
  }
  cfg.validate();
  return cfg;
}

std::string scene_config_to_json(const SceneConfig& cfg) {
  nlohmann::json j;
  j["room"] = {cfg.room_w, cfg.room_d, cfg.room_h};
  j["texture_density"] = cfg.texture_density;
  j["texture_cell_m"] = cfg.texture_cell_m;
  j["furniture_count"] = cfg.furniture_count;
  j["transient_count"] = cfg.transient_count;
  j["transient_churn"] = cfg.transient_churn;
  j["person_count"] = cfg.person_count;
  j["gain_min"] = cfg.gain_min;
  j["gain_max"] = cfg.gain_max;
  j["scan_step_deg"] = cfg.scan_step_deg;
  j["db_yaws"] = cfg.db_yaws;
  j["query_count"] = cfg.query_count;
  j["image_width"] = cfg.image_width;
  j["image_height"] = cfg.image_height;
  j["focal_px"] = cfg.focal_px;
  j["seed"] = cfg.seed;
  j["scan_positions"] = nlohmann::json::array();
  for (const auto& p : cfg.scan_positions) {
    j["scan_positions"].push_back({p[0], p[1], p[2]});
  }
  if (!cfg.query_poses.empty()) {
    j["query_poses"] = nlohmann::json::array();
    for (const auto& p : cfg.query_poses) {
      double q[4], t[3];
      pose_to_quat(p, q, t);
      j["query_poses"].push_back({q[0], q[1], q[2], q[3], t[0], t[1], t[2]});
    }
  }
  return j.dump(2) + "\n";
}

const QueryRecord& SyntheticDataset::query(const std::string& query_id) const {
  for (const auto& q : queries) {
    if (q.query_id == query_id) return q;
  }
  throw std::runtime_error("unknown query: " + query_id);
}

SyntheticDataset gen_scene(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const uint64_t tex_seed = splitmix64(cfg.seed ^ 0x7478736565646d65ULL);

  EpochGeometry db_epoch;
  db_epoch.w = cfg.room_w;
  db_epoch.d = cfg.room_d;
  db_epoch.h = cfg.room_h;
  for (int i = 0; i < cfg.furniture_count; ++i) {
    db_epoch.boxes.push_back(
        place_box(rng, cfg, 0.4, 1.0, 1.1, i % 2 ? kSofa : kTable));
  }
  std::vector<SynthBox> transients;
  for (int i = 0; i < cfg.transient_count; ++i) {
    transients.push_back(place_box(rng, cfg, 0.3, 0.6, 0.9, i % 2 ? kBox : kChair));
  }

  // Query-epoch churn: each transient independently kept, removed, or moved.
  EpochGeometry query_epoch = db_epoch;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& t : transients) {
    db_epoch.boxes.push_back(t);
    if (unit(rng) < cfg.transient_churn) {
      if (unit(rng) < 0.5) continue;  // removed at query time
      query_epoch.boxes.push_back(place_box(rng, cfg, 0.3, 0.6, 0.9, t.label));
    } else {
      query_epoch.boxes.push_back(t);
    }
  }
  for (int i = 0; i < cfg.person_count; ++i) {
    SynthEllipsoid person;
    std::uniform_real_distribution<double> px(0.5, cfg.room_w - 0.5);
    std::uniform_real_distribution<double> py(0.5, cfg.room_d - 0.5);
    person.center = Eigen::Vector3d(px(rng), py(rng), 0.85);
    person.radii = Eigen::Vector3d(0.25, 0.25, 0.85);
    query_epoch.people.push_back(person);
  }

  SyntheticDataset out;
  out.table = synthetic_class_table();
  out.intrinsics = {cfg.focal_px,
                    cfg.focal_px,
                    (cfg.image_width - 1) / 2.0,
                    (cfg.image_height - 1) / 2.0,
                    cfg.image_width,
                    cfg.image_height};

  std::vector<Eigen::Vector3d> scan_centers;
  for (const auto& p : cfg.scan_positions) {
    scan_centers.emplace_back(p[0], p[1], p[2]);
  }
  if (scan_centers.empty()) {
    scan_centers.emplace_back(cfg.room_w / 2, cfg.room_d / 2, 1.5);
  }
  for (size_t s = 0; s < scan_centers.size(); ++s) {
    ScanRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "scan%02zu", s);
    rec.scan_id = id;
    rec.origin.translation = -scan_centers[s];
    rec.cloud = sample_scan(db_epoch, scan_centers[s], cfg.scan_step_deg,
                            cfg.texture_cell_m, cfg.texture_density, tex_seed);
    out.scans.push_back(std::move(rec));
  }

  // Perspective db cutouts, raycast against db-epoch geometry so depth maps
  // sit exactly on the generating surfaces.
  for (size_t s = 0; s < scan_centers.size(); ++s) {
    for (int yaw_i = 0; yaw_i < cfg.db_yaws; ++yaw_i) {
      DbImageRecord img;
      char id[32];
      std::snprintf(id, sizeof(id), "db%02zu_%02d", s, yaw_i);
      img.image_id = id;
      img.parent_scan = out.scans[s].scan_id;
      img.intrinsics = out.intrinsics;
      img.pose = look_pose(scan_centers[s], yaw_i * 2 * kPi / cfg.db_yaws, 0.0);
      RaycastImage rc =
          raycast_image(db_epoch, img.pose, out.intrinsics, cfg.texture_cell_m,
                        cfg.texture_density, tex_seed, 1.0);
      img.color = std::move(rc.color);
      img.depth = std::move(rc.depth);
      img.labels = std::move(rc.labels);
      out.db_images.push_back(std::move(img));
    }
  }

  std::uniform_real_distribution<double> qx(0.6, cfg.room_w - 0.6);
  std::uniform_real_distribution<double> qy(0.6, cfg.room_d - 0.6);
  std::uniform_real_distribution<double> qz(1.2, std::min(1.8, cfg.room_h - 0.3));
  std::uniform_real_distribution<double> qyaw(0.0, 2 * kPi);
  std::uniform_real_distribution<double> qpitch(-0.15, 0.15);
  std::uniform_real_distribution<double> qgain(cfg.gain_min, cfg.gain_max);
  const int n_queries = cfg.query_poses.empty() ? cfg.query_count
                                                : int(cfg.query_poses.size());
  for (int i = 0; i < n_queries; ++i) {
    QueryRecord q;
    char id[32];
    std::snprintf(id, sizeof(id), "q%03d", i);
    q.query_id = id;
    if (cfg.query_poses.empty()) {
      Eigen::Vector3d c;
      do {
        c = Eigen::Vector3d(qx(rng), qy(rng), qz(rng));
      } while (near_any_object(db_epoch, c, 0.3) ||
               near_any_object(query_epoch, c, 0.3));
      q.gt_pose = look_pose(c, qyaw(rng), qpitch(rng));
    } else {
      q.gt_pose = cfg.query_poses[size_t(i)];
    }
    q.gain = qgain(rng);
    RaycastImage rc =
        raycast_image(query_epoch, q.gt_pose, out.intrinsics, cfg.texture_cell_m,
                      cfg.texture_density, tex_seed, q.gain);
    q.image = std::move(rc.color);
    q.depth = std::move(rc.depth);
    q.labels = std::move(rc.labels);
    out.queries.push_back(std::move(q));
  }
  return out;
}

std::vector<Candidate> gen_candidates(const SyntheticDataset& dataset,
                                      const std::string& query_id, int n,
                                      double max_trans_m, double max_rot_deg,
                                      std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one candidate");
  const QueryRecord& q = dataset.query(query_id);
  std::mt19937_64 rng(seed);
  std::vector<Candidate> out;
  out.push_back({std::string(), q.gt_pose, std::string(), {}});
  for (int i = 1; i < n; ++i) {
    out.push_back(
        {std::string(), perturb_pose(q.gt_pose, max_trans_m, max_rot_deg, rng()),
         std::string(), {}});
  }
  // Shuffled before ids are assigned so id-order tie-breaking carries no
  // information about which candidate is the GT pose.
  std::shuffle(out.begin(), out.end(), rng);
  for (size_t i = 0; i < out.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "c%02zu", i);
    out[i].candidate_id = id;
    const Eigen::Vector3d c = out[i].pose.camera_center();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& img : dataset.db_images) {
      const double d = (img.pose.camera_center() - c).norm();
      if (d < best) best = d, out[i].source_db_image = img.image_id;
    }
  }
  return out;
}

}  // namespace pv
