#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "poseverify/geometry.hpp"
#include "poseverify/image.hpp"
#include "poseverify/scan_graph.hpp"
#include "poseverify/semantics.hpp"
#include "poseverify/verification.hpp"

namespace pv {

// Synthetic class ids; the shipped table maps them onto the superclasses.
enum SynthClass : uint8_t {
  kWall = 0,
  kFloor = 1,
  kCeiling = 2,
  kTable = 3,
  kSofa = 4,
  kChair = 5,
  kBox = 6,
  kPerson = 7,
};

ClassTable synthetic_class_table();

struct SceneConfig {
  double room_w = 8.0, room_d = 6.0, room_h = 3.0;
  double texture_density = 0.5;   // fraction of textured surface cells
  double texture_cell_m = 0.10;
  int furniture_count = 2;        // stable boxes, both epochs
  int transient_count = 2;        // chairs/boxes, subject to churn
  double transient_churn = 0.0;   // per-object removal/move probability
  int person_count = 0;           // query epoch only
  double gain_min = 1.0, gain_max = 1.0;
  std::vector<std::array<double, 3>> scan_positions;  // room center if empty
  double scan_step_deg = 0.75;    // scan angular resolution
  int db_yaws = 4;                // db cutouts per scan position
  int query_count = 5;
  std::vector<Pose> query_poses;  // overrides query_count sampling when set
  int image_width = 160, image_height = 120;
  double focal_px = 120.0;
  std::uint64_t seed = 0;
  bool seed_set = false;          // seed is mandatory

  void validate() const;  // throws std::invalid_argument
};

SceneConfig scene_config_from_json(const std::string& text);
std::string scene_config_to_json(const SceneConfig& cfg);

struct QueryRecord {
  std::string query_id;
  Pose gt_pose;
  ColorImage image;
  DepthMap depth;
  LabelMap labels;
  double gain = 1.0;
};

struct SyntheticDataset {
  Intrinsics intrinsics;
  std::vector<ScanRecord> scans;
  std::vector<DbImageRecord> db_images;
  std::vector<QueryRecord> queries;
  ClassTable table;

  const QueryRecord& query(const std::string& query_id) const;  // throws
};

SyntheticDataset gen_scene(const SceneConfig& cfg);

// GT pose plus n-1 perturbations within the bounds, in seeded-shuffled order
// with ids c00, c01, ... assigned after the shuffle. Each candidate gets the
// nearest db image (by camera center) as source. Renders are left empty.
std::vector<Candidate> gen_candidates(const SyntheticDataset& dataset,
                                      const std::string& query_id, int n,
                                      double max_trans_m, double max_rot_deg,
                                      std::uint64_t seed);

}  // namespace pv
