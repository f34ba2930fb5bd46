#pragma once

#include <string>
#include <unordered_map>

#include "poseverify/geometry.hpp"
#include "poseverify/image.hpp"
#include "poseverify/point_cloud.hpp"

namespace pv {

enum class Superclass { People, Transient, Stable, Fixed, Outdoor };

Superclass superclass_from_name(const std::string& name);
std::string superclass_name(Superclass s);

struct ClassTable {
  std::unordered_map<int, Superclass> mapping;

  Superclass lookup(int class_id) const;  // throws on unknown id
  bool contains(int class_id) const { return mapping.count(class_id) != 0; }
};

// JSON file of {"class_id": "superclass_name"}. Rejects unknown superclass
// names and duplicate ids.
ClassTable load_class_table(const std::string& path);

enum class MaskVariant { A, B, C };

MaskVariant mask_variant_from_name(const std::string& name);

// true = informative. A: {stable, fixed} only; B: everything but people;
// C: everything but people and transient.
struct SemanticMask {
  MaskGrid informative;
  MaskVariant variant = MaskVariant::C;
};

// Label 255 (unlabeled) is informative, so unlabeled data degrades to
// unmasked scoring. Throws on a label absent from the table.
SemanticMask build_mask(const LabelMap& labels, const ClassTable& table,
                        MaskVariant variant);

// Projective semantic consistency: fraction of in-bounds projected points
// whose label matches the query label at the hit pixel. No occlusion
// handling. Throws on an unlabeled cloud.
double psc_score(const PointCloud& cloud, const Pose& pose,
                 const Intrinsics& k, const LabelMap& query_labels);

}  // namespace pv
