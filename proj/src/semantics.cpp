#include "poseverify/semantics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pv {

Superclass superclass_from_name(const std::string& name) {
  if (name == "people") return Superclass::People;
  if (name == "transient") return Superclass::Transient;
  if (name == "stable") return Superclass::Stable;
  if (name == "fixed") return Superclass::Fixed;
  if (name == "outdoor") return Superclass::Outdoor;
  throw std::runtime_error("unknown superclass name: " + name);
}

std::string superclass_name(Superclass s) {
  switch (s) {
    case Superclass::People: return "people";
    case Superclass::Transient: return "transient";
    case Superclass::Stable: return "stable";
    case Superclass::Fixed: return "fixed";
    case Superclass::Outdoor: return "outdoor";
  }
  return "?";
}

Superclass ClassTable::lookup(int class_id) const {
  auto it = mapping.find(class_id);
  if (it == mapping.end()) {
    throw std::runtime_error("class id not in table: " + std::to_string(class_id));
  }
  return it->second;
}

ClassTable load_class_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open class table: " + path);
  nlohmann::json j;
  in >> j;
  if (!j.is_object()) throw std::runtime_error("class table must be a JSON object");
  ClassTable table;
  for (const auto& [key, value] : j.items()) {
    const int id = std::stoi(key);
    if (table.mapping.count(id)) {
      throw std::runtime_error("duplicate class id: " + key);
    }
    table.mapping[id] = superclass_from_name(value.get<std::string>());
  }
  return table;
}

MaskVariant mask_variant_from_name(const std::string& name) {
  if (name == "A") return MaskVariant::A;
  if (name == "B") return MaskVariant::B;
  if (name == "C") return MaskVariant::C;
  throw std::runtime_error("unknown mask variant: " + name);
}

namespace {

bool informative(Superclass s, MaskVariant v) {
  switch (v) {
    case MaskVariant::A:
      return s == Superclass::Stable || s == Superclass::Fixed;
    case MaskVariant::B:
      return s != Superclass::People;
    case MaskVariant::C:
      return s != Superclass::People && s != Superclass::Transient;
  }
  return true;
}

}  // namespace

SemanticMask build_mask(const LabelMap& labels, const ClassTable& table,
                        MaskVariant variant) {
  SemanticMask mask;
  mask.variant = variant;
  mask.informative = MaskGrid(labels.width, labels.height, 1);
  for (size_t i = 0; i < labels.size(); ++i) {
    const std::uint8_t label = labels.data[i];
    if (label == kInvalidLabel) continue;
    mask.informative.data[i] = informative(table.lookup(label), variant) ? 1 : 0;
  }
  return mask;
}

double psc_score(const PointCloud& cloud, const Pose& pose,
                 const Intrinsics& k, const LabelMap& query_labels) {
  if (!cloud.has_labels()) throw std::invalid_argument("psc_score: unlabeled cloud");
  std::int64_t projected = 0;
  std::int64_t matched = 0;
  #pragma omp parallel for schedule(static) reduction(+ : projected, matched)
  for (std::int64_t i = 0; i < std::int64_t(cloud.size()); ++i) {
    const auto pr = project(cloud.positions[i], pose, k);
    if (!pr) continue;
    const int x = int(std::lround(pr->uv.x()));
    const int y = int(std::lround(pr->uv.y()));
    if (!query_labels.in_bounds(x, y)) continue;
    ++projected;
    const std::uint8_t ql = query_labels(x, y);
    if (ql != kInvalidLabel && ql == cloud.labels[i]) ++matched;
  }
  return projected == 0 ? 0.0 : double(matched) / double(projected);
}

}  // namespace pv
