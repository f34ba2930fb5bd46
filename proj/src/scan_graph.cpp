#include "poseverify/scan_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "poseverify/rendering.hpp"

namespace pv {

std::vector<std::string> ScanGraph::neighbors(const std::string& image_id) const {
  std::vector<const ScanGraphEdge*> mine;
  for (const auto& e : edges) {
    if (e.image == image_id) mine.push_back(&e);
  }
  if (mine.empty()) throw std::runtime_error("unknown image id: " + image_id);
  std::sort(mine.begin(), mine.end(),
            [](const ScanGraphEdge* a, const ScanGraphEdge* b) {
              if (a->overlap != b->overlap) return a->overlap > b->overlap;
              return a->scan < b->scan;
            });
  std::vector<std::string> out;
  out.reserve(mine.size());
  for (const auto* e : mine) out.push_back(e->scan);
  return out;
}

bool ScanGraph::has_image(const std::string& image_id) const {
  for (const auto& e : edges) {
    if (e.image == image_id) return true;
  }
  return false;
}

ScanGraph build_graph(const std::vector<DbImageRecord>& images,
                      const std::vector<ScanRecord>& scans, int k_nearest,
                      double overlap_threshold, int splat_radius_px) {
  if (scans.empty()) throw std::invalid_argument("build_graph: empty scan list");
  std::unordered_map<std::string, const ScanRecord*> by_id;
  for (const auto& s : scans) by_id[s.scan_id] = &s;
  for (const auto& img : images) {
    if (!by_id.count(img.parent_scan)) {
      throw std::invalid_argument("parent scan missing: " + img.parent_scan);
    }
  }

  std::vector<std::vector<ScanGraphEdge>> per_image(images.size());
  #pragma omp parallel for schedule(dynamic)
  for (std::int64_t ii = 0; ii < std::int64_t(images.size()); ++ii) {
    const DbImageRecord& img = images[ii];
    const Eigen::Vector3d center = img.pose.camera_center();

    std::vector<const ScanRecord*> nearest;
    nearest.reserve(scans.size());
    for (const auto& s : scans) nearest.push_back(&s);
    std::sort(nearest.begin(), nearest.end(),
              [&](const ScanRecord* a, const ScanRecord* b) {
                const double da = (a->origin.camera_center() - center).norm();
                const double db = (b->origin.camera_center() - center).norm();
                if (da != db) return da < db;
                return a->scan_id < b->scan_id;
              });
    if (int(nearest.size()) > k_nearest) nearest.resize(k_nearest);

    bool parent_seen = false;
    for (const ScanRecord* scan : nearest) {
      const RenderedView view = render_view(scan->cloud, img.pose,
                                            img.intrinsics, splat_radius_px);
      const double overlap = 1.0 - invalid_pixel_ratio(view);
      const bool is_parent = scan->scan_id == img.parent_scan;
      if (overlap > overlap_threshold || is_parent) {
        per_image[ii].push_back({img.image_id, scan->scan_id, overlap});
      }
      parent_seen = parent_seen || is_parent;
    }
    if (!parent_seen) {
      const ScanRecord* parent = by_id.at(img.parent_scan);
      const RenderedView view = render_view(parent->cloud, img.pose,
                                            img.intrinsics, splat_radius_px);
      per_image[ii].push_back(
          {img.image_id, parent->scan_id, 1.0 - invalid_pixel_ratio(view)});
    }
  }

  ScanGraph g;
  for (const auto& edges : per_image) {
    g.edges.insert(g.edges.end(), edges.begin(), edges.end());
  }
  return g;
}

RenderedView render_merged(const std::vector<ScanRecord>& scans,
                           const ScanGraph& g, const std::string& db_image_id,
                           const Pose& pose, const Intrinsics& k,
                           int splat_radius_px) {
  if (!g.has_image(db_image_id)) {
    throw std::runtime_error("unknown db image id: " + db_image_id);
  }
  std::unordered_map<std::string, const ScanRecord*> by_id;
  for (const auto& s : scans) by_id[s.scan_id] = &s;
  std::vector<const PointCloud*> clouds;
  for (const auto& scan_id : g.neighbors(db_image_id)) {
    auto it = by_id.find(scan_id);
    if (it == by_id.end()) throw std::runtime_error("graph references unknown scan: " + scan_id);
    clouds.push_back(&it->second->cloud);
  }
  return render_clouds(clouds, pose, k, splat_radius_px);
}

std::string graph_to_json(const ScanGraph& g) {
  nlohmann::json j;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    j["edges"].push_back({{"image", e.image}, {"scan", e.scan}, {"overlap", e.overlap}});
  }
  return j.dump(2);
}

ScanGraph graph_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ScanGraph g;
  for (const auto& e : j.at("edges")) {
    g.edges.push_back({e.at("image").get<std::string>(),
                       e.at("scan").get<std::string>(),
                       e.at("overlap").get<double>()});
  }
  return g;
}

void save_graph(const std::string& path, const ScanGraph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << graph_to_json(g) << "\n";
}

ScanGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return graph_from_json(text);
}

}  // namespace pv
