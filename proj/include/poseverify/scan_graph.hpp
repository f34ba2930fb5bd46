#pragma once

#include <string>
#include <vector>

#include "poseverify/geometry.hpp"
#include "poseverify/image.hpp"
#include "poseverify/point_cloud.hpp"
#include "poseverify/rendering.hpp"

namespace pv {

struct ScanRecord {
  std::string scan_id;
  PointCloud cloud;
  Pose origin;  // scanner pose, camera-from-world
};

struct DbImageRecord {
  std::string image_id;
  std::string parent_scan;
  Pose pose;
  Intrinsics intrinsics;
  ColorImage color;
  DepthMap depth;
  LabelMap labels;  // may be empty
};

struct ScanGraphEdge {
  std::string image;
  std::string scan;
  double overlap = 0.0;
};

struct ScanGraph {
  std::vector<ScanGraphEdge> edges;

  // Scan ids by descending overlap, scan_id ascending on ties. Throws on an
  // unknown image id.
  std::vector<std::string> neighbors(const std::string& image_id) const;
  bool has_image(const std::string& image_id) const;
};

// For each image: consider the k_nearest scans by scanner-origin-to-camera-
// center distance, render each into the image view, and keep an edge when
// the covered-pixel fraction exceeds overlap_threshold. The parent-scan edge
// is always kept. Throws on an empty scan list or a missing parent scan.
ScanGraph build_graph(const std::vector<DbImageRecord>& images,
                      const std::vector<ScanRecord>& scans, int k_nearest = 10,
                      double overlap_threshold = 0.10, int splat_radius_px = 1);

// Renders every scan connected to db_image_id into one shared z-buffer.
// Throws on an unknown db image id.
RenderedView render_merged(const std::vector<ScanRecord>& scans,
                           const ScanGraph& g, const std::string& db_image_id,
                           const Pose& pose, const Intrinsics& k,
                           int splat_radius_px = 1);

std::string graph_to_json(const ScanGraph& g);
ScanGraph graph_from_json(const std::string& text);
void save_graph(const std::string& path, const ScanGraph& g);
ScanGraph load_graph(const std::string& path);

}  // namespace pv
