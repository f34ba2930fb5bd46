#include "poseverify/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "poseverify/image_io.hpp"

namespace fs = std::filesystem;

namespace pv {
namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_single_pose(const fs::path& path, const std::string& id,
                       const Pose& pose) {
  write_pose_file(path.string(), {{id, pose}});
}

Pose read_single_pose(const fs::path& path, const std::string& id) {
  const auto poses = read_pose_file(path.string());
  for (const auto& [pid, pose] : poses) {
    if (pid == id) return pose;
  }
  throw std::runtime_error("pose for " + id + " not found in " + path.string());
}

std::string superclass_table_json(const ClassTable& table) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, sc] : table.mapping) {
    j[std::to_string(id)] = superclass_name(sc);
  }
  return j.dump(2) + "\n";
}

}  // namespace

void save_dataset(const std::string& dir, const SyntheticDataset& dataset) {
  const fs::path root(dir);
  for (const char* sub : {"poses", "scans", "images", "depth", "labels"}) {
    fs::create_directories(root / sub);
  }

  nlohmann::json manifest;
  manifest["class_table"] = "classes.json";
  write_text(root / "classes.json", superclass_table_json(dataset.table));
  manifest["intrinsics"] = {{"fx", dataset.intrinsics.fx},
                            {"fy", dataset.intrinsics.fy},
                            {"cx", dataset.intrinsics.cx},
                            {"cy", dataset.intrinsics.cy},
                            {"width", dataset.intrinsics.width},
                            {"height", dataset.intrinsics.height}};

  manifest["scans"] = nlohmann::json::array();
  for (const auto& scan : dataset.scans) {
    const std::string ply = "scans/" + scan.scan_id + ".ply";
    const std::string pose = "poses/" + scan.scan_id + ".txt";
    write_ply((root / ply).string(), scan.cloud);
    write_single_pose(root / pose, scan.scan_id, scan.origin);
    manifest["scans"].push_back(
        {{"scan_id", scan.scan_id}, {"cloud", ply}, {"pose", pose}});
  }

  manifest["db_images"] = nlohmann::json::array();
  for (const auto& img : dataset.db_images) {
    nlohmann::json entry = {{"image_id", img.image_id},
                            {"parent_scan", img.parent_scan},
                            {"pose", "poses/" + img.image_id + ".txt"},
                            {"image", "images/" + img.image_id + ".ppm"},
                            {"depth", "depth/" + img.image_id + ".pfm"},
                            {"labels", "labels/" + img.image_id + ".pgm"}};
    write_single_pose(root / "poses" / (img.image_id + ".txt"), img.image_id,
                      img.pose);
    write_ppm((root / "images" / (img.image_id + ".ppm")).string(), img.color);
    write_pfm((root / "depth" / (img.image_id + ".pfm")).string(), img.depth);
    write_pgm((root / "labels" / (img.image_id + ".pgm")).string(), img.labels);
    manifest["db_images"].push_back(std::move(entry));
  }

  manifest["queries"] = nlohmann::json::array();
  for (const auto& q : dataset.queries) {
    nlohmann::json entry = {{"query_id", q.query_id},
                            {"pose", "poses/" + q.query_id + ".txt"},
                            {"image", "images/" + q.query_id + ".ppm"},
                            {"depth", "depth/" + q.query_id + ".pfm"},
                            {"labels", "labels/" + q.query_id + ".pgm"}};
    write_single_pose(root / "poses" / (q.query_id + ".txt"), q.query_id,
                      q.gt_pose);
    write_ppm((root / "images" / (q.query_id + ".ppm")).string(), q.image);
    write_pfm((root / "depth" / (q.query_id + ".pfm")).string(), q.depth);
    write_pgm((root / "labels" / (q.query_id + ".pgm")).string(), q.labels);
    manifest["queries"].push_back(std::move(entry));
  }
  // Aggregate GT pose file, ready for `eval --gt`.
  std::vector<std::pair<std::string, Pose>> all_queries;
  for (const auto& q : dataset.queries) all_queries.emplace_back(q.query_id, q.gt_pose);
  write_pose_file((root / "poses" / "queries.txt").string(), all_queries);

  write_text(root / "manifest.json", manifest.dump(2) + "\n");
}

SyntheticDataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const auto manifest = nlohmann::json::parse(read_text(root / "manifest.json"));

  SyntheticDataset out;
  const auto& k = manifest.at("intrinsics");
  out.intrinsics = {k.at("fx"), k.at("fy"),    k.at("cx"),
                    k.at("cy"), k.at("width"), k.at("height")};
  if (!out.intrinsics.valid()) {
    throw std::runtime_error("invalid intrinsics in manifest");
  }
  out.table = load_class_table(
      (root / manifest.at("class_table").get<std::string>()).string());

  for (const auto& entry : manifest.at("scans")) {
    ScanRecord scan;
    scan.scan_id = entry.at("scan_id");
    scan.cloud = read_ply((root / entry.at("cloud").get<std::string>()).string());
    scan.origin = read_single_pose(root / entry.at("pose").get<std::string>(),
                                   scan.scan_id);
    out.scans.push_back(std::move(scan));
  }

  for (const auto& entry : manifest.at("db_images")) {
    DbImageRecord img;
    img.image_id = entry.at("image_id");
    img.parent_scan = entry.at("parent_scan");
    img.intrinsics = out.intrinsics;
    img.pose = read_single_pose(root / entry.at("pose").get<std::string>(),
                                img.image_id);
    img.color = read_ppm((root / entry.at("image").get<std::string>()).string());
    img.depth = read_pfm((root / entry.at("depth").get<std::string>()).string());
    img.labels = read_pgm((root / entry.at("labels").get<std::string>()).string());
    out.db_images.push_back(std::move(img));
  }

  for (const auto& entry : manifest.at("queries")) {
    QueryRecord q;
    q.query_id = entry.at("query_id");
    q.gt_pose = read_single_pose(root / entry.at("pose").get<std::string>(),
                                 q.query_id);
    q.image = read_ppm((root / entry.at("image").get<std::string>()).string());
    q.depth = read_pfm((root / entry.at("depth").get<std::string>()).string());
    q.labels = read_pgm((root / entry.at("labels").get<std::string>()).string());
    out.queries.push_back(std::move(q));
  }
  return out;
}

}  // namespace pv
