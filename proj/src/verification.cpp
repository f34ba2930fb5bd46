#include "poseverify/verification.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "poseverify/trainpv.hpp"

namespace pv {

Method method_from_name(const std::string& name) {
  if (name == "densepv") return Method::DensePV;
  if (name == "densepv+s") return Method::DensePVS;
  if (name == "densenv") return Method::DenseNV;
  if (name == "densenv+s") return Method::DenseNVS;
  if (name == "densepnv") return Method::DensePNV;
  if (name == "densepnv+s") return Method::DensePNVS;
  if (name == "psc") return Method::PSC;
  if (name == "trainpv") return Method::TrainPV;
  throw std::runtime_error("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::DensePV: return "densepv";
    case Method::DensePVS: return "densepv+s";
    case Method::DenseNV: return "densenv";
    case Method::DenseNVS: return "densenv+s";
    case Method::DensePNV: return "densepnv";
    case Method::DensePNVS: return "densepnv+s";
    case Method::PSC: return "psc";
    case Method::TrainPV: return "trainpv";
  }
  return "?";
}

std::optional<double> masked_median(const SimilarityMap& s,
                                    const SemanticMask* mask) {
  std::vector<float> values;
  values.reserve(s.score.size());
  const int sw = s.score.width;
  const int sh = s.score.height;
  for (int y = 0; y < sh; ++y) {
    for (int x = 0; x < sw; ++x) {
      if (!s.validity(x, y)) continue;
      if (mask) {
        const int mx = std::min(mask->informative.width - 1,
                                int((x + 0.5) * mask->informative.width / sw));
        const int my = std::min(mask->informative.height - 1,
                                int((y + 0.5) * mask->informative.height / sh));
        if (!mask->informative(mx, my)) continue;
      }
      values.push_back(s.score(x, y));
    }
  }
  if (values.empty()) return std::nullopt;
  const size_t mid = (values.size() - 1) / 2;  // lower median
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return double(values[mid]);
}

double pnv_weight(double normal_similarity) {
  return (1.0 + std::max(0.0, normal_similarity)) / 2.0;
}

namespace {

// Drops descriptor sites whose window center lands on an invalid rendered
// pixel; unwritten pixels never enter the median.
void apply_render_validity(SimilarityMap& s, const DescriptorMap& geom,
                           const MaskGrid& render_validity) {
  for (int gy = 0; gy < s.score.height; ++gy) {
    for (int gx = 0; gx < s.score.width; ++gx) {
      const int cx = geom.center_x(gx);
      const int cy = geom.center_y(gy);
      if (!render_validity.in_bounds(cx, cy) || !render_validity(cx, cy)) {
        s.validity(gx, gy) = 0;
      }
    }
  }
}

SimilarityMap descriptor_similarity(const ColorImage& query,
                                    const Candidate& cand,
                                    const DescriptorParams& params,
                                    DescriptorMap* geom_out = nullptr) {
  const DescriptorMap dq =
      extract_dense(query, params.stride, params.patch, NormMode::RootSift);
  const DescriptorMap dd = extract_dense(cand.render.color, params.stride,
                                         params.patch, NormMode::RootSift);
  SimilarityMap s = similarity_inverse_distance(dq, dd, params.epsilon);
  apply_render_validity(s, dd, cand.render.validity);
  if (geom_out) *geom_out = dd;
  return s;
}

}  // namespace

std::optional<double> dense_pv(const ColorImage& query, const Candidate& cand,
                               const SemanticMask* mask,
                               const DescriptorParams& params) {
  const SimilarityMap s = descriptor_similarity(query, cand, params);
  return masked_median(s, mask);
}

std::optional<double> dense_nv(const NormalMap& query_normals,
                               const Candidate& cand,
                               const SemanticMask* mask) {
  const NormalMap nd = normal_map_from_view(cand.render);
  const SimilarityMap s = normal_similarity(query_normals, nd);
  return masked_median(s, mask);
}

std::optional<double> dense_pnv(const ColorImage& query,
                                const NormalMap& query_normals,
                                const Candidate& cand,
                                const SemanticMask* mask,
                                const DescriptorParams& params) {
  DescriptorMap geom;
  SimilarityMap sd = descriptor_similarity(query, cand, params, &geom);
  const NormalMap nd = normal_map_from_view(cand.render);
  const SimilarityMap sn = normal_similarity(query_normals, nd);
  for (int gy = 0; gy < sd.score.height; ++gy) {
    for (int gx = 0; gx < sd.score.width; ++gx) {
      if (!sd.validity(gx, gy)) continue;
      const int cx = geom.center_x(gx);
      const int cy = geom.center_y(gy);
      // Sites where S_N is unavailable keep the weight floor 0.5.
      double w = 0.5;
      if (sn.validity.in_bounds(cx, cy) && sn.validity(cx, cy)) {
        w = pnv_weight(sn.score(cx, cy));
      }
      sd.score(gx, gy) = float(w * sd.score(gx, gy));
    }
  }
  return masked_median(sd, mask);
}

VerificationResult rank_candidates(const QueryBundle& query,
                                   const std::vector<Candidate>& candidates,
                                   Method method, const RankConfig& config) {
  if (candidates.empty()) {
    throw std::invalid_argument("rank_candidates: no candidates");
  }
  const bool masked = method == Method::DensePVS || method == Method::DenseNVS ||
                      method == Method::DensePNVS;
  SemanticMask mask;
  if (masked) {
    if (query.labels.size() == 0 || !query.table) {
      throw std::runtime_error("+S method requires query labels and class table");
    }
    mask = build_mask(query.labels, *query.table,
                      config.mask_variant.value_or(MaskVariant::C));
  }
  const SemanticMask* mask_ptr = masked ? &mask : nullptr;

  VerificationResult result;
  result.method = method;
  for (const auto& cand : candidates) {
    result.candidate_ids.push_back(cand.candidate_id);
    std::optional<double> score;
    switch (method) {
      case Method::DensePV:
      case Method::DensePVS:
        score = dense_pv(query.image, cand, mask_ptr, config.descriptor);
        break;
      case Method::DenseNV:
      case Method::DenseNVS:
        score = dense_nv(query.normals, cand, mask_ptr);
        break;
      case Method::DensePNV:
      case Method::DensePNVS:
        score = dense_pnv(query.image, query.normals, cand, mask_ptr,
                          config.descriptor);
        break;
      case Method::PSC:
        if (!config.psc_cloud) throw std::runtime_error("psc requires a labeled cloud");
        if (query.labels.size() == 0) throw std::runtime_error("psc requires query labels");
        score = psc_score(*config.psc_cloud, cand.pose, query.intrinsics,
                          query.labels);
        break;
      case Method::TrainPV:
        if (!config.trainpv) throw std::runtime_error("trainpv requires a model");
        score = config.trainpv->score(query.image, cand.render);
        break;
    }
    result.scores.push_back(score);
  }

  result.ranking.resize(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) result.ranking[i] = int(i);
  std::sort(result.ranking.begin(), result.ranking.end(), [&](int a, int b) {
    const auto& sa = result.scores[a];
    const auto& sb = result.scores[b];
    if (sa.has_value() != sb.has_value()) return sa.has_value();
    if (sa && sb && *sa != *sb) return *sa > *sb;
    return result.candidate_ids[a] < result.candidate_ids[b];
  });
  return result;
}

Pose oracle_select(const std::vector<Pose>& choices, const Pose& gt) {
  if (choices.empty()) throw std::invalid_argument("oracle_select: no choices");
  size_t best = 0;
  PoseError best_err = pose_error(choices[0], gt);
  for (size_t i = 1; i < choices.size(); ++i) {
    const PoseError e = pose_error(choices[i], gt);
    if (e.position_m < best_err.position_m ||
        (e.position_m == best_err.position_m &&
         e.rotation_deg < best_err.rotation_deg)) {
      best = i;
      best_err = e;
    }
  }
  return choices[best];
}

void fill_renders(std::vector<Candidate>& candidates,
                  const std::vector<DbImageRecord>& images,
                  const std::vector<ScanRecord>& scans, const Intrinsics& k,
                  const ScanGraph* graph, int splat_radius_px) {
  std::unordered_map<std::string, const DbImageRecord*> img_by_id;
  for (const auto& img : images) img_by_id[img.image_id] = &img;
  std::unordered_map<std::string, const ScanRecord*> scan_by_id;
  for (const auto& s : scans) scan_by_id[s.scan_id] = &s;

  for (auto& cand : candidates) {
    auto it = img_by_id.find(cand.source_db_image);
    if (it == img_by_id.end()) {
      throw std::runtime_error("unknown db image: " + cand.source_db_image);
    }
    if (graph) {
      cand.render = render_merged(scans, *graph, cand.source_db_image,
                                  cand.pose, k, splat_radius_px);
    } else {
      const ScanRecord* parent = scan_by_id.at(it->second->parent_scan);
      cand.render = render_view(parent->cloud, cand.pose, k, splat_radius_px);
    }
  }
}

}  // namespace pv
