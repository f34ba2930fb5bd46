#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poseverify/dense_descriptor.hpp"
#include "poseverify/geometry.hpp"
#include "poseverify/normal_maps.hpp"
#include "poseverify/scan_graph.hpp"
#include "poseverify/semantics.hpp"
#include "poseverify/similarity.hpp"

namespace pv {

struct Candidate {
  std::string candidate_id;
  Pose pose;
  std::string source_db_image;
  RenderedView render;  // filled by the pipeline before scoring
};

enum class Method {
  DensePV,
  DensePVS,
  DenseNV,
  DenseNVS,
  DensePNV,
  DensePNVS,
  PSC,
  TrainPV,
};

Method method_from_name(const std::string& name);  // e.g. "densepv+s"
std::string method_name(Method m);

struct VerificationResult {
  Method method = Method::DensePV;
  std::vector<std::string> candidate_ids;
  std::vector<std::optional<double>> scores;  // nullopt = empty domain
  std::vector<int> ranking;  // candidate indices, best first
};

// Median over similarity-valid pixels that the (optional) mask keeps, lower
// median on even counts. The mask is resampled to the similarity grid by
// nearest neighbor. nullopt when no pixel qualifies.
std::optional<double> masked_median(const SimilarityMap& s,
                                    const SemanticMask* mask = nullptr);

struct DescriptorParams {
  int stride = 4;
  int patch = 16;
  double epsilon = 1e-6;
};

// Eq-level scorers. The mask always applies to the query side. A descriptor
// site is tied to the rendered pixel at its window center; sites over
// invalid rendered pixels are excluded.
std::optional<double> dense_pv(const ColorImage& query, const Candidate& cand,
                               const SemanticMask* mask = nullptr,
                               const DescriptorParams& params = {});
std::optional<double> dense_nv(const NormalMap& query_normals,
                               const Candidate& cand,
                               const SemanticMask* mask = nullptr);
std::optional<double> dense_pnv(const ColorImage& query,
                                const NormalMap& query_normals,
                                const Candidate& cand,
                                const SemanticMask* mask = nullptr,
                                const DescriptorParams& params = {});

// Normal-consistency weight of the descriptor similarity, in [0.5, 1].
double pnv_weight(double normal_similarity);

struct QueryBundle {
  std::string query_id;
  Intrinsics intrinsics;
  ColorImage image;
  NormalMap normals;        // may be empty (normal.width == 0)
  LabelMap labels;          // may be empty
  const ClassTable* table = nullptr;
};

class TrainPvScorer;  // defined in trainpv.hpp

struct RankConfig {
  std::optional<MaskVariant> mask_variant;  // +S methods require labels+table
  DescriptorParams descriptor;
  const PointCloud* psc_cloud = nullptr;    // labeled cloud for PSC
  const TrainPvScorer* trainpv = nullptr;
};

// Scores every candidate with one method and sorts descending; candidates
// with no score rank last; ties broken by candidate_id ascending.
VerificationResult rank_candidates(const QueryBundle& query,
                                   const std::vector<Candidate>& candidates,
                                   Method method, const RankConfig& config = {});

// Smallest position error wins, rotation error breaks ties, then input order.
Pose oracle_select(const std::vector<Pose>& choices, const Pose& gt);

// Fills candidate renders from the parent scan, or through the scan graph
// when one is given.
void fill_renders(std::vector<Candidate>& candidates,
                  const std::vector<DbImageRecord>& images,
                  const std::vector<ScanRecord>& scans, const Intrinsics& k,
                  const ScanGraph* graph = nullptr, int splat_radius_px = 1);

}  // namespace pv
