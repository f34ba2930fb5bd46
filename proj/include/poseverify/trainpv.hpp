#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "poseverify/dense_descriptor.hpp"
#include "poseverify/geometry.hpp"
#include "poseverify/image.hpp"
#include "poseverify/point_cloud.hpp"
#include "poseverify/rendering.hpp"
#include "poseverify/scan_graph.hpp"
#include "poseverify/similarity.hpp"

namespace pv {

struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w), v(size_t(c) * h * w, 0.0) {}

  double& at(int c, int y, int x) {
    return v[(size_t(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return v[(size_t(c) * height + y) * width + x];
  }
};

struct ConvLayer {
  int out_ch = 0;
  int in_ch = 0;
  int kernel = 0;
  int pad = 0;
  int stride = 1;
  std::vector<double> weight;  // out_ch * in_ch * kernel * kernel
  std::vector<double> bias;    // out_ch

  Tensor forward(const Tensor& x) const;
  // Accumulates parameter gradients into dw/db and returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& dy, double* dw,
                  double* db) const;
  size_t param_count() const { return weight.size() + bias.size(); }
};

Tensor relu(const Tensor& x);
// Subgradient at 0 taken as 0.
Tensor relu_backward(const Tensor& pre, const Tensor& dy);

// Four 5x5 convolutions, padding 2, channels 1->32->32->32->1, each followed
// by a rectifier, then global average pooling to a scalar.
struct ScoreRegressor {
  std::array<ConvLayer, 4> layers;

  static ScoreRegressor create(std::uint64_t seed);
  static ScoreRegressor zeros();

  double forward(const Tensor& input) const;

  struct Trace {
    Tensor input;
    std::array<Tensor, 4> pre;   // conv outputs before the rectifier
    std::array<Tensor, 4> post;  // after the rectifier
    double score = 0.0;
  };
  Trace forward_trace(const Tensor& input) const;
  // Gradient of (dscore * score) w.r.t. parameters, accumulated into grad
  // (layout matches params_flat).
  void backward(const Trace& trace, double dscore, std::vector<double>& grad) const;

  size_t param_count() const;
  std::vector<double> params_flat() const;
  void set_params_flat(const std::vector<double>& p);
};

// Similarity scores as a 1-channel tensor; invalid sites become 0.
Tensor tensor_from_similarity(const SimilarityMap& s);

enum class FeatureMode { RandomConv, DenseSift };

// Frozen feature extractor standing in for a pretrained backbone: a 3-layer
// convolutional stack with seeded random-orthogonal weights, or the dense
// descriptor grid reinterpreted as features. Per-site outputs L2-normalized.
struct FeatureExtractor {
  FeatureMode mode = FeatureMode::RandomConv;
  std::uint64_t seed = 0;
  std::vector<ConvLayer> layers;
  int total_stride = 4;

  static FeatureExtractor create(std::uint64_t seed,
                                 FeatureMode mode = FeatureMode::RandomConv);

  struct Features {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v;  // height * width * channels, site-major
    MaskGrid validity;

    const double* site(int x, int y) const {
      return v.data() + (size_t(y) * width + x) * channels;
    }
  };
  Features extract(const ColorImage& image) const;
};

SimilarityMap feature_cosine_similarity(const FeatureExtractor::Features& a,
                                        const FeatureExtractor::Features& b);

// One query with N candidate synthetic images and their reprojection errors.
struct TrainingGroup {
  std::string query_id;
  ColorImage query;
  std::vector<ColorImage> renders;
  std::vector<double> reproj_errors;
};

using CandidateTrainingSet = std::vector<TrainingGroup>;

// Feature extraction and similarity maps hoisted out of the training loop
// (the extractor is frozen).
struct PreparedGroup {
  std::vector<Tensor> inputs;
  std::vector<double> reproj_errors;
};
PreparedGroup prepare_group(const TrainingGroup& group,
                            const FeatureExtractor& extractor);

// Mean pixel displacement of cloud points projected under gt vs est; points
// behind either camera are excluded; +inf when every point is excluded.
double reprojection_error(const PointCloud& cloud, const Pose& gt,
                          const Pose& est, const Intrinsics& k);

// p_i = softmax(-r_i / max(min_k r_k, 1e-6)); infinite errors get p_i = 0.
std::vector<double> target_distribution(const std::vector<double>& errors);

// Softmax with max-subtraction. Throws on non-finite scores or N < 2.
std::vector<double> predicted_distribution(const std::vector<double>& scores);

// Cross-entropy -sum p_i log p̂_i; p_i = 0 terms contribute 0; returns +inf
// when p̂_i = 0 where p_i > 0.
double cross_entropy(const std::vector<double>& p, const std::vector<double>& p_hat);

// Loss and its exact reverse-mode parameter gradient for one group.
double group_loss(const PreparedGroup& group, const ScoreRegressor& model,
                  std::vector<double>* grad = nullptr);

struct TrainOptions {
  int epochs = 10;
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ScoreRegressor model;
  std::vector<double> epoch_mean_loss;
};

// Adam over per-group steps with seeded shuffling; deterministic for a
// fixed seed. Throws on an empty dataset.
TrainResult train(const std::vector<PreparedGroup>& dataset,
                  const ScoreRegressor& init, const TrainOptions& opts);

class TrainPvScorer {
 public:
  TrainPvScorer(FeatureExtractor extractor, ScoreRegressor regressor)
      : extractor_(std::move(extractor)), regressor_(std::move(regressor)) {}

  double score(const ColorImage& query, const RenderedView& render) const;

  const FeatureExtractor& extractor() const { return extractor_; }
  const ScoreRegressor& regressor() const { return regressor_; }

 private:
  FeatureExtractor extractor_;
  ScoreRegressor regressor_;
};

// Versioned binary checkpoint (magic TPV1): feature mode + seed, then the
// regressor layers with shape headers and row-major 64-bit LE weights.
void save_model(const std::string& path, const TrainPvScorer& model);
TrainPvScorer load_model(const std::string& path);

// GT pose plus n_candidates-1 perturbations rendered from one scan cloud.
// Throws when n_candidates < 2.
TrainingGroup gen_training_random(const std::string& query_id,
                                  const ColorImage& query_image,
                                  const Pose& gt_pose, const PointCloud& scan,
                                  const Intrinsics& k, int n_candidates,
                                  double max_trans_m, double max_rot_deg,
                                  std::uint64_t seed);

// Candidate pose file: `query_id candidate_id db_image_id qw qx qy qz tx ty
// tz`, '#' comments. Rows grouped by query, deduplicated by (pose, db_image);
// groups with fewer than 2 candidates are dropped with a warning on stderr.
struct CandidateRow {
  std::string query_id;
  std::string candidate_id;
  std::string db_image_id;
  Pose pose;
};
std::vector<CandidateRow> read_candidate_file(const std::string& path);

CandidateTrainingSet gen_training_from_candidates(
    const std::vector<CandidateRow>& rows,
    const std::vector<DbImageRecord>& images,
    const std::vector<ScanRecord>& scans,
    const std::vector<std::pair<std::string, Pose>>& gt_poses,
    const std::vector<std::pair<std::string, ColorImage>>& query_images,
    const Intrinsics& k, const ScanGraph* graph = nullptr,
    int splat_radius_px = 1);

}  // namespace pv
