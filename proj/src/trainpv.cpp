#include "poseverify/trainpv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "poseverify/verification.hpp"

namespace pv {

namespace {

int conv_out_size(int in, int kernel, int pad, int stride) {
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

Tensor ConvLayer::forward(const Tensor& x) const {
  if (x.channels != in_ch) throw std::invalid_argument("conv: channel mismatch");
  const int oh = conv_out_size(x.height, kernel, pad, stride);
  const int ow = conv_out_size(x.width, kernel, pad, stride);
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv: input too small");
  Tensor y(out_ch, oh, ow);
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* w_oc = weight.data() + size_t(oc) * in_ch * kernel * kernel;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < in_ch; ++ic) {
          const double* w_ic = w_oc + size_t(ic) * kernel * kernel;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= x.height) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= x.width) continue;
              acc += w_ic[ky * kernel + kx] * x.at(ic, iy, ix);
            }
          }
        }
        y.at(oc, oy, ox) = acc;
      }
    }
  }
  return y;
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& dy, double* dw,
                           double* db) const {
  Tensor dx(x.channels, x.height, x.width);
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* w_oc = weight.data() + size_t(oc) * in_ch * kernel * kernel;
    double* dw_oc = dw + size_t(oc) * in_ch * kernel * kernel;
    for (int oy = 0; oy < dy.height; ++oy) {
      for (int ox = 0; ox < dy.width; ++ox) {
        const double g = dy.at(oc, oy, ox);
        if (g == 0.0) continue;
        db[oc] += g;
        for (int ic = 0; ic < in_ch; ++ic) {
          const double* w_ic = w_oc + size_t(ic) * kernel * kernel;
          double* dw_ic = dw_oc + size_t(ic) * kernel * kernel;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= x.height) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= x.width) continue;
              dw_ic[ky * kernel + kx] += g * x.at(ic, iy, ix);
              dx.at(ic, iy, ix) += g * w_ic[ky * kernel + kx];
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = std::max(v, 0.0);
  return y;
}

Tensor relu_backward(const Tensor& pre, const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i) {
    if (pre.v[i] <= 0.0) dx.v[i] = 0.0;
  }
  return dx;
}

namespace {

ConvLayer make_conv(int out_ch, int in_ch, int kernel, int pad, int stride) {
  ConvLayer l;
  l.out_ch = out_ch;
  l.in_ch = in_ch;
  l.kernel = kernel;
  l.pad = pad;
  l.stride = stride;
  l.weight.assign(size_t(out_ch) * in_ch * kernel * kernel, 0.0);
  l.bias.assign(out_ch, 0.0);
  return l;
}

void gaussian_init(ConvLayer& l, std::mt19937_64& rng) {
  const double fan_in = double(l.in_ch) * l.kernel * l.kernel;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (double& w : l.weight) w = dist(rng);
  for (double& b : l.bias) b = 0.01;
}

// Orthonormal rows via Gram-Schmidt on a seeded Gaussian draw; requires
// out_ch <= in_ch * k * k.
void orthogonal_init(ConvLayer& l, std::mt19937_64& rng) {
  const int cols = l.in_ch * l.kernel * l.kernel;
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& w : l.weight) w = dist(rng);
  for (int r = 0; r < l.out_ch; ++r) {
    double* row = l.weight.data() + size_t(r) * cols;
    for (int p = 0; p < r; ++p) {
      const double* prev = l.weight.data() + size_t(p) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += row[c] * prev[c];
      for (int c = 0; c < cols; ++c) row[c] -= dot * prev[c];
    }
    double norm = 0.0;
    for (int c = 0; c < cols; ++c) norm += row[c] * row[c];
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw std::runtime_error("orthogonal_init: degenerate draw");
    for (int c = 0; c < cols; ++c) row[c] /= norm;
  }
  for (double& b : l.bias) b = 0.0;
}

}  // namespace

ScoreRegressor ScoreRegressor::create(std::uint64_t seed) {
  ScoreRegressor m;
  m.layers[0] = make_conv(32, 1, 5, 2, 1);
  m.layers[1] = make_conv(32, 32, 5, 2, 1);
  m.layers[2] = make_conv(32, 32, 5, 2, 1);
  m.layers[3] = make_conv(1, 32, 5, 2, 1);
  std::mt19937_64 rng(seed);
  for (auto& l : m.layers) gaussian_init(l, rng);
  return m;
}

ScoreRegressor ScoreRegressor::zeros() {
  ScoreRegressor m = create(0);
  for (auto& l : m.layers) {
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return m;
}

double ScoreRegressor::forward(const Tensor& input) const {
  Tensor x = input;
  for (const auto& l : layers) x = relu(l.forward(x));
  double sum = 0.0;
  for (double v : x.v) sum += v;
  return sum / double(x.v.size());
}

ScoreRegressor::Trace ScoreRegressor::forward_trace(const Tensor& input) const {
  Trace t;
  t.input = input;
  const Tensor* x = &t.input;
  for (size_t i = 0; i < layers.size(); ++i) {
    t.pre[i] = layers[i].forward(*x);
    t.post[i] = relu(t.pre[i]);
    x = &t.post[i];
  }
  double sum = 0.0;
  for (double v : x->v) sum += v;
  t.score = sum / double(x->v.size());
  return t;
}

void ScoreRegressor::backward(const Trace& trace, double dscore,
                              std::vector<double>& grad) const {
  if (grad.size() != param_count()) grad.assign(param_count(), 0.0);
  // Average pool spreads the gradient uniformly.
  const Tensor& last = trace.post[3];
  Tensor dy(last.channels, last.height, last.width);
  const double g = dscore / double(last.v.size());
  for (double& v : dy.v) v = g;

  size_t offset = param_count();
  for (int i = 3; i >= 0; --i) {
    offset -= layers[i].param_count();
    dy = relu_backward(trace.pre[i], dy);
    const Tensor& x = i == 0 ? trace.input : trace.post[i - 1];
    double* dw = grad.data() + offset;
    double* db = dw + layers[i].weight.size();
    dy = layers[i].backward(x, dy, dw, db);
  }
}

size_t ScoreRegressor::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

std::vector<double> ScoreRegressor::params_flat() const {
  std::vector<double> p;
  p.reserve(param_count());
  for (const auto& l : layers) {
    p.insert(p.end(), l.weight.begin(), l.weight.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void ScoreRegressor::set_params_flat(const std::vector<double>& p) {
  if (p.size() != param_count()) throw std::invalid_argument("bad param vector");
  size_t offset = 0;
  for (auto& l : layers) {
    std::copy(p.begin() + offset, p.begin() + offset + l.weight.size(),
              l.weight.begin());
    offset += l.weight.size();
    std::copy(p.begin() + offset, p.begin() + offset + l.bias.size(),
              l.bias.begin());
    offset += l.bias.size();
  }
}

Tensor tensor_from_similarity(const SimilarityMap& s) {
  Tensor t(1, s.score.height, s.score.width);
  for (int y = 0; y < s.score.height; ++y) {
    for (int x = 0; x < s.score.width; ++x) {
      t.at(0, y, x) = s.validity(x, y) ? double(s.score(x, y)) : 0.0;
    }
  }
  return t;
}

FeatureExtractor FeatureExtractor::create(std::uint64_t seed, FeatureMode mode) {
  FeatureExtractor fe;
  fe.mode = mode;
  fe.seed = seed;
  if (mode == FeatureMode::RandomConv) {
    fe.layers.push_back(make_conv(16, 3, 5, 2, 2));
    fe.layers.push_back(make_conv(16, 16, 5, 2, 2));
    fe.layers.push_back(make_conv(16, 16, 3, 1, 1));
    std::mt19937_64 rng(seed);
    for (auto& l : fe.layers) orthogonal_init(l, rng);
    fe.total_stride = 4;
  } else {
    fe.total_stride = 4;  // dense descriptor default stride
  }
  return fe;
}

FeatureExtractor::Features FeatureExtractor::extract(const ColorImage& image) const {
  Features f;
  if (mode == FeatureMode::DenseSift) {
    const DescriptorMap d = extract_dense(image);
    f.channels = d.dim;
    f.height = d.grid_height;
    f.width = d.grid_width;
    f.validity = MaskGrid(f.width, f.height, 0);
    f.v.resize(size_t(f.width) * f.height * f.channels);
    for (int y = 0; y < f.height; ++y) {
      for (int x = 0; x < f.width; ++x) {
        std::copy(d.at(x, y), d.at(x, y) + d.dim,
                  f.v.begin() + (size_t(y) * f.width + x) * f.channels);
        f.validity(x, y) = d.is_zero(x, y) ? 0 : 1;
      }
    }
    return f;
  }
  if (image.width < 8 || image.height < 8) {
    throw std::invalid_argument("extract_features: image below receptive field");
  }
  Tensor x(3, image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int xx = 0; xx < image.width; ++xx) {
      const Vec3f& c = image(xx, y);
      x.at(0, y, xx) = c[0];
      x.at(1, y, xx) = c[1];
      x.at(2, y, xx) = c[2];
    }
  }
  for (size_t i = 0; i < layers.size(); ++i) {
    x = layers[i].forward(x);
    if (i + 1 < layers.size()) x = relu(x);
  }
  f.channels = x.channels;
  f.height = x.height;
  f.width = x.width;
  f.validity = MaskGrid(f.width, f.height, 0);
  f.v.resize(size_t(f.width) * f.height * f.channels);
  for (int y = 0; y < f.height; ++y) {
    for (int xx = 0; xx < f.width; ++xx) {
      double norm = 0.0;
      for (int c = 0; c < f.channels; ++c) {
        const double v = x.at(c, y, xx);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      double* site = f.v.data() + (size_t(y) * f.width + xx) * f.channels;
      if (norm < 1e-12) continue;  // zero-activation site stays invalid
      for (int c = 0; c < f.channels; ++c) site[c] = x.at(c, y, xx) / norm;
      f.validity(xx, y) = 1;
    }
  }
  return f;
}

SimilarityMap feature_cosine_similarity(const FeatureExtractor::Features& a,
                                        const FeatureExtractor::Features& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw std::invalid_argument("feature grids: shape mismatch");
  }
  SimilarityMap out;
  out.score = Grid<float>(a.width, a.height, 0.0f);
  out.validity = MaskGrid(a.width, a.height, 0);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (!a.validity(x, y) || !b.validity(x, y)) continue;
      const double* sa = a.site(x, y);
      const double* sb = b.site(x, y);
      double dot = 0.0;
      for (int c = 0; c < a.channels; ++c) dot += sa[c] * sb[c];
      out.score(x, y) = float(std::clamp(dot, -1.0, 1.0));
      out.validity(x, y) = 1;
    }
  }
  return out;
}

PreparedGroup prepare_group(const TrainingGroup& group,
                            const FeatureExtractor& extractor) {
  if (group.renders.size() < 2) {
    throw std::invalid_argument("training group needs at least 2 candidates");
  }
  PreparedGroup out;
  out.reproj_errors = group.reproj_errors;
  const auto fq = extractor.extract(group.query);
  for (const auto& render : group.renders) {
    const auto fd = extractor.extract(render);
    out.inputs.push_back(tensor_from_similarity(feature_cosine_similarity(fq, fd)));
  }
  return out;
}

double reprojection_error(const PointCloud& cloud, const Pose& gt,
                          const Pose& est, const Intrinsics& k) {
  if (cloud.empty()) throw std::invalid_argument("reprojection_error: empty cloud");
  double sum = 0.0;
  std::int64_t count = 0;
  #pragma omp parallel for schedule(static) reduction(+ : sum, count)
  for (std::int64_t i = 0; i < std::int64_t(cloud.size()); ++i) {
    const auto pg = project(cloud.positions[i], gt, k);
    const auto pe = project(cloud.positions[i], est, k);
    if (!pg || !pe) continue;
    sum += (pg->uv - pe->uv).norm();
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  return sum / double(count);
}

std::vector<double> target_distribution(const std::vector<double>& errors) {
  if (errors.size() < 2) throw std::invalid_argument("need N >= 2 errors");
  double min_r = std::numeric_limits<double>::infinity();
  for (double r : errors) {
    if (std::isfinite(r)) min_r = std::min(min_r, r);
  }
  if (!std::isfinite(min_r)) throw std::invalid_argument("all errors infinite");
  const double denom = std::max(min_r, 1e-6);  // Eq. floor when GT gives r = 0
  std::vector<double> rel(errors.size());
  double min_rel = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < errors.size(); ++i) {
    rel[i] = errors[i] / denom;
    if (std::isfinite(rel[i])) min_rel = std::min(min_rel, rel[i]);
  }
  std::vector<double> p(errors.size(), 0.0);
  double sum = 0.0;
  for (size_t i = 0; i < errors.size(); ++i) {
    if (!std::isfinite(rel[i])) continue;
    p[i] = std::exp(-(rel[i] - min_rel));
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> predicted_distribution(const std::vector<double>& scores) {
  if (scores.size() < 2) throw std::invalid_argument("need N >= 2 scores");
  double max_s = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");
    max_s = std::max(max_s, s);
  }
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - max_s);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy(const std::vector<double>& p,
                     const std::vector<double>& p_hat) {
  if (p.size() != p_hat.size()) throw std::invalid_argument("size mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (p_hat[i] == 0.0) return std::numeric_limits<double>::infinity();
    loss -= p[i] * std::log(p_hat[i]);
  }
  return loss;
}

double group_loss(const PreparedGroup& group, const ScoreRegressor& model,
                  std::vector<double>* grad) {
  const size_t n = group.inputs.size();
  std::vector<ScoreRegressor::Trace> traces;
  std::vector<double> scores(n);
  traces.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    traces.push_back(model.forward_trace(group.inputs[i]));
    scores[i] = traces.back().score;
  }
  const std::vector<double> p = target_distribution(group.reproj_errors);
  const std::vector<double> p_hat = predicted_distribution(scores);
  const double loss = cross_entropy(p, p_hat);
  if (grad) {
    if (grad->size() != model.param_count()) grad->assign(model.param_count(), 0.0);
    // d(cross-entropy ∘ softmax)/ds_i = p̂_i - p_i.
    for (size_t i = 0; i < n; ++i) {
      model.backward(traces[i], p_hat[i] - p[i], *grad);
    }
  }
  return loss;
}

TrainResult train(const std::vector<PreparedGroup>& dataset,
                  const ScoreRegressor& init, const TrainOptions& opts) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  TrainResult result;
  result.model = init;
  std::vector<double> params = result.model.params_flat();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  std::mt19937_64 rng(opts.seed);
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (size_t gi : order) {
      grad.assign(params.size(), 0.0);
      loss_sum += group_loss(dataset[gi], result.model, &grad);
      ++step;
      const double bc1 = 1.0 - std::pow(opts.beta1, double(step));
      const double bc2 = 1.0 - std::pow(opts.beta2, double(step));
      for (size_t i = 0; i < params.size(); ++i) {
        m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * grad[i];
        v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
        params[i] -= opts.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts.adam_eps);
      }
      result.model.set_params_flat(params);
    }
    result.epoch_mean_loss.push_back(loss_sum / double(dataset.size()));
  }
  return result;
}

double TrainPvScorer::score(const ColorImage& query,
                            const RenderedView& render) const {
  const auto fq = extractor_.extract(query);
  const auto fd = extractor_.extract(render.color);
  return regressor_.forward(tensor_from_similarity(feature_cosine_similarity(fq, fd)));
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated model file");
  return v;
}

}  // namespace

void save_model(const std::string& path, const TrainPvScorer& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("TPV1", 4);
  write_raw(out, std::uint8_t(model.extractor().mode == FeatureMode::DenseSift));
  write_raw(out, std::uint64_t(model.extractor().seed));
  const auto& layers = model.regressor().layers;
  write_raw(out, std::uint32_t(layers.size()));
  for (const auto& l : layers) {
    write_raw(out, std::uint32_t(l.out_ch));
    write_raw(out, std::uint32_t(l.in_ch));
    write_raw(out, std::uint32_t(l.kernel));
    write_raw(out, std::uint32_t(l.pad));
    write_raw(out, std::uint32_t(l.stride));
    out.write(reinterpret_cast<const char*>(l.weight.data()),
              l.weight.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(l.bias.data()),
              l.bias.size() * sizeof(double));
  }
}

TrainPvScorer load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::strncmp(magic, "TPV1", 4) != 0) {
    throw std::runtime_error("bad model magic in " + path);
  }
  const auto mode = read_raw<std::uint8_t>(in) ? FeatureMode::DenseSift
                                               : FeatureMode::RandomConv;
  const auto seed = read_raw<std::uint64_t>(in);
  const auto n_layers = read_raw<std::uint32_t>(in);
  ScoreRegressor reg = ScoreRegressor::zeros();
  if (n_layers != reg.layers.size()) {
    throw std::runtime_error("unexpected layer count in " + path);
  }
  for (auto& l : reg.layers) {
    l.out_ch = int(read_raw<std::uint32_t>(in));
    l.in_ch = int(read_raw<std::uint32_t>(in));
    l.kernel = int(read_raw<std::uint32_t>(in));
    l.pad = int(read_raw<std::uint32_t>(in));
    l.stride = int(read_raw<std::uint32_t>(in));
    l.weight.resize(size_t(l.out_ch) * l.in_ch * l.kernel * l.kernel);
    l.bias.resize(l.out_ch);
    in.read(reinterpret_cast<char*>(l.weight.data()),
            l.weight.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(l.bias.data()), l.bias.size() * sizeof(double));
    if (!in) throw std::runtime_error("truncated model file");
  }
  return TrainPvScorer(FeatureExtractor::create(seed, mode), reg);
}

TrainingGroup gen_training_random(const std::string& query_id,
                                  const ColorImage& query_image,
                                  const Pose& gt_pose, const PointCloud& scan,
                                  const Intrinsics& k, int n_candidates,
                                  double max_trans_m, double max_rot_deg,
                                  std::uint64_t seed) {
  if (n_candidates < 2) throw std::invalid_argument("need n_candidates >= 2");
  TrainingGroup group;
  group.query_id = query_id;
  group.query = query_image;
  std::vector<Pose> poses;
  poses.push_back(gt_pose);
  std::mt19937_64 rng(seed);
  for (int i = 1; i < n_candidates; ++i) {
    poses.push_back(perturb_pose(gt_pose, max_trans_m, max_rot_deg, rng()));
  }
  // Errors over a deterministic subsample keeps groups cheap to build.
  PointCloud sample;
  const size_t step = std::max<size_t>(1, scan.size() / 2000);
  for (size_t i = 0; i < scan.size(); i += step) {
    sample.positions.push_back(scan.positions[i]);
  }
  for (const auto& pose : poses) {
    group.renders.push_back(render_view(scan, pose, k).color);
    group.reproj_errors.push_back(reprojection_error(sample, gt_pose, pose, k));
  }
  return group;
}

std::vector<CandidateRow> read_candidate_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open candidate file: " + path);
  std::vector<CandidateRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    CandidateRow row;
    double qw, qx, qy, qz, tx, ty, tz;
    if (!(ss >> row.query_id >> row.candidate_id >> row.db_image_id >> qw >>
          qx >> qy >> qz >> tx >> ty >> tz)) {
      throw std::runtime_error("malformed candidate line: " + line);
    }
    row.pose = pose_from_quat(qw, qx, qy, qz, tx, ty, tz);
    rows.push_back(row);
  }
  return rows;
}

CandidateTrainingSet gen_training_from_candidates(
    const std::vector<CandidateRow>& rows,
    const std::vector<DbImageRecord>& images,
    const std::vector<ScanRecord>& scans,
    const std::vector<std::pair<std::string, Pose>>& gt_poses,
    const std::vector<std::pair<std::string, ColorImage>>& query_images,
    const Intrinsics& k, const ScanGraph* graph, int splat_radius_px) {
  std::unordered_map<std::string, const DbImageRecord*> img_by_id;
  for (const auto& img : images) img_by_id[img.image_id] = &img;
  std::unordered_map<std::string, const ScanRecord*> scan_by_id;
  for (const auto& s : scans) scan_by_id[s.scan_id] = &s;
  std::unordered_map<std::string, Pose> gt_by_id(gt_poses.begin(), gt_poses.end());
  std::unordered_map<std::string, const ColorImage*> query_by_id;
  for (const auto& [id, img] : query_images) query_by_id[id] = &img;

  // Preserve first-appearance query order for reproducible output.
  std::vector<std::string> query_order;
  std::unordered_map<std::string, std::vector<const CandidateRow*>> grouped;
  for (const auto& row : rows) {
    if (!img_by_id.count(row.db_image_id)) {
      throw std::runtime_error("unknown db image: " + row.db_image_id);
    }
    if (!gt_by_id.count(row.query_id) || !query_by_id.count(row.query_id)) {
      throw std::runtime_error("unknown query: " + row.query_id);
    }
    if (!grouped.count(row.query_id)) query_order.push_back(row.query_id);
    grouped[row.query_id].push_back(&row);
  }

  CandidateTrainingSet out;
  for (const auto& qid : query_order) {
    auto& cand_rows = grouped[qid];
    // Dedup by (pose, db image).
    std::set<std::string> seen;
    std::vector<const CandidateRow*> unique;
    for (const auto* row : cand_rows) {
      char key[512];
      double q[4], t[3];
      pose_to_quat(row->pose, q, t);
      std::snprintf(key, sizeof(key), "%s|%.12g %.12g %.12g %.12g %.12g %.12g %.12g",
                    row->db_image_id.c_str(), q[0], q[1], q[2], q[3], t[0], t[1], t[2]);
      if (seen.insert(key).second) unique.push_back(row);
    }
    if (unique.size() < 2) {
      std::cerr << "warning: dropping group " << qid << " with "
                << unique.size() << " candidate(s)\n";
      continue;
    }
    TrainingGroup group;
    group.query_id = qid;
    group.query = *query_by_id.at(qid);
    const Pose gt = gt_by_id.at(qid);
    for (const auto* row : unique) {
      RenderedView render;
      if (graph) {
        render = render_merged(scans, *graph, row->db_image_id, row->pose, k,
                               splat_radius_px);
      } else {
        const auto* img = img_by_id.at(row->db_image_id);
        render = render_view(scan_by_id.at(img->parent_scan)->cloud, row->pose,
                             k, splat_radius_px);
      }
      group.renders.push_back(render.color);
      const auto* img = img_by_id.at(row->db_image_id);
      const PointCloud& cloud = scan_by_id.at(img->parent_scan)->cloud;
      PointCloud sample;
      const size_t step = std::max<size_t>(1, cloud.size() / 2000);
      for (size_t i = 0; i < cloud.size(); i += step) {
        sample.positions.push_back(cloud.positions[i]);
      }
      group.reproj_errors.push_back(reprojection_error(sample, gt, row->pose, k));
    }
    out.push_back(std::move(group));
  }
  return out;
}

}  // namespace pv
