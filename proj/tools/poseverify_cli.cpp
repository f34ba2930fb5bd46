#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "poseverify/dataset.hpp"
#include "poseverify/evaluation.hpp"
#include "poseverify/image_io.hpp"
#include "poseverify/normal_maps.hpp"
#include "poseverify/rendering.hpp"
#include "poseverify/synth.hpp"
#include "poseverify/trainpv.hpp"
#include "poseverify/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Every run echoes its resolved config: run.json in directory outputs,
// <file>.run.json next to file outputs.
void write_run_json(const std::string& out_path, bool out_is_dir,
                    const std::string& subcommand, const json& config) {
  json run;
  run["tool"] = "poseverify";
  run["version"] = kVersion;
  run["subcommand"] = subcommand;
  run["config"] = config;
  const fs::path p = out_is_dir ? fs::path(out_path) / "run.json"
                                : fs::path(out_path + ".run.json");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << run.dump(2) << "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

const pv::DbImageRecord& find_db_image(const pv::SyntheticDataset& ds,
                                       const std::string& id) {
  for (const auto& img : ds.db_images) {
    if (img.image_id == id) return img;
  }
  throw std::runtime_error("unknown db image: " + id);
}

const pv::ScanRecord& find_scan(const pv::SyntheticDataset& ds,
                                const std::string& id) {
  for (const auto& scan : ds.scans) {
    if (scan.scan_id == id) return scan;
  }
  throw std::runtime_error("unknown scan: " + id);
}

// ---- gen-scene --------------------------------------------------------------

struct GenSceneArgs {
  std::string config_path;
  std::string out_dir;
  int candidates = 0;  // per query, written to candidates.txt when > 0
  double max_trans = 1.0;
  double max_rot = 20.0;
};

void run_gen_scene(const GenSceneArgs& a) {
  const pv::SceneConfig cfg = pv::scene_config_from_json(read_text_file(a.config_path));
  const pv::SyntheticDataset ds = pv::gen_scene(cfg);
  pv::save_dataset(a.out_dir, ds);

  if (a.candidates > 0) {
    std::string text =
        "# query_id candidate_id db_image_id qw qx qy qz tx ty tz\n";
    for (size_t qi = 0; qi < ds.queries.size(); ++qi) {
      const auto cands =
          pv::gen_candidates(ds, ds.queries[qi].query_id, a.candidates,
                             a.max_trans, a.max_rot, cfg.seed + 1 + qi);
      for (const auto& c : cands) {
        double q[4], t[3];
        pv::pose_to_quat(c.pose, q, t);
        char line[512];
        std::snprintf(line, sizeof(line),
                      "%s %s %s %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      ds.queries[qi].query_id.c_str(), c.candidate_id.c_str(),
                      c.source_db_image.c_str(), q[0], q[1], q[2], q[3], t[0],
                      t[1], t[2]);
        text += line;
      }
    }
    write_text_file((fs::path(a.out_dir) / "candidates.txt").string(), text);
  }

  json config;
  config["config_path"] = a.config_path;
  config["scene"] = json::parse(pv::scene_config_to_json(cfg));
  config["candidates_per_query"] = a.candidates;
  config["max_trans_m"] = a.max_trans;
  config["max_rot_deg"] = a.max_rot;
  write_run_json(a.out_dir, true, "gen-scene", config);
}

// ---- build-graph --------------------------------------------------------------

struct BuildGraphArgs {
  std::string dataset;
  int k = 10;
  double threshold = 0.10;
  int splat = 1;
  std::string out;
};

void run_build_graph(const BuildGraphArgs& a) {
  const pv::SyntheticDataset ds = pv::load_dataset(a.dataset);
  const pv::ScanGraph g =
      pv::build_graph(ds.db_images, ds.scans, a.k, a.threshold, a.splat);
  pv::save_graph(a.out, g);
  write_run_json(a.out, false, "build-graph",
                 {{"dataset", a.dataset},
                  {"k", a.k},
                  {"threshold", a.threshold},
                  {"splat_radius_px", a.splat}});
}

// ---- render --------------------------------------------------------------

struct RenderArgs {
  std::string dataset;
  std::string pose_file;
  std::string image_id;
  std::string merged_graph;
  int splat = 1;
  std::string out_dir;
};

void run_render(const RenderArgs& a) {
  const pv::SyntheticDataset ds = pv::load_dataset(a.dataset);
  const auto poses = pv::read_pose_file(a.pose_file);
  const pv::DbImageRecord& img = find_db_image(ds, a.image_id);
  std::optional<pv::ScanGraph> graph;
  if (!a.merged_graph.empty()) graph = pv::load_graph(a.merged_graph);
  fs::create_directories(a.out_dir);

  for (const auto& [pose_id, pose] : poses) {
    pv::RenderedView view;
    if (graph) {
      view = pv::render_merged(ds.scans, *graph, a.image_id, pose,
                               ds.intrinsics, a.splat);
    } else {
      view = pv::render_view(find_scan(ds, img.parent_scan).cloud, pose,
                             ds.intrinsics, a.splat);
    }
    const fs::path base = fs::path(a.out_dir) / pose_id;
    pv::write_ppm(base.string() + "_color.ppm", view.color);
    pv::write_pfm(base.string() + "_depth.pfm", view.depth);
    if (view.has_labels) pv::write_pgm(base.string() + "_labels.pgm", view.label);
    if (view.has_normals) pv::write_pfm3(base.string() + "_normal.pfm", view.normal);
  }
  write_run_json(a.out_dir, true, "render",
                 {{"dataset", a.dataset},
                  {"pose", a.pose_file},
                  {"image", a.image_id},
                  {"merged", a.merged_graph},
                  {"splat_radius_px", a.splat}});
}

// ---- score --------------------------------------------------------------

struct ScoreArgs {
  std::string dataset;
  std::string query = "all";
  std::string candidates_file;
  std::string method;
  std::string graph_file;
  std::string mask_variant = "C";
  std::string model_file;
  int splat = 1;
  int stride = 4;
  int patch = 16;
  std::string out;
  std::string select_out;  // optional best-pose file for eval
};

void run_score(const ScoreArgs& a) {
  const pv::Method method = pv::method_from_name(a.method);
  const pv::SyntheticDataset ds = pv::load_dataset(a.dataset);
  const auto rows = pv::read_candidate_file(a.candidates_file);
  std::optional<pv::ScanGraph> graph;
  if (!a.graph_file.empty()) graph = pv::load_graph(a.graph_file);

  std::optional<pv::TrainPvScorer> scorer;
  if (method == pv::Method::TrainPV) {
    if (a.model_file.empty()) {
      throw std::runtime_error("trainpv needs --model");
    }
    scorer = pv::load_model(a.model_file);
  }

  // Candidate rows grouped per query in first-appearance order.
  std::vector<std::string> query_order;
  std::map<std::string, std::vector<pv::Candidate>> per_query;
  for (const auto& row : rows) {
    if (!per_query.count(row.query_id)) query_order.push_back(row.query_id);
    per_query[row.query_id].push_back(
        {row.candidate_id, row.pose, row.db_image_id, {}});
  }

  std::string csv = "query_id,candidate_id,rank,score,valid\n";
  std::string selections;
  for (const auto& qid : query_order) {
    if (a.query != "all" && qid != a.query) continue;
    const pv::QueryRecord& q = ds.query(qid);
    auto& cands = per_query[qid];
    pv::fill_renders(cands, ds.db_images, ds.scans, ds.intrinsics,
                     graph ? &*graph : nullptr, a.splat);

    pv::QueryBundle bundle;
    bundle.query_id = qid;
    bundle.intrinsics = ds.intrinsics;
    bundle.image = q.image;
    bundle.normals = pv::normals_from_depth(q.depth, ds.intrinsics);
    bundle.labels = q.labels;
    bundle.table = &ds.table;

    pv::RankConfig config;
    config.mask_variant = pv::mask_variant_from_name(a.mask_variant);
    config.descriptor.stride = a.stride;
    config.descriptor.patch = a.patch;
    if (method == pv::Method::PSC) {
      config.psc_cloud =
          &find_scan(ds, find_db_image(ds, cands[0].source_db_image).parent_scan)
               .cloud;
    }
    if (scorer) config.trainpv = &*scorer;

    const pv::VerificationResult res =
        pv::rank_candidates(bundle, cands, method, config);
    for (size_t rank = 0; rank < res.ranking.size(); ++rank) {
      const int i = res.ranking[rank];
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%s,%zu,%.6g,%d\n", qid.c_str(),
                    res.candidate_ids[i].c_str(), rank,
                    res.scores[i].value_or(0.0), res.scores[i].has_value() ? 1 : 0);
      csv += line;
    }
    const pv::Candidate& best = cands[res.ranking[0]];
    double quat[4], t[3];
    pv::pose_to_quat(best.pose, quat, t);
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%s %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", qid.c_str(),
                  quat[0], quat[1], quat[2], quat[3], t[0], t[1], t[2]);
    selections += line;
  }

  write_text_file(a.out, csv);
  if (!a.select_out.empty()) write_text_file(a.select_out, selections);
  write_run_json(a.out, false, "score",
                 {{"dataset", a.dataset},
                  {"query", a.query},
                  {"candidates", a.candidates_file},
                  {"method", a.method},
                  {"graph", a.graph_file},
                  {"mask_variant", a.mask_variant},
                  {"model", a.model_file},
                  {"splat_radius_px", a.splat},
                  {"stride", a.stride},
                  {"patch", a.patch},
                  {"select", a.select_out}});
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string groups_file;
  std::string graph_file;
  int epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string feature_mode = "randomconv";
  std::string out;
};

void run_train(const TrainArgs& a) {
  const pv::SyntheticDataset ds = pv::load_dataset(a.dataset);
  const auto rows = pv::read_candidate_file(a.groups_file);
  std::optional<pv::ScanGraph> graph;
  if (!a.graph_file.empty()) graph = pv::load_graph(a.graph_file);

  std::vector<std::pair<std::string, pv::Pose>> gt;
  std::vector<std::pair<std::string, pv::ColorImage>> images;
  for (const auto& q : ds.queries) {
    gt.emplace_back(q.query_id, q.gt_pose);
    images.emplace_back(q.query_id, q.image);
  }
  const pv::CandidateTrainingSet groups = pv::gen_training_from_candidates(
      rows, ds.db_images, ds.scans, gt, images, ds.intrinsics,
      graph ? &*graph : nullptr);
  if (groups.empty()) throw std::runtime_error("no usable training groups");

  const pv::FeatureMode mode = a.feature_mode == "densesift"
                                   ? pv::FeatureMode::DenseSift
                                   : pv::FeatureMode::RandomConv;
  const pv::FeatureExtractor extractor = pv::FeatureExtractor::create(a.seed, mode);
  std::vector<pv::PreparedGroup> prepared;
  prepared.reserve(groups.size());
  for (const auto& g : groups) prepared.push_back(pv::prepare_group(g, extractor));

  pv::TrainOptions opts;
  opts.epochs = a.epochs;
  opts.lr = a.lr;
  opts.seed = a.seed;
  const pv::TrainResult result =
      pv::train(prepared, pv::ScoreRegressor::create(a.seed), opts);
  for (size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
    std::fprintf(stderr, "epoch %zu mean loss %.6g\n", e,
                 result.epoch_mean_loss[e]);
  }
  pv::save_model(a.out, pv::TrainPvScorer(extractor, result.model));
  write_run_json(a.out, false, "train",
                 {{"dataset", a.dataset},
                  {"groups", a.groups_file},
                  {"graph", a.graph_file},
                  {"epochs", a.epochs},
                  {"lr", a.lr},
                  {"seed", a.seed},
                  {"feature_mode", a.feature_mode}});
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
  std::string selections_file;
  std::string gt_file;
  std::string thresholds = "0.25,5;0.5,5;1,10;2,10";
  std::string out;
};

void run_eval(const EvalArgs& a) {
  pv::PoseSelections selected, gt;
  for (const auto& [id, pose] : pv::read_pose_file(a.selections_file)) {
    selected[id] = pose;
  }
  for (const auto& [id, pose] : pv::read_pose_file(a.gt_file)) gt[id] = pose;
  const auto thresholds = pv::parse_thresholds(a.thresholds);
  const pv::EvalReport report = pv::evaluate(selected, gt, thresholds);
  write_text_file(a.out, pv::report_to_csv(report));
  std::fputs(pv::report_to_table(report).c_str(), stdout);
  write_run_json(a.out, false, "eval",
                 {{"selections", a.selections_file},
                  {"gt", a.gt_file},
                  {"thresholds", a.thresholds}});
}

}  // namespace

int main(int argc, char** argv) {
  pv::apply_thread_cap_from_env();

  CLI::App app{"Camera-pose verification for indoor localization"};
  app.set_version_flag("--version", std::string("poseverify ") + kVersion);
  app.require_subcommand(1);

  GenSceneArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-scene", "Generate a synthetic dataset");
  gen_cmd->add_option("--config", gen.config_path, "Scene config JSON")->required();
  gen_cmd->add_option("--out", gen.out_dir, "Output dataset directory")->required();
  gen_cmd->add_option("--candidates", gen.candidates,
                      "Also write candidates.txt with this many poses per query");
  gen_cmd->add_option("--max-trans", gen.max_trans, "Candidate bound, meters");
  gen_cmd->add_option("--max-rot", gen.max_rot, "Candidate bound, degrees");

  BuildGraphArgs bg;
  auto* bg_cmd = app.add_subcommand("build-graph", "Build the image-scan graph");
  bg_cmd->add_option("--dataset", bg.dataset)->required();
  bg_cmd->add_option("--k", bg.k, "Nearest scans considered per image");
  bg_cmd->add_option("--threshold", bg.threshold, "Pixel-overlap edge threshold");
  bg_cmd->add_option("--splat", bg.splat, "Splat radius, pixels");
  bg_cmd->add_option("--out", bg.out, "Graph JSON path")->required();

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Render poses from the scans");
  render_cmd->add_option("--dataset", render.dataset)->required();
  render_cmd->add_option("--pose", render.pose_file, "Pose text file")->required();
  render_cmd->add_option("--image", render.image_id, "Db image id")->required();
  render_cmd->add_option("--merged", render.merged_graph,
                         "Scan-graph JSON for merged rendering");
  render_cmd->add_option("--splat", render.splat, "Splat radius, pixels");
  render_cmd->add_option("--out", render.out_dir, "Output directory")->required();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Rank candidate poses");
  score_cmd->add_option("--dataset", score.dataset)->required();
  score_cmd->add_option("--query", score.query, "Query id, or 'all'");
  score_cmd->add_option("--candidates", score.candidates_file)->required();
  score_cmd
      ->add_option("--method", score.method,
                   "densepv densepv+s densenv densenv+s densepnv densepnv+s "
                   "psc trainpv")
      ->required()
      ->check(CLI::IsMember({"densepv", "densepv+s", "densenv", "densenv+s",
                             "densepnv", "densepnv+s", "psc", "trainpv"}));
  score_cmd->add_option("--graph", score.graph_file, "Scan-graph JSON");
  score_cmd->add_option("--mask-variant", score.mask_variant)
      ->check(CLI::IsMember({"A", "B", "C"}));
  score_cmd->add_option("--model", score.model_file, "TrainPV checkpoint");
  score_cmd->add_option("--splat", score.splat, "Splat radius, pixels");
  score_cmd->add_option("--stride", score.stride, "Descriptor stride, pixels");
  score_cmd->add_option("--patch", score.patch, "Descriptor patch, pixels");
  score_cmd->add_option("--out", score.out, "Scores CSV path")->required();
  score_cmd->add_option("--select", score.select_out,
                        "Also write best-pose selections for eval");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the TrainPV regressor");
  train_cmd->add_option("--dataset", train.dataset)->required();
  train_cmd->add_option("--groups", train.groups_file, "Candidate pose file")
      ->required();
  train_cmd->add_option("--graph", train.graph_file, "Scan-graph JSON");
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--lr", train.lr);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--feature-mode", train.feature_mode,
                        "randomconv or densesift")
      ->check(CLI::IsMember({"randomconv", "densesift"}));
  train_cmd->add_option("--out", train.out, "Model checkpoint path")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate selected poses vs GT");
  eval_cmd->add_option("--selections", eval.selections_file)->required();
  eval_cmd->add_option("--gt", eval.gt_file)->required();
  eval_cmd->add_option("--thresholds", eval.thresholds,
                       "Semicolon-separated pos_m,rot_deg pairs");
  eval_cmd->add_option("--out", eval.out, "Report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1
  }

  try {
    if (gen_cmd->parsed()) run_gen_scene(gen);
    if (bg_cmd->parsed()) run_build_graph(bg);
    if (render_cmd->parsed()) run_render(render);
    if (score_cmd->parsed()) run_score(score);
    if (train_cmd->parsed()) run_train(train);
    if (eval_cmd->parsed()) run_eval(eval);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
