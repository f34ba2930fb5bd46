// Parallel kernels vs their serial reference implementations.
#include <benchmark/benchmark.h>

#include "poseverify/dense_descriptor.hpp"
#include "poseverify/normal_maps.hpp"
#include "poseverify/rendering.hpp"
#include "poseverify/synth.hpp"

namespace {

pv::SceneConfig bench_config() {
  pv::SceneConfig cfg;
  cfg.seed = 17;
  cfg.seed_set = true;
  cfg.query_count = 1;
  cfg.db_yaws = 1;
  cfg.scan_step_deg = 0.75;
  return cfg;
}

const pv::SyntheticDataset& bench_dataset() {
  static const pv::SyntheticDataset ds = pv::gen_scene(bench_config());
  return ds;
}

void BM_RenderParallel(benchmark::State& state) {
  const auto& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pv::render_view(
        ds.scans[0].cloud, ds.db_images[0].pose, ds.intrinsics));
  }
}
BENCHMARK(BM_RenderParallel);

void BM_RenderSerial(benchmark::State& state) {
  const auto& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pv::serial::render_view(
        ds.scans[0].cloud, ds.db_images[0].pose, ds.intrinsics));
  }
}
BENCHMARK(BM_RenderSerial);

void BM_DescriptorParallel(benchmark::State& state) {
  const auto& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pv::extract_dense(ds.queries[0].image));
  }
}
BENCHMARK(BM_DescriptorParallel);

void BM_DescriptorSerial(benchmark::State& state) {
  const auto& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pv::serial::extract_dense(ds.queries[0].image));
  }
}
BENCHMARK(BM_DescriptorSerial);

void BM_NormalsParallel(benchmark::State& state) {
  const auto& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pv::normals_from_depth(ds.queries[0].depth, ds.intrinsics));
  }
}
BENCHMARK(BM_NormalsParallel);

void BM_NormalsSerial(benchmark::State& state) {
  const auto& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pv::serial::normals_from_depth(ds.queries[0].depth, ds.intrinsics));
  }
}
BENCHMARK(BM_NormalsSerial);

}  // namespace

BENCHMARK_MAIN();
