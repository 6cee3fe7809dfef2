#include "attnorm/classical.hpp"
#include "attnorm/model.hpp"
#include "attnorm/pipeline.hpp"
#include "attnorm/registration.hpp"
#include "attnorm/spatial_index.hpp"
#include "attnorm/synth.hpp"

#include <benchmark/benchmark.h>

using namespace attnorm;

namespace {

PointCloud sphere(std::size_t n) {
  SyntheticShapeSpec s;
  s.count = n;
  s.seed = 1;
  return synth_shape(s).cloud;
}

void BM_BuildIndex(benchmark::State& state) {
  const auto cloud = sphere(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(SpatialIndex(cloud));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Arg(2000)->Arg(100000);

void BM_Knn(benchmark::State& state) {
  const auto cloud = sphere(100000);
  const SpatialIndex index(cloud);
  const auto k = static_cast<std::size_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn(cloud.points[i], k));
    i = (i + 7919) % cloud.size();
  }
}
BENCHMARK(BM_Knn)->Arg(8)->Arg(50)->Arg(500);

void BM_PcaNormal(benchmark::State& state) {
  const auto cloud = sphere(20000);
  const SpatialIndex index(cloud);
  const Patch patch = extract_patch(cloud, index, 0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pca_normal(patch));
}
BENCHMARK(BM_PcaNormal)->Arg(8)->Arg(50);

void BM_JetNormal(benchmark::State& state) {
  const auto cloud = sphere(20000);
  const SpatialIndex index(cloud);
  const Patch patch = extract_patch(cloud, index, 0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(jet_normal(patch));
}
BENCHMARK(BM_JetNormal)->Arg(8)->Arg(50);

void BM_Forward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.k = static_cast<std::uint32_t>(state.range(0));
  const ModelParams params = init_params(cfg);
  const auto cloud = sphere(20000);
  const SpatialIndex index(cloud);
  const Patch patch = extract_patch(cloud, index, 0, cfg.k);
  for (auto _ : state) benchmark::DoNotOptimize(predict(params, patch.centered));
}
BENCHMARK(BM_Forward)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.k = 50;
  const ModelParams params = init_params(cfg);
  PointCloud cloud = sphere(5000);
  const auto samples = make_samples(cloud, cfg.k, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  std::vector<const TrainSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  ModelParams grads = params.zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradients(params, batch, grads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Icp(benchmark::State& state) {
  const PointCloud cloud = realize(icp_suite(0, static_cast<std::size_t>(state.range(0))).front());
  const IcpProtocol protocol;
  for (auto _ : state) benchmark::DoNotOptimize(run_icp_protocol(cloud, protocol, {Estimator::gt, 0, nullptr}));
}
BENCHMARK(BM_Icp)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
