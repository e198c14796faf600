// Serial reference kernels against their OpenMP counterparts.

#include <random>

#include <benchmark/benchmark.h>

#include "mgnn/dataset.hpp"
#include "mgnn/graph.hpp"
#include "mgnn/kernels.hpp"
#include "mgnn/mnn.hpp"

namespace {

Eigen::MatrixXd random_points(Eigen::Index n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> g;
  return Eigen::MatrixXd::NullaryExpr(n, 3, [&] { return g(rng); });
}

void BM_AdjacencySerial(benchmark::State& state) {
  const auto x = random_points(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mgnn::kernels::gaussian_adjacency_serial(x, 1.0, 0.3));
}

void BM_AdjacencyParallel(benchmark::State& state) {
  const auto x = random_points(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mgnn::kernels::gaussian_adjacency_parallel(x, 1.0, 0.3));
}

BENCHMARK(BM_AdjacencySerial)->Arg(300)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdjacencyParallel)->Arg(300)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

// One training epoch of GNN2Ly on 40 synthetic clouds.
void train_epoch(benchmark::State& state, mgnn::kernels::Exec exec) {
  mgnn::SynthOptions so;
  so.boxes = so.ellipsoids = 20;
  so.n_points = 120;
  std::vector<mgnn::Sample> data;
  for (const auto& c : mgnn::synth_dataset(so)) {
    const auto g = mgnn::build_graph(c.cloud, mgnn::KernelScale::fixed(0.3));
    data.push_back({std::make_shared<const mgnn::ShiftOperator>(mgnn::eig_sym(g.laplacian)), c.cloud.points, c.label});
  }
  const auto model = mgnn::MnnModel::create(std::vector<int>{3, 64, 32}, 5, mgnn::Nonlinearity::ReLU, 1);
  mgnn::TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mgnn::train(model, data, cfg, {}, exec).loss_history);
}

void BM_TrainEpochSerial(benchmark::State& state) { train_epoch(state, mgnn::kernels::Exec::Serial); }
void BM_TrainEpochParallel(benchmark::State& state) { train_epoch(state, mgnn::kernels::Exec::Parallel); }

BENCHMARK(BM_TrainEpochSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainEpochParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
