#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dagdist/acyclicity.hpp"
#include "dagdist/projection.hpp"
#include "dagdist/rng.hpp"
#include "dagdist/sampling.hpp"

using namespace dagdist;

namespace {

Eigen::MatrixXd random_offdiag(int p, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (j != k) m(j, k) = normal(rng);
  return m;
}

void BM_AcyclicityValue(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  auto rng = stream_rng(1, 0);
  const WeightedAdjacency w(random_offdiag(p, rng, 0.3 / p));
  for (auto _ : state) benchmark::DoNotOptimize(acyclicity_value(w));
}
BENCHMARK(BM_AcyclicityValue)->Arg(10)->Arg(20)->Arg(50)->Arg(100);

void BM_AcyclicityGradient(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  auto rng = stream_rng(2, 0);
  const WeightedAdjacency w(random_offdiag(p, rng, 0.3 / p));
  for (auto _ : state) benchmark::DoNotOptimize(acyclicity_gradient(w));
}
BENCHMARK(BM_AcyclicityGradient)->Arg(10)->Arg(20)->Arg(50)->Arg(100);

void BM_L1Project(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  auto rng = stream_rng(3, 0);
  const WeightedAdjacency w(random_offdiag(p, rng));
  const SparsityBudget budget{0.25 * w.l1_norm()};
  for (auto _ : state) benchmark::DoNotOptimize(l1_project(w, budget));
}
BENCHMARK(BM_L1Project)->Arg(10)->Arg(50)->Arg(200);

void BM_ReferenceProjection(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  auto rng = stream_rng(4, 0);
  const WeightedAdjacency w(random_offdiag(p, rng));
  const PathSchedule schedule = PathSchedule::reference(p);
  for (auto _ : state)
    benchmark::DoNotOptimize(project(w, SparsityBudget{}, schedule));
}
BENCHMARK(BM_ReferenceProjection)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_TrainingProjection(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  auto rng = stream_rng(5, 0);
  const WeightedAdjacency w(random_offdiag(p, rng));
  const PathSchedule schedule = PathSchedule::training(p);
  for (auto _ : state)
    benchmark::DoNotOptimize(project(w, SparsityBudget{}, schedule));
}
BENCHMARK(BM_TrainingProjection)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_BatchProjection(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  auto rng = stream_rng(6, 0);
  std::vector<WeightedAdjacency> batch;
  for (int i = 0; i < 20; ++i) batch.push_back(WeightedAdjacency(random_offdiag(p, rng)));
  const PathSchedule schedule = PathSchedule::reference(p);
  for (auto _ : state)
    benchmark::DoNotOptimize(project_batch(batch, SparsityBudget{}, schedule));
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_BatchProjection)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SampleDag(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const BaseGaussian base = BaseGaussian::standard(p, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_dag(base, SparsityBudget{}, 10));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_SampleDag)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
