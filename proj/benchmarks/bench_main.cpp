#include <benchmark/benchmark.h>

#include <random>

#include "dcpfl/clustering.hpp"
#include "dcpfl/discrepancy.hpp"
#include "dcpfl/nn.hpp"
#include "dcpfl/sim.hpp"

using namespace dcpfl;

static Batch make_batch(std::size_t rows, std::size_t dim, std::size_t classes) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Batch b;
  b.inputs = Matrix(rows, dim);
  for (double& v : b.inputs.data()) v = g(rng);
  for (std::size_t i = 0; i < rows; ++i) b.labels.push_back(static_cast<int>(i % classes));
  return b;
}

static void BM_LossAndGrad(benchmark::State& state) {
  const auto m = ModelParams::glorot_uniform({16, 32, 10}, 3);
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)), 16, 10);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(m, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGrad)->Arg(1)->Arg(32)->Arg(256);

static void BM_GroupGraph(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(build_group_graph(d));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GroupGraph)->RangeMultiplier(2)->Range(8, 64)->Complexity();

static void BM_DiscrepancyMatrix30(benchmark::State& state) {
  std::vector<ModelParams> models;
  for (std::uint64_t i = 0; i < 30; ++i) models.push_back(ModelParams::glorot_uniform({16, 32, 10}, i));
  for (auto _ : state) benchmark::DoNotOptimize(discrepancy_matrix(models));
}
BENCHMARK(BM_DiscrepancyMatrix30);

// Whole simulated rounds; time per round is reported via the item rate.
static void BM_SimRounds(benchmark::State& state) {
  RunConfig c;
  c.algorithm = state.range(0) == 0 ? Algorithm::fedavg : Algorithm::dcpfl;
  c.max_rounds = 20;
  for (auto _ : state) benchmark::DoNotOptimize(run(c));
  state.SetItemsProcessed(state.iterations() * c.max_rounds);
  state.SetLabel(to_string(c.algorithm));
}
BENCHMARK(BM_SimRounds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
