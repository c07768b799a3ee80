#include <benchmark/benchmark.h>

#include "minigibbs/estimators.hpp"
#include "minigibbs/model_zoo.hpp"
#include "minigibbs/samplers.hpp"

namespace {

using namespace minigibbs;

const FactorGraph& potts20() {
  static const FactorGraph graph = make_potts({20, 4.6, 1.5, 10});
  return graph;
}

const FactorGraph& ising20() {
  static const FactorGraph graph = make_ising({20, 1.0, 1.5, 2});
  return graph;
}

void BM_GibbsStep(benchmark::State& state) {
  const FactorGraph& graph = potts20();
  GibbsSampler sampler(graph);
  Rng rng(1);
  State x(static_cast<std::size_t>(graph.num_variables()), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.step(x, rng).factor_evals);
  }
}
BENCHMARK(BM_GibbsStep);

void BM_LocalMinibatchStep(benchmark::State& state) {
  const FactorGraph& graph = potts20();
  LocalMinibatchSampler sampler(graph, state.range(0));
  Rng rng(2);
  State x(static_cast<std::size_t>(graph.num_variables()), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.step(x, rng).factor_evals);
  }
}
BENCHMARK(BM_LocalMinibatchStep)->Arg(8)->Arg(64);

void BM_MgpmhStep(benchmark::State& state) {
  const FactorGraph& graph = potts20();
  const double local_max = graph.stats().local_max_energy;
  MgpmhSampler sampler(graph, static_cast<double>(state.range(0)) * local_max *
                                  local_max);
  Rng rng(3);
  State x(static_cast<std::size_t>(graph.num_variables()), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.step(x, rng).factor_evals);
  }
}
BENCHMARK(BM_MgpmhStep)->Arg(1)->Arg(4);

void BM_MinGibbsStep(benchmark::State& state) {
  const FactorGraph& graph = ising20();
  const double psi = graph.stats().total_max_energy;
  // batch sizes far below Psi^2 keep this benchmark affordable
  const PoissonEnergyEstimator estimator(
      graph, static_cast<double>(state.range(0)) * psi);
  MinGibbsSampler sampler(graph, estimator);
  Rng rng(4);
  AugmentedState s = sampler.make_initial(
      State(static_cast<std::size_t>(graph.num_variables()), 0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.step(s, rng).factor_evals);
  }
}
BENCHMARK(BM_MinGibbsStep)->Arg(1)->Arg(8);

void BM_DoubleMinStep(benchmark::State& state) {
  const FactorGraph& graph = potts20();
  const double psi = graph.stats().total_max_energy;
  const double local_max = graph.stats().local_max_energy;
  const PoissonEnergyEstimator second(
      graph, static_cast<double>(state.range(0)) * psi);
  DoubleMinSampler sampler(graph, local_max * local_max, second);
  Rng rng(5);
  AugmentedState s = sampler.make_initial(
      State(static_cast<std::size_t>(graph.num_variables()), 0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.step(s, rng).factor_evals);
  }
}
BENCHMARK(BM_DoubleMinStep)->Arg(1)->Arg(8);

}  // namespace
