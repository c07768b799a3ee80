#include <benchmark/benchmark.h>

#include <vector>

#include "minigibbs/estimators.hpp"
#include "minigibbs/rng.hpp"

namespace {

using minigibbs::PoissonVectorSampler;
using minigibbs::Rng;
using minigibbs::SparseCounts;

// Draw time should track the total rate, not the vector length, until
// the direct per-factor path takes over.
void BM_PoissonVectorDraw(benchmark::State& state) {
  const std::size_t length = 4096;
  const double total_rate = static_cast<double>(state.range(0));
  std::vector<std::pair<std::int32_t, double>> rates(length);
  for (std::size_t k = 0; k < length; ++k) {
    rates[k] = {static_cast<std::int32_t>(k), total_rate / static_cast<double>(length)};
  }
  const PoissonVectorSampler sampler(rates);
  Rng rng(42);
  SparseCounts counts;
  std::vector<std::int32_t> scratch;
  for (auto _ : state) {
    sampler.sample_into(rng, counts, scratch);
    benchmark::DoNotOptimize(counts.entries.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PoissonVectorDraw)->RangeMultiplier(2)->Range(64, 65536);

void BM_PoissonVectorDrawSkewedRates(benchmark::State& state) {
  // Rates spanning several orders of magnitude, like kernel-weighted
  // factor maxima on a grid.
  const std::size_t length = 4096;
  std::vector<std::pair<std::int32_t, double>> rates(length);
  double scale = static_cast<double>(state.range(0));
  for (std::size_t k = 0; k < length; ++k) {
    rates[k] = {static_cast<std::int32_t>(k),
                scale / static_cast<double>((k + 1) * (k + 1))};
  }
  const PoissonVectorSampler sampler(rates);
  Rng rng(43);
  SparseCounts counts;
  std::vector<std::int32_t> scratch;
  for (auto _ : state) {
    sampler.sample_into(rng, counts, scratch);
    benchmark::DoNotOptimize(counts.entries.data());
  }
}
BENCHMARK(BM_PoissonVectorDrawSkewedRates)->Arg(8)->Arg(512)->Arg(32768);

}  // namespace
