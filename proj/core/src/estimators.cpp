#include "minigibbs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minigibbs {

namespace {

// Direct per-factor draws beat B-trials-plus-multinomial once the
// expected trial count is a few times the list length.
constexpr double kDirectPathFactor = 2.0;

bool contains_sorted(const std::vector<std::int32_t>& sorted, std::int32_t value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

}  // namespace

PoissonVectorSampler::FixedMeanPoisson::FixedMeanPoisson(double mean) : mean_(mean) {
  if (mean <= 0.0) return;
  // Inversion tables pay off for small and medium means; large means
  // keep the constant-time std sampler and stay off the table memory.
  if (mean > 4096.0) return;
  long double p = std::exp(-static_cast<long double>(mean));
  if (p <= 0.0L) return;
  long double cum = p;
  std::int64_t k = 0;
  cdf_.push_back(static_cast<double>(cum));
  while (cum < 1.0L - 1e-14L || static_cast<double>(k) < mean) {
    ++k;
    p *= mean / static_cast<long double>(k);
    cum += p;
    cdf_.push_back(static_cast<double>(cum));
    if (k > 1000 && p < 1e-320L) break;
  }
}

std::int64_t PoissonVectorSampler::FixedMeanPoisson::operator()(Rng& rng) const {
  if (mean_ <= 0.0) return 0;
  if (cdf_.empty()) {
    std::poisson_distribution<std::int64_t> fallback(mean_);
    return fallback(rng);
  }
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return it - cdf_.begin();  // beyond-table mass (< 1e-14) maps to the tail entry
}

PoissonVectorSampler::PoissonVectorSampler(
    std::vector<std::pair<std::int32_t, double>> rates) {
  ids_.reserve(rates.size());
  cumulative_.reserve(rates.size());
  double running = 0.0;
  for (const auto& [id, rate] : rates) {
    if (!std::isfinite(rate) || rate < 0.0) {
      throw std::invalid_argument("poisson vector sampler: rates must be finite and >= 0");
    }
    if (rate == 0.0) continue;
    running += rate;
    ids_.push_back(id);
    cumulative_.push_back(running);
  }
  total_rate_ = running;
  if (total_rate_ > 0.0) {
    direct_ = total_rate_ > kDirectPathFactor * static_cast<double>(ids_.size());
    if (direct_) {
      per_factor_.reserve(ids_.size());
      double previous = 0.0;
      for (double c : cumulative_) {
        per_factor_.emplace_back(c - previous);
        previous = c;
      }
    } else {
      total_ = FixedMeanPoisson(total_rate_);
    }
  }
}

void PoissonVectorSampler::sample_into(Rng& rng, SparseCounts& out,
                                       std::vector<std::int32_t>& trial_scratch) const {
  out.clear();
  if (total_rate_ == 0.0) return;

  if (direct_) {
    for (std::size_t k = 0; k < ids_.size(); ++k) {
      const std::int64_t count = per_factor_[k](rng);
      if (count > 0) out.entries.emplace_back(ids_[k], count);
    }
    return;
  }

  const std::int64_t total = total_(rng);
  if (total == 0) return;
  trial_scratch.clear();
  trial_scratch.reserve(static_cast<std::size_t>(total));
  std::uniform_real_distribution<double> unif(0.0, total_rate_);
  for (std::int64_t t = 0; t < total; ++t) {
    const double u = unif(rng);
    // First cell whose cumulative weight exceeds u; ties go to the
    // lower index because the comparison is strict.
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t cell = it == cumulative_.end()
                                 ? cumulative_.size() - 1
                                 : static_cast<std::size_t>(it - cumulative_.begin());
    trial_scratch.push_back(static_cast<std::int32_t>(cell));
  }
  std::sort(trial_scratch.begin(), trial_scratch.end());
  for (std::size_t t = 0; t < trial_scratch.size();) {
    std::size_t run = t + 1;
    while (run < trial_scratch.size() && trial_scratch[run] == trial_scratch[t]) ++run;
    out.entries.emplace_back(ids_[static_cast<std::size_t>(trial_scratch[t])],
                             static_cast<std::int64_t>(run - t));
    t = run;
  }
}

SparseCounts PoissonVectorSampler::sample(Rng& rng) const {
  SparseCounts out;
  std::vector<std::int32_t> scratch;
  sample_into(rng, out, scratch);
  return out;
}

SparseCounts sample_poisson_counts(
    const std::vector<std::pair<std::int32_t, double>>& rates, Rng& rng) {
  return PoissonVectorSampler(rates).sample(rng);
}

double unbiased_energy_estimate(const FactorGraph& graph, const State& x,
                                const PoissonMinibatchConfig& cfg,
                                const SparseCounts& counts) {
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw std::invalid_argument("unbiased energy estimate: lambda must be > 0");
  }
  const double psi = graph.stats().total_max_energy;
  const auto& factors = graph.factors();
  double estimate = 0.0;
  for (const auto& [id, count] : counts.entries) {
    if (id < 0 || static_cast<std::size_t>(id) >= factors.size()) {
      throw std::invalid_argument("unbiased energy estimate: unknown factor index");
    }
    const Factor& factor = factors[static_cast<std::size_t>(id)];
    if (factor.max_energy() == 0.0) continue;  // all-zero table, log1p(0)
    estimate += static_cast<double>(count) *
                std::log1p(psi * factor.value_at(x) / (cfg.lambda * factor.max_energy()));
  }
  return estimate;
}

double local_minibatch_estimate(const FactorGraph& graph, std::int32_t var,
                                const State& x,
                                std::span<const std::int32_t> batch) {
  if (batch.empty()) {
    throw std::invalid_argument("local minibatch estimate: batch must be non-empty");
  }
  const auto& adjacent = graph.adjacent_factors(var);
  const auto& factors = graph.factors();
  double sum = 0.0;
  for (std::int32_t id : batch) {
    if (!contains_sorted(adjacent, id)) {
      throw std::invalid_argument(
          "local minibatch estimate: batch factor not adjacent to variable");
    }
    sum += factors[static_cast<std::size_t>(id)].value_at(x);
  }
  return static_cast<double>(adjacent.size()) / static_cast<double>(batch.size()) * sum;
}

double weighted_local_estimate(const FactorGraph& graph, std::int32_t var,
                               const State& x, const SparseCounts& counts,
                               double lambda, double local_max_energy) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("weighted local estimate: lambda must be > 0");
  }
  const auto& adjacent = graph.adjacent_factors(var);
  const auto& factors = graph.factors();
  double estimate = 0.0;
  for (const auto& [id, count] : counts.entries) {
    if (!contains_sorted(adjacent, id)) {
      throw std::invalid_argument(
          "weighted local estimate: counted factor not adjacent to variable");
    }
    const Factor& factor = factors[static_cast<std::size_t>(id)];
    if (factor.max_energy() == 0.0) continue;
    estimate += static_cast<double>(count) * local_max_energy /
                (lambda * factor.max_energy()) * factor.value_at(x);
  }
  return estimate;
}

BatchSizeRecommendation recommended_batch_size(double total_max_energy, double delta,
                                               double failure_prob) {
  if (!(total_max_energy >= 0.0) || !std::isfinite(total_max_energy)) {
    throw std::invalid_argument("recommended batch size: Psi must be finite and >= 0");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("recommended batch size: delta must be > 0");
  }
  if (!(failure_prob > 0.0) || !(failure_prob < 1.0)) {
    throw std::invalid_argument("recommended batch size: failure prob must be in (0,1)");
  }
  const double psi_sq = total_max_energy * total_max_energy;
  return BatchSizeRecommendation{
      std::max(8.0 * psi_sq / (delta * delta) * std::log(2.0 / failure_prob),
               2.0 * psi_sq / delta)};
}

TwoPointEstimator::TwoPointEstimator(double delta) : delta_(delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("two-point estimator: delta must be finite and >= 0");
  }
}

EnergyDraw TwoPointEstimator::draw(const FactorGraph& graph, const State& x,
                                   Rng& rng) const {
  const double exact = graph.energy(x);
  const double offset = uniform01(rng) < 0.5 ? -delta_ : delta_;
  return EnergyDraw{exact + offset,
                    static_cast<std::int64_t>(graph.factors().size()), 0};
}

std::vector<WeightedValue> TwoPointEstimator::support(const FactorGraph& graph,
                                                      const State& x) const {
  const double exact = graph.energy(x);
  if (delta_ == 0.0) {
    return {{exact, 1.0}};
  }
  return {{exact - delta_, 0.5}, {exact + delta_, 0.5}};
}

TwoPointEstimator make_two_point_estimator(double delta) {
  return TwoPointEstimator(delta);
}

namespace {

std::vector<std::pair<std::int32_t, double>> full_graph_rates(const FactorGraph& graph,
                                                              double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("poisson energy estimator: lambda must be > 0");
  }
  const double psi = graph.stats().total_max_energy;
  std::vector<std::pair<std::int32_t, double>> rates;
  if (psi == 0.0) return rates;
  rates.reserve(graph.factors().size());
  for (std::size_t f = 0; f < graph.factors().size(); ++f) {
    rates.emplace_back(static_cast<std::int32_t>(f),
                       lambda * graph.factors()[f].max_energy() / psi);
  }
  return rates;
}

}  // namespace

PoissonEnergyEstimator::PoissonEnergyEstimator(const FactorGraph& graph, double lambda)
    : graph_(&graph), cfg_{lambda}, counts_(full_graph_rates(graph, lambda)) {}

EnergyDraw PoissonEnergyEstimator::draw(const FactorGraph& graph, const State& x,
                                        Rng& rng) const {
  if (&graph != graph_) {
    throw std::invalid_argument(
        "poisson energy estimator: draw on a different graph than bound at construction");
  }
  // Reused per thread: draws are hot inside sampler loops.
  thread_local SparseCounts counts;
  thread_local std::vector<std::int32_t> scratch;
  counts_.sample_into(rng, counts, scratch);
  const double value = unbiased_energy_estimate(graph, x, cfg_, counts);
  return EnergyDraw{value, static_cast<std::int64_t>(counts.entries.size()),
                    counts.total_trials()};
}

}  // namespace minigibbs
