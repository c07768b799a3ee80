#include "minigibbs/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace minigibbs {

namespace {

// Per-variable rate tables lambda * M / L over each neighborhood. An
// all-zero graph (L == 0) yields empty tables and uniform proposals.
std::vector<PoissonVectorSampler> make_neighborhood_samplers(const FactorGraph& graph,
                                                             double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("minibatch sampler: lambda must be > 0");
  }
  const double local_max = graph.stats().local_max_energy;
  std::vector<PoissonVectorSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(graph.num_variables()));
  for (std::int32_t i = 0; i < graph.num_variables(); ++i) {
    std::vector<std::pair<std::int32_t, double>> rates;
    if (local_max > 0.0) {
      for (std::int32_t f : graph.adjacent_factors(i)) {
        rates.emplace_back(
            f, lambda * graph.factors()[static_cast<std::size_t>(f)].max_energy() /
                   local_max);
      }
    }
    samplers.emplace_back(std::move(rates));
  }
  return samplers;
}

// Exact local-energy difference sum over A[i] of phi(x with i->v) - phi(x).
// Leaves x unchanged; counted as |A[i]| evaluation units.
double local_energy_delta(const FactorGraph& graph, std::int32_t var, State& x,
                          std::int32_t proposal) {
  const std::int32_t current = x[static_cast<std::size_t>(var)];
  double delta = 0.0;
  for (std::int32_t f : graph.adjacent_factors(var)) {
    const Factor& factor = graph.factors()[static_cast<std::size_t>(f)];
    x.set(static_cast<std::size_t>(var), proposal);
    const double at_proposal = factor.value_at(x);
    x.set(static_cast<std::size_t>(var), current);
    delta += at_proposal - factor.value_at(x);
  }
  return delta;
}

bool metropolis_accept(double log_ratio, Rng& rng) {
  return log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
}

}  // namespace

std::int32_t categorical_from_energies(std::span<const double> energies, Rng& rng) {
  if (energies.empty()) {
    throw std::invalid_argument("categorical: energy list must be non-empty");
  }
  double max_energy = energies[0];
  for (double e : energies) {
    if (!std::isfinite(e)) {
      throw std::invalid_argument("categorical: energies must be finite");
    }
    max_energy = std::max(max_energy, e);
  }
  double total = 0.0;
  for (double e : energies) total += std::exp(e - max_energy);
  const double u = uniform01(rng) * total;
  double running = 0.0;
  for (std::size_t v = 0; v + 1 < energies.size(); ++v) {
    running += std::exp(energies[v] - max_energy);
    if (u < running) return static_cast<std::int32_t>(v);
  }
  return static_cast<std::int32_t>(energies.size() - 1);
}

GibbsSampler::GibbsSampler(const FactorGraph& graph)
    : graph_(&graph),
      energies_(static_cast<std::size_t>(graph.domain_size()), 0.0) {}

StepRecord GibbsSampler::step(State& x, Rng& rng) {
  const FactorGraph& g = *graph_;
  const std::int32_t i =
      static_cast<std::int32_t>(uniform_index(rng, g.num_variables()));
  for (std::int32_t u = 0; u < g.domain_size(); ++u) {
    x.set(static_cast<std::size_t>(i), u);
    energies_[static_cast<std::size_t>(u)] = g.local_energy(i, x);
  }
  const std::int32_t v = categorical_from_energies(energies_, rng);
  x.set(static_cast<std::size_t>(i), v);
  return StepRecord{
      i, v, true, 0,
      static_cast<std::int64_t>(g.domain_size()) *
          static_cast<std::int64_t>(g.adjacent_factors(i).size())};
}

MinGibbsSampler::MinGibbsSampler(const FactorGraph& graph,
                                 const EnergyEstimator& estimator)
    : graph_(&graph),
      estimator_(&estimator),
      energies_(static_cast<std::size_t>(graph.domain_size()), 0.0) {}

AugmentedState MinGibbsSampler::make_initial(const State& x, Rng& rng) const {
  graph_->validate_state(x);
  return AugmentedState{x, estimator_->draw(*graph_, x, rng).value};
}

StepRecord MinGibbsSampler::step(AugmentedState& state, Rng& rng) {
  const FactorGraph& g = *graph_;
  const std::int32_t i =
      static_cast<std::int32_t>(uniform_index(rng, g.num_variables()));
  const std::int32_t current = state.x[static_cast<std::size_t>(i)];
  std::int64_t evals = 0;
  std::int64_t trials = 0;
  energies_[static_cast<std::size_t>(current)] = state.cached_energy;
  for (std::int32_t u = 0; u < g.domain_size(); ++u) {
    if (u == current) continue;
    state.x.set(static_cast<std::size_t>(i), u);
    const EnergyDraw draw = estimator_->draw(g, state.x, rng);
    energies_[static_cast<std::size_t>(u)] = draw.value;
    evals += draw.factor_evals;
    trials += draw.batch_trials;
  }
  state.x.set(static_cast<std::size_t>(i), current);
  const std::int32_t v = categorical_from_energies(energies_, rng);
  state.x.set(static_cast<std::size_t>(i), v);
  state.cached_energy = energies_[static_cast<std::size_t>(v)];
  return StepRecord{i, v, true, trials, evals};
}

LocalMinibatchSampler::LocalMinibatchSampler(const FactorGraph& graph,
                                             std::int64_t batch_size)
    : graph_(&graph),
      batch_size_(batch_size),
      energies_(static_cast<std::size_t>(graph.domain_size()), 0.0) {
  if (batch_size_ < 1) {
    throw std::invalid_argument("local minibatch sampler: batch size must be >= 1");
  }
  pools_.resize(static_cast<std::size_t>(graph.num_variables()));
  for (std::int32_t i = 0; i < graph.num_variables(); ++i) {
    const auto& adjacent = graph.adjacent_factors(i);
    pools_[static_cast<std::size_t>(i)].assign(adjacent.begin(), adjacent.end());
  }
}

StepRecord LocalMinibatchSampler::step(State& x, Rng& rng) {
  const FactorGraph& g = *graph_;
  const std::int32_t i =
      static_cast<std::int32_t>(uniform_index(rng, g.num_variables()));
  std::vector<std::int32_t>& pool = pools_[static_cast<std::size_t>(i)];
  const std::int64_t pool_size = static_cast<std::int64_t>(pool.size());
  const std::int64_t batch_size = std::min(batch_size_, pool_size);

  // Partial Fisher-Yates over a persistent pool, undone afterwards so a
  // step costs O(B) rather than O(|A[i]|).
  batch_.clear();
  swaps_.clear();
  for (std::int64_t t = 0; t < batch_size; ++t) {
    const std::size_t j =
        static_cast<std::size_t>(t + uniform_index(rng, pool_size - t));
    std::swap(pool[static_cast<std::size_t>(t)], pool[j]);
    swaps_.push_back(j);
    batch_.push_back(pool[static_cast<std::size_t>(t)]);
  }
  for (std::size_t t = swaps_.size(); t-- > 0;) {
    std::swap(pool[t], pool[swaps_[t]]);
  }

  const double scale =
      batch_size > 0 ? static_cast<double>(pool_size) / static_cast<double>(batch_size)
                     : 0.0;
  for (std::int32_t u = 0; u < g.domain_size(); ++u) {
    x.set(static_cast<std::size_t>(i), u);
    double sum = 0.0;
    for (std::int32_t f : batch_) {
      sum += g.factors()[static_cast<std::size_t>(f)].value_at(x);
    }
    energies_[static_cast<std::size_t>(u)] = scale * sum;
  }
  const std::int32_t v = categorical_from_energies(energies_, rng);
  x.set(static_cast<std::size_t>(i), v);
  return StepRecord{i, v, true, batch_size,
                    static_cast<std::int64_t>(g.domain_size()) * batch_size};
}

MgpmhSampler::MgpmhSampler(const FactorGraph& graph, double lambda)
    : graph_(&graph),
      lambda_(lambda),
      per_variable_(make_neighborhood_samplers(graph, lambda)),
      energies_(static_cast<std::size_t>(graph.domain_size()), 0.0) {}

StepRecord MgpmhSampler::step(State& x, Rng& rng) {
  const FactorGraph& g = *graph_;
  const double local_max = g.stats().local_max_energy;
  const std::int32_t i =
      static_cast<std::int32_t>(uniform_index(rng, g.num_variables()));
  const std::int32_t current = x[static_cast<std::size_t>(i)];

  per_variable_[static_cast<std::size_t>(i)].sample_into(rng, counts_, trial_scratch_);
  for (std::int32_t u = 0; u < g.domain_size(); ++u) {
    x.set(static_cast<std::size_t>(i), u);
    energies_[static_cast<std::size_t>(u)] =
        weighted_local_estimate(g, i, x, counts_, lambda_, local_max);
  }
  x.set(static_cast<std::size_t>(i), current);

  const std::int32_t v = categorical_from_energies(energies_, rng);
  std::int64_t evals = static_cast<std::int64_t>(g.domain_size()) *
                       static_cast<std::int64_t>(counts_.entries.size());
  bool accepted = true;
  if (v != current) {
    const double log_ratio = local_energy_delta(g, i, x, v) +
                             energies_[static_cast<std::size_t>(current)] -
                             energies_[static_cast<std::size_t>(v)];
    evals += static_cast<std::int64_t>(g.adjacent_factors(i).size());
    accepted = metropolis_accept(log_ratio, rng);
    if (accepted) x.set(static_cast<std::size_t>(i), v);
  }
  return StepRecord{i, v, accepted, counts_.total_trials(), evals};
}

DoubleMinSampler::DoubleMinSampler(const FactorGraph& graph, double lambda,
                                   const EnergyEstimator& second_estimator)
    : graph_(&graph),
      lambda_(lambda),
      second_(&second_estimator),
      per_variable_(make_neighborhood_samplers(graph, lambda)),
      energies_(static_cast<std::size_t>(graph.domain_size()), 0.0) {}

AugmentedState DoubleMinSampler::make_initial(const State& x, Rng& rng) const {
  graph_->validate_state(x);
  return AugmentedState{x, second_->draw(*graph_, x, rng).value};
}

StepRecord DoubleMinSampler::step(AugmentedState& state, Rng& rng) {
  const FactorGraph& g = *graph_;
  const double local_max = g.stats().local_max_energy;
  const std::int32_t i =
      static_cast<std::int32_t>(uniform_index(rng, g.num_variables()));
  const std::int32_t current = state.x[static_cast<std::size_t>(i)];

  per_variable_[static_cast<std::size_t>(i)].sample_into(rng, counts_, trial_scratch_);
  for (std::int32_t u = 0; u < g.domain_size(); ++u) {
    state.x.set(static_cast<std::size_t>(i), u);
    energies_[static_cast<std::size_t>(u)] =
        weighted_local_estimate(g, i, state.x, counts_, lambda_, local_max);
  }
  state.x.set(static_cast<std::size_t>(i), current);

  const std::int32_t v = categorical_from_energies(energies_, rng);

  // Fresh second estimate at the proposal, drawn even on a self-proposal.
  state.x.set(static_cast<std::size_t>(i), v);
  const EnergyDraw second = second_->draw(g, state.x, rng);
  const double log_ratio = second.value - state.cached_energy +
                           energies_[static_cast<std::size_t>(current)] -
                           energies_[static_cast<std::size_t>(v)];
  const bool accepted = metropolis_accept(log_ratio, rng);
  if (accepted) {
    state.cached_energy = second.value;
  } else {
    state.x.set(static_cast<std::size_t>(i), current);
  }
  const std::int64_t evals = static_cast<std::int64_t>(g.domain_size()) *
                                 static_cast<std::int64_t>(counts_.entries.size()) +
                             second.factor_evals;
  return StepRecord{i, v, accepted, counts_.total_trials() + second.batch_trials,
                    evals};
}

}  // namespace minigibbs
