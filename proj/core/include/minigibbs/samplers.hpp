#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "minigibbs/estimators.hpp"
#include "minigibbs/factor_graph.hpp"
#include "minigibbs/rng.hpp"

namespace minigibbs {

/// Per-step telemetry. factor_evals counts factor-table evaluations as
/// the unit of work; an acceptance-ratio pass over the adjacent factors
/// counts one unit per factor visited. minibatch_size is the total
/// number of Poisson trials (or the subset size) consumed this step.
struct StepRecord {
  std::int32_t variable = 0;
  std::int32_t proposed_value = 0;
  bool accepted = true;
  std::int64_t minibatch_size = 0;
  std::int64_t factor_evals = 0;
};

/// Chain state for the energy-caching samplers: the assignment plus the
/// estimate produced when it was last adopted.
struct AugmentedState {
  State x;
  double cached_energy = 0.0;
};

/// Samples an index from the distribution proportional to exp(energy),
/// stabilized by max subtraction. Energies must be finite and non-empty.
std::int32_t categorical_from_energies(std::span<const double> energies, Rng& rng);

/// Single-site Gibbs update: resamples a uniformly chosen variable from
/// its exact conditional. Cost D * |A[i]| evaluations per step.
class GibbsSampler {
 public:
  explicit GibbsSampler(const FactorGraph& graph);
  StepRecord step(State& x, Rng& rng);

 private:
  const FactorGraph* graph_;
  std::vector<double> energies_;
};

/// Gibbs with all candidate energies replaced by full-graph estimator
/// draws; the current value's estimate is carried over from the step at
/// which it was adopted instead of being re-drawn.
class MinGibbsSampler {
 public:
  MinGibbsSampler(const FactorGraph& graph, const EnergyEstimator& estimator);

  /// Draws the initial cached energy at x.
  AugmentedState make_initial(const State& x, Rng& rng) const;

  StepRecord step(AugmentedState& state, Rng& rng);

 private:
  const FactorGraph* graph_;
  const EnergyEstimator* estimator_;
  std::vector<double> energies_;
};

/// Gibbs with one shared uniform minibatch of adjacent factors per step,
/// scaled to estimate each candidate's local energy. A batch size at or
/// above the neighborhood size degenerates to exact Gibbs.
class LocalMinibatchSampler {
 public:
  LocalMinibatchSampler(const FactorGraph& graph, std::int64_t batch_size);
  StepRecord step(State& x, Rng& rng);

 private:
  const FactorGraph* graph_;
  std::int64_t batch_size_;
  std::vector<std::vector<std::int32_t>> pools_;  // per-variable shuffle pools
  std::vector<std::int32_t> batch_;
  std::vector<std::size_t> swaps_;
  std::vector<double> energies_;
};

/// Metropolis-Hastings whose proposal is the weighted-minibatch Gibbs
/// conditional: Poisson counts with rates lambda * M / L over the chosen
/// variable's neighborhood drive the candidate energies, and the
/// acceptance ratio combines the exact local energies with the same
/// estimates. Stationary distribution is exactly the Gibbs measure.
class MgpmhSampler {
 public:
  MgpmhSampler(const FactorGraph& graph, double lambda);
  StepRecord step(State& x, Rng& rng);
  double lambda() const { return lambda_; }

 private:
  const FactorGraph* graph_;
  double lambda_ = 0.0;
  std::vector<PoissonVectorSampler> per_variable_;
  SparseCounts counts_;
  std::vector<std::int32_t> trial_scratch_;
  std::vector<double> energies_;
};

/// MGPMH with the exact local-energy ratio replaced by a second,
/// independent full-graph estimate drawn once per step; the chain runs
/// on (state, cached estimate) pairs like MIN-Gibbs.
class DoubleMinSampler {
 public:
  DoubleMinSampler(const FactorGraph& graph, double lambda,
                   const EnergyEstimator& second_estimator);

  AugmentedState make_initial(const State& x, Rng& rng) const;

  StepRecord step(AugmentedState& state, Rng& rng);

 private:
  const FactorGraph* graph_;
  double lambda_ = 0.0;
  const EnergyEstimator* second_;
  std::vector<PoissonVectorSampler> per_variable_;
  SparseCounts counts_;
  std::vector<std::int32_t> trial_scratch_;
  std::vector<double> energies_;
};

/// Thrown when a run_chain observer fails; distinct from sampler errors.
struct ObserverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Applies sampler.step `iterations` times, invoking
/// observer(iteration, state, record) after each step (iterations are
/// 1-based). The trajectory is fully determined by the RNG state.
template <class Sampler, class StateT, class Observer>
StateT run_chain(Sampler& sampler, StateT state, std::int64_t iterations, Rng& rng,
                 Observer&& observer) {
  if (iterations < 0) {
    throw std::invalid_argument("run_chain: iteration count must be >= 0");
  }
  for (std::int64_t t = 1; t <= iterations; ++t) {
    const StepRecord record = sampler.step(state, rng);
    try {
      observer(t, state, record);
    } catch (const std::exception& e) {
      throw ObserverError("observer failed at iteration " + std::to_string(t) + ": " +
                          e.what());
    }
  }
  return state;
}

}  // namespace minigibbs
