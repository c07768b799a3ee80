#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "minigibbs/factor_graph.hpp"
#include "minigibbs/rng.hpp"

namespace minigibbs {

/// Expected batch size for Poisson minibatching.
struct PoissonMinibatchConfig {
  double lambda = 1.0;  // > 0
};

/// Sparse Poisson count vector: only factors with a positive count are
/// stored, sorted by factor index.
struct SparseCounts {
  std::vector<std::pair<std::int32_t, std::int64_t>> entries;

  bool empty() const { return entries.empty(); }
  void clear() { entries.clear(); }
  std::int64_t total_trials() const {
    std::int64_t total = 0;
    for (const auto& [id, count] : entries) total += count;
    return total;
  }
};

/// Samples a vector of independent Poisson counts, one per rate-list
/// entry. Rates are preprocessed once at construction (O(m)); each draw
/// afterwards costs O(min(total rate, m)) expected:
///
///   - small total rate: draw the total B ~ Poisson(sum of rates) and
///     distribute B trials multinomially by inverse CDF over the
///     cumulative weights, ties broken toward the lower index;
///   - total rate exceeding the list length: draw each count directly,
///     which is cheaper than generating that many trials.
///
/// Both paths produce exactly the independent joint Poisson law.
/// Instances are immutable after construction and safe to share across
/// threads; per-draw scratch lives in the caller.
class PoissonVectorSampler {
 public:
  /// rates: (factor index, rate >= 0) pairs. Zero rates are dropped.
  explicit PoissonVectorSampler(std::vector<std::pair<std::int32_t, double>> rates);

  double total_rate() const { return total_rate_; }

  SparseCounts sample(Rng& rng) const;
  void sample_into(Rng& rng, SparseCounts& out,
                   std::vector<std::int32_t>& trial_scratch) const;

 private:
  // Poisson draws for one fixed mean by inversion through a precomputed
  // CDF table (one uniform and a binary search per draw). Means too
  // large to tabulate fall back to the standard library sampler.
  class FixedMeanPoisson {
   public:
    explicit FixedMeanPoisson(double mean);
    std::int64_t operator()(Rng& rng) const;

   private:
    std::vector<double> cdf_;  // cdf_[k] = P(X <= k); empty means fallback
    double mean_ = 0.0;
  };

  std::vector<std::int32_t> ids_;
  std::vector<double> cumulative_;  // running sums of the positive rates
  std::vector<FixedMeanPoisson> per_factor_;
  FixedMeanPoisson total_{0.0};
  double total_rate_ = 0.0;
  bool direct_ = false;
};

/// One-shot convenience wrapper; repeated draws from the same rate list
/// should construct a PoissonVectorSampler once instead.
SparseCounts sample_poisson_counts(
    const std::vector<std::pair<std::int32_t, double>>& rates, Rng& rng);

/// Bias-adjusted Poisson energy estimate
///
///   sum over counted factors of  s * log(1 + Psi * phi(x) / (lambda * M))
///
/// whose exponential has expectation exactly exp(total energy) when the
/// counts are Poisson with rates lambda * M / Psi. Deterministic given
/// the counts. log1p keeps tiny arguments accurate.
double unbiased_energy_estimate(const FactorGraph& graph, const State& x,
                                const PoissonMinibatchConfig& cfg,
                                const SparseCounts& counts);

/// Horvitz-Thompson style local estimate: (|A[i]| / |batch|) * sum of
/// the batch factors at x. The batch must be a non-empty subset of the
/// factors adjacent to var; equals the exact local energy when the batch
/// covers all of them.
double local_minibatch_estimate(const FactorGraph& graph, std::int32_t var,
                                const State& x,
                                std::span<const std::int32_t> batch);

/// Weighted local estimate  sum of (s * L / (lambda * M)) * phi(x) over
/// counted factors, unbiased for the local energy when counts are
/// Poisson with rates lambda * M / L restricted to the factors adjacent
/// to var.
double weighted_local_estimate(const FactorGraph& graph, std::int32_t var,
                               const State& x, const SparseCounts& counts,
                               double lambda, double local_max_energy);

struct BatchSizeRecommendation {
  double lambda = 0.0;
};

/// Smallest expected batch size guaranteeing
/// P(|estimate - energy| >= delta) <= failure_prob:
/// max(8 Psi^2 / delta^2 * ln(2 / a), 2 Psi^2 / delta).
BatchSizeRecommendation recommended_batch_size(double total_max_energy, double delta,
                                               double failure_prob);

/// A full-graph energy-estimate draw plus its cost accounting: how many
/// factor-table evaluations it performed and how many minibatch trials
/// it consumed.
struct EnergyDraw {
  double value = 0.0;
  std::int64_t factor_evals = 0;
  std::int64_t batch_trials = 0;
};

struct WeightedValue {
  double value = 0.0;
  double probability = 0.0;
};

/// Family of energy-estimate distributions mu_x, one per state. Draws
/// take an explicit RNG; implementations hold no mutable state, so one
/// instance may serve concurrent chains with independent generators.
class EnergyEstimator {
 public:
  virtual ~EnergyEstimator() = default;
  virtual EnergyDraw draw(const FactorGraph& graph, const State& x, Rng& rng) const = 0;
};

/// Estimator whose per-state support is finite and enumerable, with all
/// support points within bound_delta() of the exact energy. Required by
/// the exact augmented-kernel analysis.
class FiniteSupportEstimator : public EnergyEstimator {
 public:
  virtual std::vector<WeightedValue> support(const FactorGraph& graph,
                                             const State& x) const = 0;
  virtual double bound_delta() const = 0;
};

/// Two-point test estimator: probability 1/2 each on energy(x) - delta
/// and energy(x) + delta (a point mass when delta is zero).
class TwoPointEstimator final : public FiniteSupportEstimator {
 public:
  explicit TwoPointEstimator(double delta);

  EnergyDraw draw(const FactorGraph& graph, const State& x, Rng& rng) const override;
  std::vector<WeightedValue> support(const FactorGraph& graph,
                                     const State& x) const override;
  double bound_delta() const override { return delta_; }

 private:
  double delta_ = 0.0;
};

TwoPointEstimator make_two_point_estimator(double delta);

/// The bias-adjusted Poisson estimator bound to a graph: rates
/// lambda * M / Psi per factor, evaluated through
/// unbiased_energy_estimate. exp(draw) is unbiased for exp(energy).
class PoissonEnergyEstimator final : public EnergyEstimator {
 public:
  PoissonEnergyEstimator(const FactorGraph& graph, double lambda);

  EnergyDraw draw(const FactorGraph& graph, const State& x, Rng& rng) const override;
  double lambda() const { return cfg_.lambda; }

 private:
  const FactorGraph* graph_;
  PoissonMinibatchConfig cfg_;
  PoissonVectorSampler counts_;
};

}  // namespace minigibbs
