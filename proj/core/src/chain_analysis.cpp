#include "minigibbs/chain_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>
#include <thread>

#include "minigibbs/samplers.hpp"

namespace minigibbs {

namespace {

constexpr double kExactRowSumTol = 1e-9;
constexpr double kEmpiricalRowSumTol = 1e-12;
// Family-wise z for empirical detailed-balance residuals: the max runs
// over every matrix entry, so the per-pair multiple is wider than 3.
constexpr double kEmpiricalReversibilityZ = 4.5;

void check_row_stochastic(const DenseMatrix& probs, double tol) {
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      if (probs.at(r, c) < -tol) {
        throw std::runtime_error("transition matrix has a negative entry");
      }
      sum += probs.at(r, c);
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::runtime_error("transition matrix row does not sum to 1");
    }
  }
}

std::vector<double> normalized_exp(const std::vector<double>& log_weights) {
  double max_log = log_weights.empty() ? 0.0 : log_weights[0];
  for (double w : log_weights) max_log = std::max(max_log, w);
  std::vector<double> probs(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    probs[k] = std::exp(log_weights[k] - max_log);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> brute_force_pi(const FactorGraph& graph, std::uint64_t cap) {
  const StateSpace space = enumerate_states(graph, cap);
  std::vector<double> log_weights;
  log_weights.reserve(static_cast<std::size_t>(space.size()));
  for (const State& x : space) {
    log_weights.push_back(graph.energy(x));
  }
  return normalized_exp(log_weights);
}

std::size_t AugmentedSpace::row_of(std::uint64_t base_index, double energy) const {
  const std::size_t begin = offsets[static_cast<std::size_t>(base_index)];
  const std::size_t end = offsets[static_cast<std::size_t>(base_index) + 1];
  std::size_t best = begin;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t row = begin; row < end; ++row) {
    const double gap = std::abs(energies[row] - energy);
    if (gap < best_gap) {
      best_gap = gap;
      best = row;
    }
  }
  if (!(best_gap <= 1e-9 * std::max(1.0, std::abs(energy)))) {
    throw std::runtime_error("augmented space: realized energy not in the support");
  }
  return best;
}

AugmentedSpace make_augmented_space(const FactorGraph& graph,
                                    const FiniteSupportEstimator& estimator,
                                    std::uint64_t cap) {
  const StateSpace base(graph.num_variables(), graph.domain_size(), cap);
  AugmentedSpace space;
  space.offsets.reserve(static_cast<std::size_t>(base.size()) + 1);
  space.offsets.push_back(0);
  for (const State& x : base) {
    const std::vector<WeightedValue> support = estimator.support(graph, x);
    if (support.empty()) {
      throw std::invalid_argument("augmented space: estimator support is empty");
    }
    for (const WeightedValue& point : support) {
      space.states.push_back(x);
      space.energies.push_back(point.value);
      space.probabilities.push_back(point.probability);
    }
    if (space.states.size() > cap) {
      throw StateSpaceTooLargeError("augmented state space exceeds cap");
    }
    space.offsets.push_back(space.states.size());
  }
  return space;
}

std::vector<double> augmented_stationary(const AugmentedSpace& space) {
  std::vector<double> log_weights(space.size());
  for (std::size_t row = 0; row < space.size(); ++row) {
    // pi_bar(x, e) proportional to mu_x(e) * exp(e)
    log_weights[row] = std::log(space.probabilities[row]) + space.energies[row];
  }
  return normalized_exp(log_weights);
}

TransitionMatrix exact_gibbs_matrix(const FactorGraph& graph, std::uint64_t cap) {
  const StateSpace space = enumerate_states(graph, cap);
  const std::size_t size = static_cast<std::size_t>(space.size());
  const std::int32_t n = graph.num_variables();
  const std::int32_t d = graph.domain_size();

  TransitionMatrix matrix;
  matrix.states.assign(space.begin(), space.end());
  matrix.probs = DenseMatrix(size, size, 0.0);

  std::vector<double> locals(static_cast<std::size_t>(d));
  for (std::size_t row = 0; row < size; ++row) {
    State x = matrix.states[row];
    for (std::int32_t i = 0; i < n; ++i) {
      const std::int32_t saved = x[static_cast<std::size_t>(i)];
      for (std::int32_t w = 0; w < d; ++w) {
        x.set(static_cast<std::size_t>(i), w);
        locals[static_cast<std::size_t>(w)] = graph.local_energy(i, x);
      }
      double max_local = locals[0];
      for (double e : locals) max_local = std::max(max_local, e);
      double total = 0.0;
      for (double e : locals) total += std::exp(e - max_local);
      for (std::int32_t w = 0; w < d; ++w) {
        x.set(static_cast<std::size_t>(i), w);
        const std::size_t dest = static_cast<std::size_t>(space.index_of(x));
        matrix.probs.at(row, dest) +=
            std::exp(locals[static_cast<std::size_t>(w)] - max_local) /
            (total * static_cast<double>(n));
      }
      x.set(static_cast<std::size_t>(i), saved);
    }
  }
  check_row_stochastic(matrix.probs, kExactRowSumTol);
  return matrix;
}

TransitionMatrix exact_min_gibbs_matrix(const FactorGraph& graph,
                                        const FiniteSupportEstimator& estimator,
                                        std::uint64_t cap) {
  const StateSpace base(graph.num_variables(), graph.domain_size(), cap);
  const AugmentedSpace space = make_augmented_space(graph, estimator, cap);
  const std::size_t size = space.size();
  const std::int32_t n = graph.num_variables();
  const std::int32_t d = graph.domain_size();

  TransitionMatrix matrix;
  matrix.states = space.states;
  matrix.energies = space.energies;
  matrix.probs = DenseMatrix(size, size, 0.0);

  for (std::size_t row = 0; row < size; ++row) {
    State x = space.states[row];
    const double cached = space.energies[row];
    for (std::int32_t i = 0; i < n; ++i) {
      const std::int32_t current = x[static_cast<std::size_t>(i)];

      // Candidate supports: the current value keeps the cached estimate
      // with probability 1, every other candidate draws fresh.
      std::vector<std::vector<WeightedValue>> candidate(static_cast<std::size_t>(d));
      std::vector<std::uint64_t> candidate_base(static_cast<std::size_t>(d), 0);
      std::size_t combos = 1;
      for (std::int32_t u = 0; u < d; ++u) {
        x.set(static_cast<std::size_t>(i), u);
        candidate_base[static_cast<std::size_t>(u)] = base.index_of(x);
        if (u == current) {
          candidate[static_cast<std::size_t>(u)] = {{cached, 1.0}};
        } else {
          candidate[static_cast<std::size_t>(u)] = estimator.support(graph, x);
        }
        combos *= candidate[static_cast<std::size_t>(u)].size();
        if (combos > (1u << 20)) {
          throw std::invalid_argument(
              "exact caching-chain kernel: joint support product too large");
        }
      }
      x.set(static_cast<std::size_t>(i), current);

      // Enumerate the joint support of the D candidate estimates.
      std::vector<std::size_t> pick(static_cast<std::size_t>(d), 0);
      std::vector<double> energy(static_cast<std::size_t>(d));
      for (std::size_t combo = 0; combo < combos; ++combo) {
        double weight = 1.0;
        double max_energy = -std::numeric_limits<double>::infinity();
        for (std::int32_t u = 0; u < d; ++u) {
          const WeightedValue& point =
              candidate[static_cast<std::size_t>(u)][pick[static_cast<std::size_t>(u)]];
          weight *= point.probability;
          energy[static_cast<std::size_t>(u)] = point.value;
          max_energy = std::max(max_energy, point.value);
        }
        double total = 0.0;
        for (std::int32_t u = 0; u < d; ++u) {
          total += std::exp(energy[static_cast<std::size_t>(u)] - max_energy);
        }
        for (std::int32_t v = 0; v < d; ++v) {
          const double share =
              std::exp(energy[static_cast<std::size_t>(v)] - max_energy) / total;
          const std::size_t dest =
              v == current
                  ? row
                  : space.offsets[static_cast<std::size_t>(
                        candidate_base[static_cast<std::size_t>(v)])] +
                        pick[static_cast<std::size_t>(v)];
          matrix.probs.at(row, dest) += weight * share / static_cast<double>(n);
        }
        // Odometer increment over the support picks.
        for (std::size_t u = 0; u < static_cast<std::size_t>(d); ++u) {
          if (++pick[u] < candidate[u].size()) break;
          pick[u] = 0;
        }
      }
    }
  }
  check_row_stochastic(matrix.probs, kExactRowSumTol);
  return matrix;
}

TransitionMatrix empirical_matrix(std::vector<State> states,
                                  std::vector<double> energies,
                                  const RowStepFactory& make_stepper,
                                  std::int64_t trials_per_row, std::uint64_t seed) {
  if (states.empty()) {
    throw std::invalid_argument("empirical matrix: state list must be non-empty");
  }
  if (!energies.empty() && energies.size() != states.size()) {
    throw std::invalid_argument("empirical matrix: energies length mismatch");
  }
  if (trials_per_row < 1) {
    throw std::invalid_argument("empirical matrix: trials per row must be >= 1");
  }
  const std::size_t size = states.size();

  const std::size_t worker_count =
      std::min<std::size_t>(size, std::max(1u, std::thread::hardware_concurrency()));
  const auto run_rows = [&](std::size_t first,
                            std::size_t last) -> std::vector<std::int64_t> {
    RowStepFn step = make_stepper();
    std::vector<std::int64_t> counts(size * (last - first), 0);
    for (std::size_t row = first; row < last; ++row) {
      Rng rng(derive_stream_seed(seed, row));
      std::int64_t* row_counts = counts.data() + size * (row - first);
      for (std::int64_t t = 0; t < trials_per_row; ++t) {
        const std::size_t dest = step(row, rng);
        if (dest >= size) {
          throw std::runtime_error("empirical matrix: stepper returned bad row");
        }
        ++row_counts[dest];
      }
    }
    return counts;
  };

  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  const std::size_t chunk = (size + worker_count - 1) / worker_count;
  for (std::size_t first = 0; first < size; first += chunk) {
    ranges.emplace_back(first, std::min(size, first + chunk));
  }
  std::vector<std::future<std::vector<std::int64_t>>> futures;
  futures.reserve(ranges.size());
  for (const auto& [first, last] : ranges) {
    futures.push_back(std::async(std::launch::async, run_rows, first, last));
  }

  TransitionMatrix matrix;
  matrix.states = std::move(states);
  matrix.energies = std::move(energies);
  matrix.probs = DenseMatrix(size, size, 0.0);
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const std::vector<std::int64_t> counts = futures[k].get();
    for (std::size_t row = ranges[k].first; row < ranges[k].second; ++row) {
      const std::int64_t* row_counts = counts.data() + size * (row - ranges[k].first);
      for (std::size_t c = 0; c < size; ++c) {
        matrix.probs.at(row, c) = static_cast<double>(row_counts[c]) /
                                  static_cast<double>(trials_per_row);
      }
    }
  }
  check_row_stochastic(matrix.probs, kEmpiricalRowSumTol);
  return matrix;
}

namespace {

std::vector<State> materialize(const StateSpace& space) {
  return std::vector<State>(space.begin(), space.end());
}

}  // namespace

TransitionMatrix empirical_gibbs_matrix(const FactorGraph& graph,
                                        const EmpiricalOptions& options) {
  const StateSpace space(graph.num_variables(), graph.domain_size(), options.state_cap);
  const RowStepFactory factory = [&graph, space]() -> RowStepFn {
    return [&graph, space, sampler = GibbsSampler(graph)](std::size_t row,
                                                          Rng& rng) mutable {
      State x = space.state_at(row);
      sampler.step(x, rng);
      return static_cast<std::size_t>(space.index_of(x));
    };
  };
  return empirical_matrix(materialize(space), {}, factory, options.trials_per_row,
                          options.seed);
}

TransitionMatrix empirical_local_minibatch_matrix(const FactorGraph& graph,
                                                  std::int64_t batch_size,
                                                  const EmpiricalOptions& options) {
  const StateSpace space(graph.num_variables(), graph.domain_size(), options.state_cap);
  const RowStepFactory factory = [&graph, space, batch_size]() -> RowStepFn {
    return [&graph, space,
            sampler = LocalMinibatchSampler(graph, batch_size)](std::size_t row,
                                                                Rng& rng) mutable {
      State x = space.state_at(row);
      sampler.step(x, rng);
      return static_cast<std::size_t>(space.index_of(x));
    };
  };
  return empirical_matrix(materialize(space), {}, factory, options.trials_per_row,
                          options.seed);
}

TransitionMatrix empirical_mgpmh_matrix(const FactorGraph& graph, double lambda,
                                        const EmpiricalOptions& options) {
  const StateSpace space(graph.num_variables(), graph.domain_size(), options.state_cap);
  const RowStepFactory factory = [&graph, space, lambda]() -> RowStepFn {
    return [&graph, space, sampler = MgpmhSampler(graph, lambda)](std::size_t row,
                                                                  Rng& rng) mutable {
      State x = space.state_at(row);
      sampler.step(x, rng);
      return static_cast<std::size_t>(space.index_of(x));
    };
  };
  return empirical_matrix(materialize(space), {}, factory, options.trials_per_row,
                          options.seed);
}

TransitionMatrix empirical_min_gibbs_matrix(const FactorGraph& graph,
                                            const FiniteSupportEstimator& estimator,
                                            const EmpiricalOptions& options) {
  const StateSpace base(graph.num_variables(), graph.domain_size(), options.state_cap);
  const AugmentedSpace space = make_augmented_space(graph, estimator, options.state_cap);
  const RowStepFactory factory = [&graph, &estimator, base, &space]() -> RowStepFn {
    return [&graph, base, &space,
            sampler = MinGibbsSampler(graph, estimator)](std::size_t row,
                                                         Rng& rng) mutable {
      AugmentedState s{space.states[row], space.energies[row]};
      sampler.step(s, rng);
      return space.row_of(base.index_of(s.x), s.cached_energy);
    };
  };
  return empirical_matrix(space.states, space.energies, factory,
                          options.trials_per_row, options.seed);
}

TransitionMatrix empirical_double_min_matrix(const FactorGraph& graph, double lambda,
                                             const FiniteSupportEstimator& estimator,
                                             const EmpiricalOptions& options) {
  const StateSpace base(graph.num_variables(), graph.domain_size(), options.state_cap);
  const AugmentedSpace space = make_augmented_space(graph, estimator, options.state_cap);
  const RowStepFactory factory = [&graph, &estimator, base, &space,
                                  lambda]() -> RowStepFn {
    return [&graph, base, &space,
            sampler = DoubleMinSampler(graph, lambda, estimator)](std::size_t row,
                                                                  Rng& rng) mutable {
      AugmentedState s{space.states[row], space.energies[row]};
      sampler.step(s, rng);
      return space.row_of(base.index_of(s.x), s.cached_energy);
    };
  };
  return empirical_matrix(space.states, space.energies, factory,
                          options.trials_per_row, options.seed);
}

ReversibilityCheck check_reversibility(const TransitionMatrix& matrix,
                                       const std::vector<double>& pi, double tol) {
  if (pi.size() != matrix.size()) {
    throw std::invalid_argument("reversibility check: pi length mismatch");
  }
  double max_residual = 0.0;
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    for (std::size_t c = r + 1; c < matrix.size(); ++c) {
      const double residual =
          std::abs(pi[r] * matrix.probs.at(r, c) - pi[c] * matrix.probs.at(c, r));
      max_residual = std::max(max_residual, residual);
    }
  }
  return ReversibilityCheck{max_residual, max_residual <= tol};
}

std::vector<double> symmetric_eigenvalues_jacobi(DenseMatrix matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("jacobi: matrix must be square");
  }
  const std::size_t n = matrix.rows();
  if (n == 0) return {};

  double frobenius = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      frobenius += matrix.at(r, c) * matrix.at(r, c);
    }
  }
  frobenius = std::sqrt(frobenius);
  const double stop = 1e-13 * std::max(1.0, frobenius);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        off += 2.0 * matrix.at(p, q) * matrix.at(p, q);
      }
    }
    if (std::sqrt(off) <= stop) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = matrix.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (matrix.at(q, q) - matrix.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        matrix.at(p, p) -= t * apq;
        matrix.at(q, q) += t * apq;
        matrix.at(p, q) = 0.0;
        matrix.at(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = matrix.at(r, p);
          const double arq = matrix.at(r, q);
          matrix.at(r, p) = c * arp - s * arq;
          matrix.at(p, r) = matrix.at(r, p);
          matrix.at(r, q) = s * arp + c * arq;
          matrix.at(q, r) = matrix.at(r, q);
        }
      }
    }
  }

  std::vector<double> eigenvalues(n);
  for (std::size_t r = 0; r < n; ++r) eigenvalues[r] = matrix.at(r, r);
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  return eigenvalues;
}

SpectrumReport spectral_gap(const TransitionMatrix& matrix,
                            const std::vector<double>& pi, double reversibility_tol,
                            double lambda1_tol) {
  const ReversibilityCheck reversibility =
      check_reversibility(matrix, pi, reversibility_tol);
  if (!reversibility.within_tol) {
    throw NotReversibleError("kernel is not reversible w.r.t. pi: residual " +
                             format_value(reversibility.max_residual) + " > tol " +
                             format_value(reversibility_tol));
  }
  const std::size_t n = matrix.size();
  std::vector<double> sqrt_pi(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!(pi[r] > 0.0)) {
      throw std::invalid_argument("spectral gap: pi must be strictly positive");
    }
    sqrt_pi[r] = std::sqrt(pi[r]);
  }

  // Similar symmetric matrix diag(pi)^{1/2} T diag(pi)^{-1/2}, averaged
  // with its transpose to absorb floating-point (or Monte Carlo)
  // asymmetry.
  DenseMatrix sym(n, n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      const double a = sqrt_pi[r] * matrix.probs.at(r, c) / sqrt_pi[c];
      const double b = sqrt_pi[c] * matrix.probs.at(c, r) / sqrt_pi[r];
      sym.at(r, c) = 0.5 * (a + b);
      sym.at(c, r) = sym.at(r, c);
    }
  }

  SpectrumReport report;
  report.eigenvalues = symmetric_eigenvalues_jacobi(std::move(sym));
  const double lambda1 = report.eigenvalues.front();
  if (std::abs(lambda1 - 1.0) > lambda1_tol) {
    throw std::runtime_error("spectral gap: leading eigenvalue " +
                             format_value(lambda1) + " deviates from 1 beyond tol");
  }
  for (double e : report.eigenvalues) {
    if (std::abs(e) > 1.0 + lambda1_tol) {
      throw std::runtime_error("spectral gap: eigenvalue magnitude exceeds 1");
    }
  }
  report.spectral_gap =
      report.eigenvalues.size() > 1 ? report.eigenvalues[0] - report.eigenvalues[1] : 0.0;
  return report;
}

double mixing_time_bound(double gamma, double pi_min, double eps) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("mixing time bound: gamma must be > 0");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("mixing time bound: eps must be > 0");
  }
  if (!(pi_min > 0.0) || !(pi_min <= 1.0)) {
    throw std::invalid_argument("mixing time bound: pi_min must be in (0, 1]");
  }
  return std::log(1.0 / (eps * pi_min)) / gamma;
}

namespace {

// First-order allowance for the gap of an empirically estimated kernel:
// 3x the Frobenius-norm bound on the symmetrized perturbation, with
// per-entry binomial variances.
double empirical_gap_slack(const TransitionMatrix& matrix, const std::vector<double>& pi,
                           std::int64_t trials) {
  double sum = 0.0;
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    for (std::size_t c = 0; c < matrix.size(); ++c) {
      const double p = matrix.probs.at(r, c);
      sum += (pi[r] / pi[c]) * p * (1.0 - p) / static_cast<double>(trials);
    }
  }
  return 3.0 * std::sqrt(sum);
}

double empirical_reversibility_tol(const TransitionMatrix& matrix,
                                   const std::vector<double>& pi, std::int64_t trials) {
  double tol = 1e-12;
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    for (std::size_t c = r + 1; c < matrix.size(); ++c) {
      const double vrc = matrix.probs.at(r, c) * (1.0 - matrix.probs.at(r, c)) /
                         static_cast<double>(trials);
      const double vcr = matrix.probs.at(c, r) * (1.0 - matrix.probs.at(c, r)) /
                         static_cast<double>(trials);
      const double sd = std::sqrt(pi[r] * pi[r] * vrc + pi[c] * pi[c] * vcr);
      tol = std::max(tol, kEmpiricalReversibilityZ * (sd + 1.0 / trials));
    }
  }
  return tol;
}

}  // namespace

std::vector<GapBoundCheck> verify_gap_bounds(const FactorGraph& graph,
                                             const GapBoundConfig& config) {
  std::vector<GapBoundCheck> checks;
  const std::vector<double> pi = brute_force_pi(graph, config.state_cap);
  const TransitionMatrix gibbs = exact_gibbs_matrix(graph, config.state_cap);
  const double gamma_gibbs = spectral_gap(gibbs, pi).spectral_gap;
  const double local_max = graph.stats().local_max_energy;
  constexpr double kExactSlack = 1e-9;

  if (config.min_gibbs) {
    for (double delta : config.deltas) {
      const TwoPointEstimator estimator(delta);
      const AugmentedSpace space =
          make_augmented_space(graph, estimator, config.state_cap);
      const std::vector<double> pi_bar = augmented_stationary(space);
      const TransitionMatrix kernel =
          exact_min_gibbs_matrix(graph, estimator, config.state_cap);
      const double gamma_bar = spectral_gap(kernel, pi_bar).spectral_gap;

      const double bound6 = std::exp(-6.0 * delta);
      checks.push_back({"min-gibbs[delta=" + format_value(delta) + "]", gamma_bar,
                        gamma_gibbs, bound6, kExactSlack,
                        gamma_bar >= bound6 * gamma_gibbs - kExactSlack, true});
      // The sharper exp(-5 delta) factor is recorded but not required.
      const double bound5 = std::exp(-5.0 * delta);
      checks.push_back({"min-gibbs-5delta[delta=" + format_value(delta) + "]",
                        gamma_bar, gamma_gibbs, bound5, kExactSlack,
                        gamma_bar >= bound5 * gamma_gibbs - kExactSlack, false});
    }
  }

  if (config.mgpmh || config.double_min) {
    std::uint64_t stream = 0;
    for (double multiplier : config.lambda_multipliers) {
      const double lambda = multiplier * local_max * local_max;
      if (lambda < local_max) {
        throw std::invalid_argument(
            "verify_gap_bounds: expected batch size below the local maximum energy "
            "violates the Metropolized gap-bound precondition");
      }

      EmpiricalOptions options{config.trials_per_row,
                               derive_stream_seed(config.seed, ++stream),
                               config.state_cap};
      const TransitionMatrix mgpmh = empirical_mgpmh_matrix(graph, lambda, options);
      const double mgpmh_slack = empirical_gap_slack(mgpmh, pi, config.trials_per_row);
      const double gamma_mgpmh =
          spectral_gap(mgpmh, pi,
                       empirical_reversibility_tol(mgpmh, pi, config.trials_per_row),
                       mgpmh_slack + 1e-6)
              .spectral_gap;

      if (config.mgpmh) {
        const double bound = std::exp(-local_max * local_max / lambda);
        checks.push_back({"mgpmh[lambda=" + format_value(lambda) + "]", gamma_mgpmh,
                          gamma_gibbs, bound, mgpmh_slack,
                          gamma_mgpmh >= bound * gamma_gibbs - mgpmh_slack, true});
      }

      if (config.double_min) {
        for (double delta : config.deltas) {
          const TwoPointEstimator estimator(delta);
          const AugmentedSpace space =
              make_augmented_space(graph, estimator, config.state_cap);
          const std::vector<double> pi_bar = augmented_stationary(space);
          EmpiricalOptions inner{config.trials_per_row,
                                 derive_stream_seed(config.seed, ++stream),
                                 config.state_cap};
          const TransitionMatrix kernel =
              empirical_double_min_matrix(graph, lambda, estimator, inner);
          const double kernel_slack =
              empirical_gap_slack(kernel, pi_bar, config.trials_per_row);
          const double gamma_bar =
              spectral_gap(
                  kernel, pi_bar,
                  empirical_reversibility_tol(kernel, pi_bar, config.trials_per_row),
                  kernel_slack + 1e-6)
                  .spectral_gap;

          const double bound = std::exp(-4.0 * delta);
          const double slack = kernel_slack + bound * mgpmh_slack;
          checks.push_back({"double-min[lambda=" + format_value(lambda) +
                                ";delta=" + format_value(delta) + "]",
                            gamma_bar, gamma_mgpmh, bound, slack,
                            gamma_bar >= bound * gamma_mgpmh - slack, true});
        }
      }
    }
  }
  return checks;
}

void write_gap_report_csv(std::ostream& out, const std::vector<GapBoundCheck>& checks) {
  out << "chain,gamma_bar,gamma,bound_factor,satisfied\n";
  for (const GapBoundCheck& check : checks) {
    out << check.chain << ',' << format_value(check.gamma_bar) << ','
        << format_value(check.gamma) << ',' << format_value(check.bound_factor) << ','
        << (check.satisfied ? 1 : 0) << '\n';
  }
}

}  // namespace minigibbs
