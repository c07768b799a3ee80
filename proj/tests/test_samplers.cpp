#include <doctest.h>

#include <cmath>
#include <map>

#include "minigibbs/chain_analysis.hpp"
#include "minigibbs/experiment.hpp"
#include "minigibbs/model_zoo.hpp"
#include "minigibbs/samplers.hpp"
#include "test_support.hpp"

using namespace minigibbs;
namespace ts = minigibbs::testing;

TEST_CASE("categorical sampling from energies") {
  Rng rng(404);
  SUBCASE("single outcome") {
    const std::vector<double> one{3.5};
    CHECK(categorical_from_energies(one, rng) == 0);
  }
  SUBCASE("equal energies are uniform (chi-square at alpha=0.001)") {
    const std::vector<double> energies{2.0, 2.0, 2.0, 2.0};
    std::vector<std::int64_t> hits(4, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      ++hits[static_cast<std::size_t>(categorical_from_energies(energies, rng))];
    }
    const double stat =
        ts::chi_square_statistic(hits, {0.25, 0.25, 0.25, 0.25}, draws);
    CHECK(stat < ts::chi_square_crit_999(3));
  }
  SUBCASE("energies (0, ln 3) select the second with probability 3/4") {
    const std::vector<double> energies{0.0, std::log(3.0)};
    const int draws = 100000;
    int second = 0;
    for (int k = 0; k < draws; ++k) {
      if (categorical_from_energies(energies, rng) == 1) ++second;
    }
    const double sd = std::sqrt(0.75 * 0.25 / draws);
    CHECK(std::abs(static_cast<double>(second) / draws - 0.75) < 3.0 * sd);
  }
  SUBCASE("huge energies are handled by stabilization") {
    const std::vector<double> energies{1000.0, 1000.0 + std::log(3.0)};
    int second = 0;
    for (int k = 0; k < 20000; ++k) {
      if (categorical_from_energies(energies, rng) == 1) ++second;
    }
    CHECK(std::abs(second / 20000.0 - 0.75) < 0.015);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(categorical_from_energies(std::vector<double>{}, rng),
                    std::invalid_argument);
    const std::vector<double> bad{0.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(categorical_from_energies(bad, rng), std::invalid_argument);
  }
}

namespace {

// Empirical one-step law from a fixed start state.
template <class Sampler>
std::vector<double> one_step_law(const FactorGraph& g, Sampler& sampler,
                                 const State& start, int trials, Rng& rng) {
  const StateSpace space(g.num_variables(), g.domain_size());
  std::vector<double> freq(static_cast<std::size_t>(space.size()), 0.0);
  for (int k = 0; k < trials; ++k) {
    State x = start;
    sampler.step(x, rng);
    freq[static_cast<std::size_t>(space.index_of(x))] += 1.0;
  }
  for (double& f : freq) f /= trials;
  return freq;
}

}  // namespace

TEST_CASE("gibbs step") {
  SUBCASE("zero-energy graph resamples uniformly") {
    const FactorGraph g(1, 4, {});
    GibbsSampler sampler(g);
    Rng rng(2);
    std::vector<std::int64_t> hits(4, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      State x({0});
      sampler.step(x, rng);
      ++hits[static_cast<std::size_t>(x[0])];
    }
    CHECK(ts::chi_square_statistic(hits, {0.25, 0.25, 0.25, 0.25}, draws) <
          ts::chi_square_crit_999(3));
  }
  SUBCASE("single-valued domain never moves") {
    const FactorGraph g(3, 1, {});
    GibbsSampler sampler(g);
    Rng rng(3);
    State x({0, 0, 0});
    const StepRecord record = sampler.step(x, rng);
    CHECK(x == State({0, 0, 0}));
    CHECK(record.accepted);
  }
  SUBCASE("one-step law matches the analytic kernel row") {
    const FactorGraph g = ts::two_var_chainlet(2.0 * std::exp(-1.5));
    const TransitionMatrix exact = exact_gibbs_matrix(g);
    const StateSpace space(2, 2);
    GibbsSampler sampler(g);
    Rng rng(7);
    const int trials = 200000;
    for (std::uint64_t row = 0; row < space.size(); ++row) {
      const auto law = one_step_law(g, sampler, space.state_at(row), trials, rng);
      for (std::uint64_t col = 0; col < space.size(); ++col) {
        const double p = exact.probs.at(row, col);
        const double band = 4.0 * std::sqrt(p * (1.0 - p) / trials) + 1e-9;
        CHECK(std::abs(law[col] - p) <= band);
      }
    }
  }
  SUBCASE("cost is D times the neighborhood size") {
    const FactorGraph g = make_ising({2, 1.0, 1.5, 2});
    GibbsSampler sampler(g);
    Rng rng(5);
    State x(4, 0);
    for (int k = 0; k < 20; ++k) {
      const StepRecord record = sampler.step(x, rng);
      CHECK(record.factor_evals ==
            2 * static_cast<std::int64_t>(
                    g.adjacent_factors(record.variable).size()));
    }
  }
}

TEST_CASE("variable choice is uniform") {
  const FactorGraph g = make_ising({2, 1.0, 1.5, 2});  // n = 4
  GibbsSampler sampler(g);
  Rng rng(11);
  State x(4, 0);
  std::vector<std::int64_t> hits(4, 0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    ++hits[static_cast<std::size_t>(sampler.step(x, rng).variable)];
  }
  CHECK(ts::chi_square_statistic(hits, {0.25, 0.25, 0.25, 0.25}, draws) <
        ts::chi_square_crit_999(3));
}

TEST_CASE("caching sampler semantics") {
  const FactorGraph g = ts::two_var_chainlet(0.9);
  const TwoPointEstimator estimator(0.3);
  MinGibbsSampler sampler(g, estimator);
  Rng rng(13);

  SUBCASE("initial cache is drawn at the initial state") {
    const AugmentedState s = sampler.make_initial(State({0, 0}), rng);
    CHECK(std::abs(s.cached_energy - g.energy(s.x)) == doctest::Approx(0.3));
  }
  SUBCASE("self-transition keeps the cached estimate") {
    AugmentedState s = sampler.make_initial(State({0, 0}), rng);
    for (int k = 0; k < 2000; ++k) {
      const double before = s.cached_energy;
      const std::int32_t old_value = s.x[0] * 2 + s.x[1];
      const StepRecord record = sampler.step(s, rng);
      const std::int32_t new_value = s.x[0] * 2 + s.x[1];
      if (new_value == old_value) {
        CHECK(s.cached_energy == before);
      } else {
        // fresh draw for the adopted state
        CHECK(std::abs(s.cached_energy - g.energy(s.x)) == doctest::Approx(0.3));
      }
      CHECK(record.accepted);
    }
  }
  SUBCASE("single-valued domain leaves state and cache unchanged") {
    const FactorGraph h(2, 1, {});
    const TwoPointEstimator exact(0.0);
    MinGibbsSampler trivial(h, exact);
    AugmentedState s = trivial.make_initial(State({0, 0}), rng);
    const double cache = s.cached_energy;
    trivial.step(s, rng);
    CHECK(s.x == State({0, 0}));
    CHECK(s.cached_energy == cache);
  }
}

TEST_CASE("caching sampler with the bias-adjusted estimator is unbiased in x") {
  const FactorGraph g = ts::two_var_chainlet(0.9);
  const PoissonEnergyEstimator estimator(g, 20.0);
  MinGibbsSampler sampler(g, estimator);
  Rng rng(271828);
  AugmentedState s = sampler.make_initial(State({0, 0}), rng);
  const StateSpace space(2, 2);
  std::vector<double> occupancy(4, 0.0);
  const std::int64_t steps = 300000;
  for (std::int64_t t = 0; t < steps; ++t) {
    sampler.step(s, rng);
    occupancy[static_cast<std::size_t>(space.index_of(s.x))] += 1.0;
  }
  for (double& o : occupancy) o /= static_cast<double>(steps);
  CHECK(ts::total_variation(occupancy, brute_force_pi(g)) < 0.02);
}

TEST_CASE("local minibatch step") {
  SUBCASE("invalid batch size") {
    const FactorGraph g = ts::two_var_chainlet();
    CHECK_THROWS_AS(LocalMinibatchSampler(g, 0), std::invalid_argument);
  }
  SUBCASE("zero-energy graph resamples uniformly for any batch size") {
    const FactorGraph g(1, 4, {});
    LocalMinibatchSampler sampler(g, 3);
    Rng rng(17);
    std::vector<std::int64_t> hits(4, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      State x({0});
      sampler.step(x, rng);
      ++hits[static_cast<std::size_t>(x[0])];
    }
    CHECK(ts::chi_square_statistic(hits, {0.25, 0.25, 0.25, 0.25}, draws) <
          ts::chi_square_crit_999(3));
  }
  SUBCASE("batch covering the neighborhood reproduces the Gibbs law") {
    const FactorGraph g = ts::two_var_two_factors(1.0, 0.4);
    const TransitionMatrix exact = exact_gibbs_matrix(g);
    LocalMinibatchSampler sampler(g, 99);  // clamped to |A[i]| = 2
    const StateSpace space(2, 2);
    Rng rng(19);
    const int trials = 200000;
    for (std::uint64_t row = 0; row < space.size(); ++row) {
      const auto law = one_step_law(g, sampler, space.state_at(row), trials, rng);
      for (std::uint64_t col = 0; col < space.size(); ++col) {
        const double p = exact.probs.at(row, col);
        const double band = 4.0 * std::sqrt(p * (1.0 - p) / trials) + 1e-9;
        CHECK(std::abs(law[col] - p) <= band);
      }
    }
  }
  SUBCASE("one-factor batches match the exhaustive minibatch average") {
    const FactorGraph g = ts::two_var_two_factors(1.0, 0.4);
    const StateSpace space(2, 2);
    const std::int64_t batch_size = 1;

    // Oracle: average the per-minibatch softmax over every subset.
    DenseMatrix oracle(4, 4, 0.0);
    for (std::uint64_t row = 0; row < 4; ++row) {
      State x = space.state_at(row);
      for (std::int32_t i = 0; i < 2; ++i) {
        const auto& adjacent = g.adjacent_factors(i);
        const std::int32_t saved = x[static_cast<std::size_t>(i)];
        ts::for_each_subset(adjacent.size(), static_cast<std::size_t>(batch_size),
                            [&](const std::vector<std::size_t>& pick) {
          std::vector<double> energies(2);
          for (std::int32_t u = 0; u < 2; ++u) {
            x.set(static_cast<std::size_t>(i), u);
            double sum = 0.0;
            for (std::size_t k : pick) {
              sum += g.factors()[static_cast<std::size_t>(adjacent[k])].value_at(x);
            }
            energies[static_cast<std::size_t>(u)] =
                static_cast<double>(adjacent.size()) /
                static_cast<double>(batch_size) * sum;
          }
          const double total = std::exp(energies[0]) + std::exp(energies[1]);
          for (std::int32_t u = 0; u < 2; ++u) {
            x.set(static_cast<std::size_t>(i), u);
            const std::uint64_t dest = space.index_of(x);
            // two variables, two subsets of size 1
            oracle.at(row, dest) +=
                std::exp(energies[static_cast<std::size_t>(u)]) / total / (2.0 * 2.0);
          }
        });
        x.set(static_cast<std::size_t>(i), saved);
      }
    }

    LocalMinibatchSampler sampler(g, batch_size);
    Rng rng(23);
    const int trials = 1000000;
    for (std::uint64_t row = 0; row < 4; ++row) {
      const auto law = one_step_law(g, sampler, space.state_at(row), trials, rng);
      for (std::uint64_t col = 0; col < 4; ++col) {
        CHECK(std::abs(law[col] - oracle.at(row, col)) < 0.005);
      }
    }
  }
  SUBCASE("cost is D times the effective batch") {
    const FactorGraph g = ts::two_var_two_factors();
    LocalMinibatchSampler sampler(g, 1);
    Rng rng(29);
    State x({0, 0});
    const StepRecord record = sampler.step(x, rng);
    CHECK(record.minibatch_size == 1);
    CHECK(record.factor_evals == 2);
  }
}

TEST_CASE("metropolized minibatch step") {
  SUBCASE("constant factors always accept and resample uniformly") {
    const FactorGraph g = ts::constant_graph(2, 3, {0.7, 0.3});
    MgpmhSampler sampler(g, 2.0);
    Rng rng(31);
    std::vector<std::int64_t> hits(3, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      State x({0, 1});
      const StepRecord record = sampler.step(x, rng);
      CHECK(record.accepted);
      ++hits[static_cast<std::size_t>(x[static_cast<std::size_t>(record.variable)])];
    }
    CHECK(ts::chi_square_statistic(hits, {1.0 / 3, 1.0 / 3, 1.0 / 3}, draws) <
          ts::chi_square_crit_999(2 + 1));
  }
  SUBCASE("rejected proposals leave the state unchanged, self-proposals always pass") {
    const FactorGraph g = ts::two_var_chainlet(1.2);
    MgpmhSampler sampler(g, 2.0);
    Rng rng(41);
    State x({0, 0});
    int rejections = 0;
    for (int k = 0; k < 20000; ++k) {
      const State before = x;
      const StepRecord record = sampler.step(x, rng);
      if (!record.accepted) {
        ++rejections;
        CHECK(x == before);
      }
      if (record.proposed_value == before[static_cast<std::size_t>(record.variable)]) {
        CHECK(record.accepted);  // self-proposal ratio is exactly 1
      }
    }
    CHECK(rejections > 0);
  }
  SUBCASE("mean total trial count matches the neighborhood rates") {
    const FactorGraph g = ts::path3(1.3, 0.7);
    const double local_max = g.stats().local_max_energy;  // 2.0 at the middle site
    const double lambda = local_max * local_max;
    MgpmhSampler sampler(g, lambda);
    Rng rng(43);
    State x({0, 0, 0});
    const int draws = 100000;
    std::vector<double> batch_sizes;
    batch_sizes.reserve(draws);
    for (int k = 0; k < draws; ++k) {
      batch_sizes.push_back(static_cast<double>(sampler.step(x, rng).minibatch_size));
    }
    // oracle: average over i of sum_{A[i]} lambda M / L
    double oracle = 0.0;
    for (std::int32_t i = 0; i < 3; ++i) {
      for (std::int32_t f : g.adjacent_factors(i)) {
        oracle += lambda * g.factors()[static_cast<std::size_t>(f)].max_energy() /
                  local_max / 3.0;
      }
    }
    const double sd =
        std::sqrt(ts::sample_variance(batch_sizes) / static_cast<double>(draws));
    CHECK(std::abs(ts::mean(batch_sizes) - oracle) <= 3.0 * sd);
    CHECK(ts::mean(batch_sizes) <= lambda + 3.0 * sd);
  }
}

TEST_CASE("doubly minibatched step") {
  SUBCASE("exact estimates on a constant graph always accept") {
    const FactorGraph g = ts::constant_graph(2, 2, {0.5, 0.9});
    const TwoPointEstimator exact(0.0);
    DoubleMinSampler sampler(g, 2.0, exact);
    Rng rng(47);
    AugmentedState s = sampler.make_initial(State({0, 0}), rng);
    for (int k = 0; k < 5000; ++k) {
      CHECK(sampler.step(s, rng).accepted);
    }
  }
  SUBCASE("accepted self-proposals refresh the cache, rejected steps keep both") {
    const FactorGraph g = ts::two_var_chainlet(1.2);
    const TwoPointEstimator second(0.3);
    DoubleMinSampler sampler(g, 2.0, second);
    Rng rng(53);
    AugmentedState s = sampler.make_initial(State({0, 0}), rng);
    int cache_changes_on_self = 0;
    for (int k = 0; k < 20000; ++k) {
      const AugmentedState before = s;
      const StepRecord record = sampler.step(s, rng);
      if (record.accepted) {
        // cache always matches a fresh two-point draw at the new state
        CHECK(std::abs(s.cached_energy - g.energy(s.x)) == doctest::Approx(0.3));
        if (s.x == before.x && s.cached_energy != before.cached_energy) {
          ++cache_changes_on_self;
        }
      } else {
        CHECK(s.x == before.x);
        CHECK(s.cached_energy == before.cached_energy);
      }
    }
    CHECK(cache_changes_on_self > 0);
  }
}

TEST_CASE("run_chain") {
  const FactorGraph g = ts::two_var_chainlet(0.9);

  SUBCASE("zero iterations never invokes the observer") {
    GibbsSampler sampler(g);
    Rng rng(1);
    int calls = 0;
    const State out = run_chain(sampler, State({0, 1}), 0, rng,
                                [&](std::int64_t, const State&, const StepRecord&) {
                                  ++calls;
                                });
    CHECK(calls == 0);
    CHECK(out == State({0, 1}));
  }
  SUBCASE("negative iterations rejected") {
    GibbsSampler sampler(g);
    Rng rng(1);
    CHECK_THROWS_AS(run_chain(sampler, State({0, 0}), -1, rng,
                              [](std::int64_t, const State&, const StepRecord&) {}),
                    std::invalid_argument);
  }
  SUBCASE("fixed seed reproduces the trajectory bit for bit") {
    std::vector<State> first, second;
    for (auto* sink : {&first, &second}) {
      GibbsSampler sampler(g);
      Rng rng(77);
      run_chain(sampler, State({0, 0}), 500, rng,
                [&](std::int64_t, const State& s, const StepRecord&) {
                  sink->push_back(s);
                });
    }
    CHECK(first == second);
  }
  SUBCASE("observer failures become a distinct error") {
    GibbsSampler sampler(g);
    Rng rng(1);
    CHECK_THROWS_AS(
        run_chain(sampler, State({0, 0}), 10, rng,
                  [](std::int64_t t, const State&, const StepRecord&) {
                    if (t == 3) throw std::runtime_error("sink failed");
                  }),
        ObserverError);
  }
}

TEST_CASE("long gibbs run mixes the dense grid" * doctest::timeout(120)) {
  const FactorGraph g = make_ising({20, 1.0, 1.5, 2});
  GibbsSampler sampler(g);
  MarginalTracker tracker(g.num_variables(), g.domain_size());
  Rng rng(20240811);
  State x(static_cast<std::size_t>(g.num_variables()), 0);
  double first_error = 0.0;
  for (std::int64_t t = 1; t <= 1000000; ++t) {
    sampler.step(x, rng);
    tracker.observe(x);
    if (t == 1) first_error = tracker.marginal_error();
  }
  CHECK(first_error == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(tracker.marginal_error() < 0.1 * first_error);
}
