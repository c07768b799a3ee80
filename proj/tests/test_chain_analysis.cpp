#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <sstream>

#include "minigibbs/chain_analysis.hpp"
#include "minigibbs/model_zoo.hpp"
#include "minigibbs/samplers.hpp"
#include "test_support.hpp"

using namespace minigibbs;
namespace ts = minigibbs::testing;

namespace {

// Independent spectral oracle: dense self-adjoint eigendecomposition.
std::vector<double> eigen_oracle(const TransitionMatrix& matrix,
                                 const std::vector<double>& pi) {
  const std::size_t n = matrix.size();
  Eigen::MatrixXd sym(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double a = std::sqrt(pi[r] / pi[c]) * matrix.probs.at(r, c);
      const double b = std::sqrt(pi[c] / pi[r]) * matrix.probs.at(c, r);
      sym(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = 0.5 * (a + b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  std::vector<double> eigenvalues(solver.eigenvalues().data(),
                                  solver.eigenvalues().data() + n);
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  return eigenvalues;
}

std::vector<double> row_distribution(const TransitionMatrix& matrix, std::size_t row) {
  std::vector<double> out(matrix.size());
  for (std::size_t c = 0; c < matrix.size(); ++c) out[c] = matrix.probs.at(row, c);
  return out;
}

// Stationary vector by power iteration on T^t.
std::vector<double> power_stationary(const TransitionMatrix& matrix, int iterations) {
  const std::size_t n = matrix.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  for (int it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        next[c] += pi[r] * matrix.probs.at(r, c);
      }
    }
    std::swap(pi, next);
  }
  return pi;
}

}  // namespace

TEST_CASE("brute-force stationary distribution") {
  SUBCASE("zero-energy graph is uniform") {
    const FactorGraph g(2, 3, {});
    const auto pi = brute_force_pi(g);
    for (double p : pi) CHECK(p == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  }
  SUBCASE("single binary factor (0, ln 3)") {
    const FactorGraph g(1, 2, {Factor({0}, {0.0, std::log(3.0)}, 2)});
    const auto pi = brute_force_pi(g);
    CHECK(pi[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("matches an independent energy re-summation on a 2x2 Ising grid") {
    const FactorGraph g = make_ising({2, 1.0, 1.5, 2});
    const auto pi = brute_force_pi(g);
    const StateSpace space(4, 2);
    std::vector<double> expected;
    double total = 0.0;
    for (const State& x : space) {
      expected.push_back(std::exp(ts::ising_energy_reference(2, 1.0, 1.5, x)));
      total += expected.back();
    }
    for (std::size_t k = 0; k < expected.size(); ++k) {
      CHECK(pi[k] == doctest::Approx(expected[k] / total).epsilon(1e-10));
    }
    CHECK(std::abs(std::accumulate(pi.begin(), pi.end(), 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("exact gibbs kernel") {
  SUBCASE("single variable: every row is the stationary distribution") {
    const FactorGraph g(1, 3, {Factor({0}, {0.0, 0.5, 1.0}, 3)});
    const auto pi = brute_force_pi(g);
    const TransitionMatrix t = exact_gibbs_matrix(g);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(t.probs.at(r, c) == doctest::Approx(pi[c]).epsilon(1e-12));
      }
    }
  }
  SUBCASE("zero-energy graph: uniform over single-variable updates") {
    const FactorGraph g(2, 2, {});
    const TransitionMatrix t = exact_gibbs_matrix(g);
    // self: n * (1/n)(1/D) = 1/2; each Hamming-1 neighbor: 1/(nD) = 1/4
    const StateSpace space(2, 2);
    for (std::uint64_t r = 0; r < 4; ++r) {
      for (std::uint64_t c = 0; c < 4; ++c) {
        int hamming = 0;
        for (std::size_t i = 0; i < 2; ++i) {
          if (space.state_at(r)[i] != space.state_at(c)[i]) ++hamming;
        }
        const double expected = hamming == 0 ? 0.5 : (hamming == 1 ? 0.25 : 0.0);
        CHECK(t.probs.at(r, c) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
  SUBCASE("empirical rows agree with the analytic kernel") {
    const FactorGraph g = ts::two_var_chainlet(2.0 * std::exp(-1.5));
    const TransitionMatrix exact = exact_gibbs_matrix(g);
    const TransitionMatrix sampled =
        empirical_gibbs_matrix(g, {1000000, 99, kDefaultAugmentedCap});
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(sampled.probs.at(r, c) - exact.probs.at(r, c)) < 0.005);
      }
    }
  }
  SUBCASE("reversible with respect to the Gibbs measure") {
    const FactorGraph g = ts::path3(1.3, 0.7);
    const auto pi = brute_force_pi(g);
    const TransitionMatrix t = exact_gibbs_matrix(g);
    CHECK(check_reversibility(t, pi, 1e-9).max_residual < 1e-9);
  }
}

TEST_CASE("exact caching-chain kernel") {
  const FactorGraph g = ts::two_var_chainlet(0.9);

  SUBCASE("zero-width estimator reduces to the plain Gibbs kernel") {
    const TwoPointEstimator exact(0.0);
    const TransitionMatrix plain = exact_gibbs_matrix(g);
    const TransitionMatrix caching = exact_min_gibbs_matrix(g, exact);
    REQUIRE(caching.size() == plain.size());
    for (std::size_t r = 0; r < plain.size(); ++r) {
      for (std::size_t c = 0; c < plain.size(); ++c) {
        CHECK(caching.probs.at(r, c) ==
              doctest::Approx(plain.probs.at(r, c)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("stationary vector is mu_x(e) exp(e) and the chain is reversible") {
    const TwoPointEstimator estimator(0.3);
    const AugmentedSpace space = make_augmented_space(g, estimator);
    const auto pi_bar = augmented_stationary(space);
    const TransitionMatrix t = exact_min_gibbs_matrix(g, estimator);

    CHECK(check_reversibility(t, pi_bar, 1e-9).max_residual < 1e-9);

    // left eigenvector: pi_bar T = pi_bar
    for (std::size_t c = 0; c < t.size(); ++c) {
      double mass = 0.0;
      for (std::size_t r = 0; r < t.size(); ++r) {
        mass += pi_bar[r] * t.probs.at(r, c);
      }
      CHECK(mass == doctest::Approx(pi_bar[c]).epsilon(1e-9));
    }
  }
  SUBCASE("x-marginal of the augmented stationary law is the Gibbs measure") {
    const TwoPointEstimator estimator(0.3);
    const AugmentedSpace space = make_augmented_space(g, estimator);
    const auto pi_bar = augmented_stationary(space);
    const auto pi = brute_force_pi(g);
    for (std::size_t base = 0; base + 1 < space.offsets.size(); ++base) {
      double marginal = 0.0;
      for (std::size_t row = space.offsets[base]; row < space.offsets[base + 1];
           ++row) {
        marginal += pi_bar[row];
      }
      CHECK(marginal == doctest::Approx(pi[base]).epsilon(1e-12));
    }
  }
}

TEST_CASE("empirical kernel estimation") {
  SUBCASE("a deterministic chain yields the identity matrix") {
    const FactorGraph g(2, 1, {});
    const TransitionMatrix t = empirical_gibbs_matrix(g, {2000, 5, 64});
    REQUIRE(t.size() == 1);
    CHECK(t.probs.at(0, 0) == 1.0);
  }
  SUBCASE("metropolized chain's stationary vector matches the Gibbs measure") {
    const FactorGraph g = ts::two_var_chainlet(1.2);
    const double local = g.stats().local_max_energy;
    const TransitionMatrix t =
        empirical_mgpmh_matrix(g, local * local, {100000, 7, 64});
    const auto stationary = power_stationary(t, 400);
    const auto pi = brute_force_pi(g);
    CHECK(ts::total_variation(stationary, pi) < 0.01);
  }
  SUBCASE("rows are seed-deterministic") {
    const FactorGraph g = ts::two_var_chainlet(1.2);
    const TransitionMatrix a = empirical_gibbs_matrix(g, {20000, 123, 64});
    const TransitionMatrix b = empirical_gibbs_matrix(g, {20000, 123, 64});
    for (std::size_t r = 0; r < a.size(); ++r) {
      CHECK(row_distribution(a, r) == row_distribution(b, r));
    }
  }
}

TEST_CASE("spectral gap") {
  SUBCASE("identity kernel has zero gap") {
    TransitionMatrix t;
    t.states = {State({0}), State({1})};
    t.probs = DenseMatrix(2, 2, 0.0);
    t.probs.at(0, 0) = 1.0;
    t.probs.at(1, 1) = 1.0;
    const std::vector<double> pi{0.5, 0.5};
    CHECK(spectral_gap(t, pi).spectral_gap == doctest::Approx(0.0));
  }
  SUBCASE("two-state flat kernel has eigenvalues 1 and 0") {
    TransitionMatrix t;
    t.states = {State({0}), State({1})};
    t.probs = DenseMatrix(2, 2, 0.5);
    const std::vector<double> pi{0.5, 0.5};
    const SpectrumReport report = spectral_gap(t, pi);
    CHECK(report.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.spectral_gap == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("agrees with an independent dense eigendecomposition") {
    for (const FactorGraph& g :
         {ts::two_var_chainlet(2.0 * std::exp(-1.5)), ts::path3(1.3, 0.7)}) {
      const auto pi = brute_force_pi(g);
      const TransitionMatrix t = exact_gibbs_matrix(g);
      const SpectrumReport report = spectral_gap(t, pi);
      const auto oracle = eigen_oracle(t, pi);
      REQUIRE(report.eigenvalues.size() == oracle.size());
      for (std::size_t k = 0; k < oracle.size(); ++k) {
        CHECK(report.eigenvalues[k] == doctest::Approx(oracle[k]).epsilon(1e-8));
      }
      CHECK(report.spectral_gap ==
            doctest::Approx(oracle[0] - oracle[1]).epsilon(1e-8));
    }
  }
  SUBCASE("invariant under state reordering") {
    const FactorGraph g = ts::path3(1.3, 0.7);
    const auto pi = brute_force_pi(g);
    const TransitionMatrix t = exact_gibbs_matrix(g);
    const double gap = spectral_gap(t, pi).spectral_gap;

    // reverse the state order
    const std::size_t n = t.size();
    TransitionMatrix permuted;
    permuted.states = t.states;
    std::reverse(permuted.states.begin(), permuted.states.end());
    permuted.probs = DenseMatrix(n, n, 0.0);
    std::vector<double> permuted_pi(n);
    for (std::size_t r = 0; r < n; ++r) {
      permuted_pi[r] = pi[n - 1 - r];
      for (std::size_t c = 0; c < n; ++c) {
        permuted.probs.at(r, c) = t.probs.at(n - 1 - r, n - 1 - c);
      }
    }
    CHECK(spectral_gap(permuted, permuted_pi).spectral_gap ==
          doctest::Approx(gap).epsilon(1e-9));
  }
  SUBCASE("non-reversible kernels are rejected") {
    TransitionMatrix cycle;
    cycle.states = {State({0}), State({1}), State({2})};
    cycle.probs = DenseMatrix(3, 3, 0.0);
    cycle.probs.at(0, 1) = 1.0;
    cycle.probs.at(1, 2) = 1.0;
    cycle.probs.at(2, 0) = 1.0;
    const std::vector<double> pi{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(check_reversibility(cycle, pi, 1e-9).max_residual > 0.1);
    CHECK_THROWS_AS(spectral_gap(cycle, pi), NotReversibleError);
  }
  SUBCASE("symmetric kernel with uniform pi has zero residual") {
    TransitionMatrix t;
    t.states = {State({0}), State({1})};
    t.probs = DenseMatrix(2, 2, 0.0);
    t.probs.at(0, 0) = 0.7;
    t.probs.at(0, 1) = 0.3;
    t.probs.at(1, 0) = 0.3;
    t.probs.at(1, 1) = 0.7;
    const std::vector<double> pi{0.5, 0.5};
    CHECK(check_reversibility(t, pi, 1e-12).max_residual == 0.0);
  }
}

TEST_CASE("mixing time bound") {
  CHECK(mixing_time_bound(1.0, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(mixing_time_bound(0.5, 0.1, 0.01) ==
        doctest::Approx(2.0 * std::log(1000.0)).epsilon(1e-12));
  // decreasing in gamma, increasing as eps shrinks
  CHECK(mixing_time_bound(0.2, 0.1, 0.01) > mixing_time_bound(0.4, 0.1, 0.01));
  CHECK(mixing_time_bound(0.2, 0.1, 0.001) > mixing_time_bound(0.2, 0.1, 0.01));
  CHECK_THROWS_AS(mixing_time_bound(0.0, 0.1, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(mixing_time_bound(0.5, 0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(mixing_time_bound(0.5, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("gap bound verification") {
  SUBCASE("zero-width estimator degenerates to equal gaps") {
    const FactorGraph g = ts::two_var_chainlet(1.2);
    GapBoundConfig config;
    config.deltas = {0.0};
    config.mgpmh = false;
    config.double_min = false;
    const auto checks = verify_gap_bounds(g, config);
    REQUIRE(checks.size() == 2);
    CHECK(checks[0].gamma_bar == doctest::Approx(checks[0].gamma).epsilon(1e-9));
    CHECK(checks[0].satisfied);
  }
  SUBCASE("two-point width 0.2 satisfies the caching-chain bound") {
    const FactorGraph g = ts::two_var_chainlet(1.2);
    GapBoundConfig config;
    config.deltas = {0.2};
    config.mgpmh = false;
    config.double_min = false;
    const auto checks = verify_gap_bounds(g, config);
    CHECK(checks[0].bound_factor == doctest::Approx(std::exp(-1.2)));
    CHECK(checks[0].satisfied);
    CHECK(checks[0].gamma_bar >= std::exp(-1.2) * checks[0].gamma);
    CHECK_FALSE(checks[1].asserted);  // the sharper factor is informational
  }
  SUBCASE("batch sizes below the local maximum energy are rejected") {
    const FactorGraph g = ts::two_var_chainlet(0.4);  // L = 0.4, L^2 < L
    GapBoundConfig config;
    config.min_gibbs = false;
    config.double_min = false;
    config.lambda_multipliers = {1.0};
    CHECK_THROWS_AS(verify_gap_bounds(g, config), std::invalid_argument);
  }
  SUBCASE("csv layout") {
    std::vector<GapBoundCheck> checks{
        {"mgpmh[lambda=2]", 0.5, 0.6, 0.3678794411714423, 0.01, true, true}};
    std::ostringstream out;
    write_gap_report_csv(out, checks);
    CHECK(out.str() ==
          "chain,gamma_bar,gamma,bound_factor,satisfied\n"
          "mgpmh[lambda=2],0.5,0.6,0.3678794412,1\n");
  }
}
