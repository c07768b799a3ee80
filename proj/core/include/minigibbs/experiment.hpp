#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "minigibbs/factor_graph.hpp"
#include "minigibbs/model_zoo.hpp"

namespace minigibbs {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SamplerId { kGibbs, kMinGibbs, kLocalMinibatch, kMgpmh, kDoubleMin };

/// Identifiers as they appear on the command line:
/// gibbs, min-gibbs, local, mgpmh, double-min.
std::optional<SamplerId> parse_sampler_id(const std::string& name);
std::string sampler_name(SamplerId id);

/// Running per-variable value counts over the samples fed to it. The
/// marginal error is the mean over variables of the l2 distance between
/// the empirical marginal and the uniform distribution, which is what
/// the stationary marginals of the symmetric grid models converge to.
class MarginalTracker {
 public:
  MarginalTracker(std::int32_t num_variables, std::int32_t domain_size);

  void observe(const State& x);
  std::int64_t samples() const { return samples_; }

  /// Throws when no sample has been observed yet.
  double marginal_error() const;

  std::vector<double> marginal(std::int32_t var) const;

 private:
  std::int32_t num_variables_ = 0;
  std::int32_t domain_size_ = 0;
  std::int64_t samples_ = 0;
  std::vector<std::int64_t> counts_;  // variable-major [var * D + value]
};

struct GridModelSpec {
  std::string kind;  // "ising" or "potts"
  GridModelConfig config;
};

/// One chain run: the model (or a graph file), the sampler and its
/// parameters, and the reporting cadence. Sampler-specific parameters
/// must be present exactly when the sampler uses them.
struct ExperimentConfig {
  std::optional<GridModelSpec> model;
  std::string graph_file;
  SamplerId sampler = SamplerId::kGibbs;
  std::optional<double> lambda;             // min-gibbs, mgpmh, double-min
  std::optional<double> lambda2;            // double-min second batch
  std::optional<std::int64_t> batch_size;   // local minibatch
  std::int64_t iterations = 0;
  std::uint64_t seed = 0;
  std::int64_t stride = 1000;
};

/// Validates the config and builds its graph. Throws ConfigError.
FactorGraph build_graph(const ExperimentConfig& config);
void validate_experiment(const ExperimentConfig& config);

/// Runs the configured chain from the all-ones state (every site takes
/// external value 1), tracking marginal error and cumulative factor
/// evaluations, and writes CSV rows
///
///   iteration,marginal_error,factor_evals
///
/// every `stride` iterations (plus the final iteration). Byte-identical
/// output for a fixed seed.
void run_experiment(const ExperimentConfig& config, std::ostream& csv);

struct CostReportRow {
  std::string sampler;
  std::int64_t iterations = 0;
  double mean_factor_evals = 0.0;
  double mean_minibatch = 0.0;
};

/// Mean per-iteration factor evaluations of each configured sampler on a
/// shared graph. Each sampler runs `iterations` steps from the all-ones
/// state with its own stream of the given seed.
std::vector<CostReportRow> cost_report(const FactorGraph& graph,
                                       const std::vector<ExperimentConfig>& variants,
                                       std::int64_t iterations, std::uint64_t seed);

/// CSV rows: sampler,iterations,mean_factor_evals,mean_minibatch
void write_cost_report_csv(std::ostream& out, const std::vector<CostReportRow>& rows);

}  // namespace minigibbs
