#include "minigibbs/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "minigibbs/graph_io.hpp"
#include "minigibbs/samplers.hpp"

namespace minigibbs {

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

const State& plain_state(const State& s) { return s; }
const State& plain_state(const AugmentedState& s) { return s.x; }

}  // namespace

std::optional<SamplerId> parse_sampler_id(const std::string& name) {
  if (name == "gibbs") return SamplerId::kGibbs;
  if (name == "min-gibbs") return SamplerId::kMinGibbs;
  if (name == "local") return SamplerId::kLocalMinibatch;
  if (name == "mgpmh") return SamplerId::kMgpmh;
  if (name == "double-min") return SamplerId::kDoubleMin;
  return std::nullopt;
}

std::string sampler_name(SamplerId id) {
  switch (id) {
    case SamplerId::kGibbs: return "gibbs";
    case SamplerId::kMinGibbs: return "min-gibbs";
    case SamplerId::kLocalMinibatch: return "local";
    case SamplerId::kMgpmh: return "mgpmh";
    case SamplerId::kDoubleMin: return "double-min";
  }
  return "unknown";
}

MarginalTracker::MarginalTracker(std::int32_t num_variables, std::int32_t domain_size)
    : num_variables_(num_variables), domain_size_(domain_size) {
  if (num_variables_ < 1 || domain_size_ < 1) {
    throw std::invalid_argument("marginal tracker: n and D must be positive");
  }
  counts_.assign(static_cast<std::size_t>(num_variables_) *
                     static_cast<std::size_t>(domain_size_),
                 0);
}

void MarginalTracker::observe(const State& x) {
  if (x.size() != static_cast<std::size_t>(num_variables_)) {
    throw InvalidStateError("marginal tracker: state length mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::int32_t v = x[i];
    if (v < 0 || v >= domain_size_) {
      throw InvalidStateError("marginal tracker: state value out of range");
    }
    ++counts_[i * static_cast<std::size_t>(domain_size_) + static_cast<std::size_t>(v)];
  }
  ++samples_;
}

double MarginalTracker::marginal_error() const {
  if (samples_ == 0) {
    throw std::logic_error("marginal tracker: no samples observed");
  }
  const double uniform = 1.0 / static_cast<double>(domain_size_);
  double total = 0.0;
  for (std::int32_t i = 0; i < num_variables_; ++i) {
    double sq = 0.0;
    for (std::int32_t v = 0; v < domain_size_; ++v) {
      const double p =
          static_cast<double>(counts_[static_cast<std::size_t>(i) *
                                          static_cast<std::size_t>(domain_size_) +
                                      static_cast<std::size_t>(v)]) /
          static_cast<double>(samples_);
      sq += (p - uniform) * (p - uniform);
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(num_variables_);
}

std::vector<double> MarginalTracker::marginal(std::int32_t var) const {
  if (var < 0 || var >= num_variables_) {
    throw std::out_of_range("marginal tracker: variable index out of range");
  }
  if (samples_ == 0) {
    throw std::logic_error("marginal tracker: no samples observed");
  }
  std::vector<double> p(static_cast<std::size_t>(domain_size_));
  for (std::int32_t v = 0; v < domain_size_; ++v) {
    p[static_cast<std::size_t>(v)] =
        static_cast<double>(counts_[static_cast<std::size_t>(var) *
                                        static_cast<std::size_t>(domain_size_) +
                                    static_cast<std::size_t>(v)]) /
        static_cast<double>(samples_);
  }
  return p;
}

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw ConfigError(message);
}

void validate_sampler_params(const ExperimentConfig& config) {
  const bool wants_lambda = config.sampler == SamplerId::kMinGibbs ||
                            config.sampler == SamplerId::kMgpmh ||
                            config.sampler == SamplerId::kDoubleMin;
  const bool wants_lambda2 = config.sampler == SamplerId::kDoubleMin;
  const bool wants_batch = config.sampler == SamplerId::kLocalMinibatch;

  require(config.lambda.has_value() == wants_lambda,
          wants_lambda ? "sampler requires --lambda" : "sampler does not take --lambda");
  require(config.lambda2.has_value() == wants_lambda2,
          wants_lambda2 ? "sampler requires --lambda2"
                        : "sampler does not take --lambda2");
  require(config.batch_size.has_value() == wants_batch,
          wants_batch ? "sampler requires --batch-size"
                      : "sampler does not take --batch-size");
  if (config.lambda && !(*config.lambda > 0.0)) {
    throw ConfigError("--lambda must be > 0");
  }
  if (config.lambda2 && !(*config.lambda2 > 0.0)) {
    throw ConfigError("--lambda2 must be > 0");
  }
  if (config.batch_size && *config.batch_size < 1) {
    throw ConfigError("--batch-size must be >= 1");
  }
}

}  // namespace

void validate_experiment(const ExperimentConfig& config) {
  require(config.model.has_value() != !config.graph_file.empty(),
          "exactly one of a model spec or a graph file is required");
  if (config.model) {
    require(config.model->kind == "ising" || config.model->kind == "potts",
            "model kind must be ising or potts");
  }
  require(config.iterations >= 0, "--iters must be >= 0");
  require(config.stride >= 1, "--stride must be >= 1");
  validate_sampler_params(config);
}

FactorGraph build_graph(const ExperimentConfig& config) {
  if (config.model) {
    if (config.model->kind == "ising") return make_ising(config.model->config);
    if (config.model->kind == "potts") return make_potts(config.model->config);
    throw ConfigError("model kind must be ising or potts");
  }
  if (config.graph_file.empty()) {
    throw ConfigError("exactly one of a model spec or a graph file is required");
  }
  return load_graph(config.graph_file);
}

namespace {

class CsvReporter {
 public:
  CsvReporter(std::ostream& out, std::int64_t stride, std::int64_t iterations,
              const MarginalTracker& tracker)
      : out_(out), stride_(stride), iterations_(iterations), tracker_(tracker) {
    out_ << "iteration,marginal_error,factor_evals\n";
  }

  void after_step(std::int64_t iteration, const StepRecord& record) {
    factor_evals_ += record.factor_evals;
    if (iteration % stride_ == 0 || iteration == iterations_) {
      out_ << iteration << ',' << format_value(tracker_.marginal_error()) << ','
           << factor_evals_ << '\n';
    }
  }

 private:
  std::ostream& out_;
  std::int64_t stride_;
  std::int64_t iterations_;
  const MarginalTracker& tracker_;
  std::int64_t factor_evals_ = 0;
};

template <class Sampler, class StateT>
void drive_experiment(Sampler& sampler, StateT state, const ExperimentConfig& config,
                      MarginalTracker& tracker, Rng& rng, std::ostream& csv) {
  CsvReporter reporter(csv, config.stride, config.iterations, tracker);
  run_chain(sampler, std::move(state), config.iterations, rng,
            [&](std::int64_t t, const StateT& s, const StepRecord& record) {
              tracker.observe(plain_state(s));
              reporter.after_step(t, record);
            });
}

}  // namespace

void run_experiment(const ExperimentConfig& config, std::ostream& csv) {
  validate_experiment(config);
  const FactorGraph graph = build_graph(config);
  MarginalTracker tracker(graph.num_variables(), graph.domain_size());
  Rng rng(config.seed);
  const State initial(static_cast<std::size_t>(graph.num_variables()), 0);

  switch (config.sampler) {
    case SamplerId::kGibbs: {
      GibbsSampler sampler(graph);
      drive_experiment(sampler, initial, config, tracker, rng, csv);
      break;
    }
    case SamplerId::kMinGibbs: {
      PoissonEnergyEstimator estimator(graph, *config.lambda);
      MinGibbsSampler sampler(graph, estimator);
      drive_experiment(sampler, sampler.make_initial(initial, rng), config, tracker,
                       rng, csv);
      break;
    }
    case SamplerId::kLocalMinibatch: {
      LocalMinibatchSampler sampler(graph, *config.batch_size);
      drive_experiment(sampler, initial, config, tracker, rng, csv);
      break;
    }
    case SamplerId::kMgpmh: {
      MgpmhSampler sampler(graph, *config.lambda);
      drive_experiment(sampler, initial, config, tracker, rng, csv);
      break;
    }
    case SamplerId::kDoubleMin: {
      PoissonEnergyEstimator second(graph, *config.lambda2);
      DoubleMinSampler sampler(graph, *config.lambda, second);
      drive_experiment(sampler, sampler.make_initial(initial, rng), config, tracker,
                       rng, csv);
      break;
    }
  }
}

std::vector<CostReportRow> cost_report(const FactorGraph& graph,
                                       const std::vector<ExperimentConfig>& variants,
                                       std::int64_t iterations, std::uint64_t seed) {
  if (iterations < 1) {
    throw ConfigError("cost report: iterations must be >= 1");
  }
  std::vector<CostReportRow> rows;
  rows.reserve(variants.size());
  std::uint64_t stream = 0;
  for (const ExperimentConfig& variant : variants) {
    validate_sampler_params(variant);
    Rng rng(derive_stream_seed(seed, stream++));
    const State initial(static_cast<std::size_t>(graph.num_variables()), 0);
    std::int64_t evals = 0;
    std::int64_t minibatch = 0;
    const auto tally = [&](std::int64_t, const auto&, const StepRecord& record) {
      evals += record.factor_evals;
      minibatch += record.minibatch_size;
    };

    switch (variant.sampler) {
      case SamplerId::kGibbs: {
        GibbsSampler sampler(graph);
        run_chain(sampler, initial, iterations, rng, tally);
        break;
      }
      case SamplerId::kMinGibbs: {
        PoissonEnergyEstimator estimator(graph, *variant.lambda);
        MinGibbsSampler sampler(graph, estimator);
        run_chain(sampler, sampler.make_initial(initial, rng), iterations, rng, tally);
        break;
      }
      case SamplerId::kLocalMinibatch: {
        LocalMinibatchSampler sampler(graph, *variant.batch_size);
        run_chain(sampler, initial, iterations, rng, tally);
        break;
      }
      case SamplerId::kMgpmh: {
        MgpmhSampler sampler(graph, *variant.lambda);
        run_chain(sampler, initial, iterations, rng, tally);
        break;
      }
      case SamplerId::kDoubleMin: {
        PoissonEnergyEstimator second(graph, *variant.lambda2);
        DoubleMinSampler sampler(graph, *variant.lambda, second);
        run_chain(sampler, sampler.make_initial(initial, rng), iterations, rng, tally);
        break;
      }
    }
    rows.push_back({sampler_name(variant.sampler), iterations,
                    static_cast<double>(evals) / static_cast<double>(iterations),
                    static_cast<double>(minibatch) / static_cast<double>(iterations)});
  }
  return rows;
}

void write_cost_report_csv(std::ostream& out, const std::vector<CostReportRow>& rows) {
  out << "sampler,iterations,mean_factor_evals,mean_minibatch\n";
  for (const CostReportRow& row : rows) {
    out << row.sampler << ',' << row.iterations << ','
        << format_value(row.mean_factor_evals) << ','
        << format_value(row.mean_minibatch) << '\n';
  }
}

}  // namespace minigibbs
