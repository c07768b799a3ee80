#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "minigibbs/chain_analysis.hpp"
#include "minigibbs/experiment.hpp"
#include "minigibbs/graph_io.hpp"
#include "minigibbs/model_zoo.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct ModelArgs {
  std::string model;
  std::string graph_file;
  std::int32_t grid = 0;
  double beta = 1.0;
  double kernel_gamma = 1.5;
  std::int32_t domain = 0;
};

void add_model_flags(CLI::App& cmd, ModelArgs& args) {
  cmd.add_option("--model", args.model, "Synthetic model kind: ising or potts");
  cmd.add_option("--graph-file", args.graph_file, "Path to a factor graph file");
  cmd.add_option("--grid", args.grid, "Grid side N for synthetic models");
  cmd.add_option("--beta", args.beta, "Inverse temperature");
  cmd.add_option("--kernel-gamma", args.kernel_gamma, "Gaussian kernel bandwidth");
  cmd.add_option("--domain", args.domain, "Domain size D (potts)");
}

std::optional<minigibbs::GridModelSpec> model_spec(const ModelArgs& args) {
  if (args.model.empty()) return std::nullopt;
  minigibbs::GridModelConfig config;
  config.grid_side = args.grid;
  config.beta = args.beta;
  config.kernel_gamma = args.kernel_gamma;
  config.domain_size = args.domain > 0 ? args.domain : 2;
  return minigibbs::GridModelSpec{args.model, config};
}

minigibbs::FactorGraph graph_from_args(const ModelArgs& args) {
  minigibbs::ExperimentConfig probe;
  probe.model = model_spec(args);
  probe.graph_file = args.graph_file;
  if (probe.model && !probe.graph_file.empty()) {
    throw minigibbs::ConfigError("give either --model or --graph-file, not both");
  }
  if (!probe.model && probe.graph_file.empty()) {
    throw minigibbs::ConfigError("one of --model or --graph-file is required");
  }
  if (probe.model && probe.model->config.grid_side < 1) {
    throw minigibbs::ConfigError("--grid must be >= 1 for synthetic models");
  }
  return minigibbs::build_graph(probe);
}

// Writes through to --out when given, stdout otherwise.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) {
        throw minigibbs::ConfigError("cannot open output file: " + path);
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw std::runtime_error("failed writing output file");
    }
  }

 private:
  std::ofstream file_;
};

int run(int argc, char** argv) {
  CLI::App app{
      "minigibbs: minibatch Gibbs sampling on discrete factor graphs, with "
      "brute-force chain verification on small instances"};
  app.require_subcommand(1);

  ModelArgs stats_model, sample_model, verify_model, cost_model;

  // stats
  CLI::App* stats_cmd =
      app.add_subcommand("stats", "Print structural constants of a graph");
  add_model_flags(*stats_cmd, stats_model);
  std::string stats_save;
  std::string stats_out;
  stats_cmd->add_option("--save-graph", stats_save,
                        "Also serialize the graph to this path");
  stats_cmd->add_option("--out", stats_out, "Write the report here instead of stdout");

  // sample
  CLI::App* sample_cmd = app.add_subcommand("sample", "Run a sampling experiment");
  add_model_flags(*sample_cmd, sample_model);
  std::string sampler_name = "gibbs";
  double lambda = 0.0, lambda2 = 0.0;
  std::int64_t batch_size = 0, iters = 0, stride = 1000;
  std::uint64_t seed = 0;
  std::string sample_out;
  sample_cmd->add_option("--sampler", sampler_name,
                         "gibbs | min-gibbs | local | mgpmh | double-min");
  sample_cmd->add_option("--lambda", lambda, "Expected minibatch size");
  sample_cmd->add_option("--lambda2", lambda2, "Second expected batch size (double-min)");
  sample_cmd->add_option("--batch-size", batch_size, "Minibatch size (local)");
  sample_cmd->add_option("--iters", iters, "Iteration count");
  sample_cmd->add_option("--seed", seed, "RNG seed");
  sample_cmd->add_option("--stride", stride, "Report every this many iterations");
  sample_cmd->add_option("--out", sample_out, "CSV output path (default stdout)");

  // verify
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Certify spectral-gap bounds on a small graph by brute force");
  add_model_flags(*verify_cmd, verify_model);
  std::vector<double> deltas{0.1, 0.3};
  std::vector<double> multipliers{1.0, 4.0};
  std::int64_t trials = 100000;
  std::uint64_t verify_seed = 1;
  std::string verify_out;
  verify_cmd->add_option("--delta", deltas, "Two-point estimator half-widths");
  verify_cmd->add_option("--lambda-multiplier", multipliers,
                         "Batch sizes as multiples of L^2");
  verify_cmd->add_option("--trials", trials, "Monte Carlo trials per matrix row");
  verify_cmd->add_option("--seed", verify_seed, "RNG seed");
  verify_cmd->add_option("--out", verify_out, "CSV output path (default stdout)");

  // cost
  CLI::App* cost_cmd = app.add_subcommand(
      "cost", "Report mean factor evaluations per iteration for each sampler");
  add_model_flags(*cost_cmd, cost_model);
  std::string cost_sampler;
  double cost_lambda = 0.0, cost_lambda2 = 0.0;
  std::int64_t cost_batch = 0, cost_iters = 10000;
  std::uint64_t cost_seed = 0;
  std::string cost_out;
  cost_cmd->add_option("--sampler", cost_sampler,
                       "Restrict to one sampler (default: all with given params)");
  cost_cmd->add_option("--lambda", cost_lambda, "Expected minibatch size");
  cost_cmd->add_option("--lambda2", cost_lambda2, "Second expected batch size");
  cost_cmd->add_option("--batch-size", cost_batch, "Minibatch size (local)");
  cost_cmd->add_option("--iters", cost_iters, "Iterations per sampler");
  cost_cmd->add_option("--seed", cost_seed, "RNG seed");
  cost_cmd->add_option("--out", cost_out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitConfigError;
  }

  if (stats_cmd->parsed()) {
    const minigibbs::FactorGraph graph = graph_from_args(stats_model);
    const minigibbs::GraphStats& stats = graph.stats();
    OutputSink sink(stats_out);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "n=%d domain=%d factors=%zu psi=%.6f local_max=%.6f max_degree=%lld\n",
                  graph.num_variables(), graph.domain_size(), graph.factors().size(),
                  stats.total_max_energy, stats.local_max_energy,
                  static_cast<long long>(stats.max_degree));
    sink.stream() << line;
    if (!stats_save.empty()) {
      minigibbs::save_graph(graph, stats_save);
    }
    sink.finish();
    return kExitSuccess;
  }

  if (sample_cmd->parsed()) {
    minigibbs::ExperimentConfig config;
    config.model = model_spec(sample_model);
    config.graph_file = sample_model.graph_file;
    const auto id = minigibbs::parse_sampler_id(sampler_name);
    if (!id) {
      throw minigibbs::ConfigError("unknown sampler: " + sampler_name);
    }
    config.sampler = *id;
    if (sample_cmd->count("--lambda") > 0) config.lambda = lambda;
    if (sample_cmd->count("--lambda2") > 0) config.lambda2 = lambda2;
    if (sample_cmd->count("--batch-size") > 0) config.batch_size = batch_size;
    config.iterations = iters;
    config.seed = seed;
    config.stride = stride;
    minigibbs::validate_experiment(config);

    OutputSink sink(sample_out);
    minigibbs::run_experiment(config, sink.stream());
    sink.finish();
    return kExitSuccess;
  }

  if (verify_cmd->parsed()) {
    const minigibbs::FactorGraph graph = graph_from_args(verify_model);
    minigibbs::GapBoundConfig config;
    config.deltas = deltas;
    config.lambda_multipliers = multipliers;
    config.trials_per_row = trials;
    config.seed = verify_seed;
    const auto checks = minigibbs::verify_gap_bounds(graph, config);
    OutputSink sink(verify_out);
    minigibbs::write_gap_report_csv(sink.stream(), checks);
    sink.finish();
    for (const auto& check : checks) {
      if (check.asserted && !check.satisfied) {
        std::cerr << "gap bound violated: " << check.chain << "\n";
        return kExitRuntimeError;
      }
    }
    return kExitSuccess;
  }

  if (cost_cmd->parsed()) {
    const minigibbs::FactorGraph graph = graph_from_args(cost_model);
    std::vector<minigibbs::ExperimentConfig> variants;
    const auto add_variant = [&](minigibbs::SamplerId id) {
      minigibbs::ExperimentConfig variant;
      variant.sampler = id;
      switch (id) {
        case minigibbs::SamplerId::kGibbs:
          break;
        case minigibbs::SamplerId::kMinGibbs:
        case minigibbs::SamplerId::kMgpmh:
          variant.lambda = cost_lambda;
          break;
        case minigibbs::SamplerId::kLocalMinibatch:
          variant.batch_size = cost_batch;
          break;
        case minigibbs::SamplerId::kDoubleMin:
          variant.lambda = cost_lambda;
          variant.lambda2 = cost_lambda2;
          break;
      }
      variants.push_back(std::move(variant));
    };
    if (!cost_sampler.empty()) {
      const auto id = minigibbs::parse_sampler_id(cost_sampler);
      if (!id) throw minigibbs::ConfigError("unknown sampler: " + cost_sampler);
      add_variant(*id);
    } else {
      add_variant(minigibbs::SamplerId::kGibbs);
      if (cost_batch > 0) add_variant(minigibbs::SamplerId::kLocalMinibatch);
      if (cost_lambda > 0) add_variant(minigibbs::SamplerId::kMinGibbs);
      if (cost_lambda > 0) add_variant(minigibbs::SamplerId::kMgpmh);
      if (cost_lambda > 0 && cost_lambda2 > 0) {
        add_variant(minigibbs::SamplerId::kDoubleMin);
      }
    }
    const auto rows = minigibbs::cost_report(graph, variants, cost_iters, cost_seed);
    OutputSink sink(cost_out);
    minigibbs::write_cost_report_csv(sink.stream(), rows);
    sink.finish();
    return kExitSuccess;
  }

  return kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const minigibbs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? kExitSuccess : kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
