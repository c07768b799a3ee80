#include "minigibbs/model_zoo.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace minigibbs {

namespace {

void validate_config(const GridModelConfig& cfg, bool potts) {
  if (cfg.grid_side < 1) {
    throw std::invalid_argument("grid model: grid side must be >= 1");
  }
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) {
    throw std::invalid_argument("grid model: beta must be finite and >= 0");
  }
  if (!(cfg.kernel_gamma > 0.0) || !std::isfinite(cfg.kernel_gamma)) {
    throw std::invalid_argument("grid model: kernel gamma must be finite and > 0");
  }
  if (potts && cfg.domain_size < 2) {
    throw std::invalid_argument("grid model: Potts domain size must be >= 2");
  }
}

double interaction(const GridModelConfig& cfg, std::int32_t i, std::int32_t j) {
  const std::int32_t n = cfg.grid_side;
  const double dr = static_cast<double>(i / n - j / n);
  const double dc = static_cast<double>(i % n - j % n);
  return std::exp(-cfg.kernel_gamma * (dr * dr + dc * dc));
}

template <class TableFn>
FactorGraph build_grid_model(const GridModelConfig& cfg, std::int32_t domain_size,
                             TableFn&& pair_table) {
  const std::int32_t n = cfg.grid_side * cfg.grid_side;
  std::vector<Factor> factors;
  factors.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t j = i + 1; j < n; ++j) {
      factors.emplace_back(std::vector<std::int32_t>{i, j},
                           pair_table(interaction(cfg, i, j)), domain_size);
    }
  }
  return FactorGraph(n, domain_size, std::move(factors));
}

}  // namespace

FactorGraph make_ising(const GridModelConfig& cfg) {
  validate_config(cfg, /*potts=*/false);
  return build_grid_model(cfg, 2, [&cfg](double a) {
    const double coupled = 2.0 * cfg.beta * a;
    // Spins +1/-1 map to values 0/1; energy is maximal when spins agree.
    return std::vector<double>{coupled, 0.0, 0.0, coupled};
  });
}

FactorGraph make_potts(const GridModelConfig& cfg) {
  validate_config(cfg, /*potts=*/true);
  const std::int32_t d = cfg.domain_size;
  return build_grid_model(cfg, d, [&cfg, d](double a) {
    std::vector<double> table(static_cast<std::size_t>(d) * static_cast<std::size_t>(d),
                              0.0);
    for (std::int32_t v = 0; v < d; ++v) {
      table[static_cast<std::size_t>(v) * static_cast<std::size_t>(d) +
            static_cast<std::size_t>(v)] = cfg.beta * a;
    }
    return table;
  });
}

}  // namespace minigibbs
