#pragma once

#include <cstdint>

#include "minigibbs/factor_graph.hpp"

namespace minigibbs {

/// N x N grid models with Gaussian-kernel interactions
/// A_ij = exp(-gamma * d_ij^2) between distinct sites, d measured in grid
/// coordinates. Every pair of sites interacts (no truncation radius).
struct GridModelConfig {
  std::int32_t grid_side = 1;   // N; the model has n = N^2 variables
  double beta = 1.0;            // inverse temperature, >= 0
  double kernel_gamma = 1.5;    // kernel bandwidth, > 0
  std::int32_t domain_size = 2; // D; Potts only, Ising is fixed at 2
};

/// Ising model: one factor per unordered site pair {i, j}, i < j, with
/// energy beta * A_ij * (s_i * s_j + 1) where the spins s are +1 for
/// value 1 and -1 for value 2 (external numbering). Each factor's
/// maximum energy is 2 * beta * A_ij.
FactorGraph make_ising(const GridModelConfig& cfg);

/// Potts model: one factor per unordered pair with energy
/// beta * A_ij * [x(i) == x(j)]; maximum energy beta * A_ij.
FactorGraph make_potts(const GridModelConfig& cfg);

}  // namespace minigibbs
