#include "minigibbs/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace minigibbs {

namespace {

std::size_t checked_table_size(std::size_t scope_size, std::int32_t domain_size) {
  std::size_t size = 1;
  for (std::size_t k = 0; k < scope_size; ++k) {
    if (size > (static_cast<std::size_t>(1) << 48) / static_cast<std::size_t>(domain_size)) {
      throw std::invalid_argument("factor table too large");
    }
    size *= static_cast<std::size_t>(domain_size);
  }
  return size;
}

}  // namespace

Factor::Factor(std::vector<std::int32_t> scope, std::vector<double> table,
               std::int32_t domain_size)
    : scope_(std::move(scope)), table_(std::move(table)), domain_size_(domain_size) {
  if (domain_size_ < 1) {
    throw std::invalid_argument("factor: domain size must be positive");
  }
  if (scope_.empty()) {
    throw std::invalid_argument("factor: scope must be non-empty");
  }
  std::unordered_set<std::int32_t> seen(scope_.begin(), scope_.end());
  if (seen.size() != scope_.size()) {
    throw std::invalid_argument("factor: scope contains duplicate variables");
  }
  if (table_.size() != checked_table_size(scope_.size(), domain_size_)) {
    throw std::invalid_argument("factor: table size does not match domain^|scope|");
  }
  for (double v : table_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("factor: table entries must be finite and >= 0");
    }
  }
  max_energy_ = *std::max_element(table_.begin(), table_.end());
}

FactorGraph::FactorGraph(std::int32_t num_variables, std::int32_t domain_size,
                         std::vector<Factor> factors)
    : num_variables_(num_variables),
      domain_size_(domain_size),
      factors_(std::move(factors)) {
  if (num_variables_ < 1) {
    throw std::invalid_argument("factor graph: variable count must be positive");
  }
  if (domain_size_ < 1) {
    throw std::invalid_argument("factor graph: domain size must be positive");
  }
  adjacency_.resize(static_cast<std::size_t>(num_variables_));
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    const Factor& factor = factors_[f];
    if (factor.domain_size() != domain_size_) {
      throw std::invalid_argument("factor graph: factor domain size mismatch");
    }
    for (std::int32_t var : factor.scope()) {
      if (var < 0 || var >= num_variables_) {
        throw std::invalid_argument("factor graph: scope variable out of range");
      }
      adjacency_[static_cast<std::size_t>(var)].push_back(static_cast<std::int32_t>(f));
    }
  }

  stats_.total_max_energy = 0.0;
  for (const Factor& factor : factors_) {
    stats_.total_max_energy += factor.max_energy();
  }
  for (const auto& adjacent : adjacency_) {
    double local = 0.0;
    for (std::int32_t f : adjacent) {
      local += factors_[static_cast<std::size_t>(f)].max_energy();
    }
    stats_.local_max_energy = std::max(stats_.local_max_energy, local);
    stats_.max_degree =
        std::max(stats_.max_degree, static_cast<std::int64_t>(adjacent.size()));
  }
}

const std::vector<std::int32_t>& FactorGraph::adjacent_factors(std::int32_t var) const {
  if (var < 0 || var >= num_variables_) {
    throw std::out_of_range("variable index out of range");
  }
  return adjacency_[static_cast<std::size_t>(var)];
}

void FactorGraph::validate_state(const State& x) const {
  if (x.size() != static_cast<std::size_t>(num_variables_)) {
    throw InvalidStateError("state length does not match variable count");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || x[i] >= domain_size_) {
      throw InvalidStateError("state value out of range");
    }
  }
}

double FactorGraph::energy(const State& x) const {
  if (x.size() != static_cast<std::size_t>(num_variables_)) {
    throw InvalidStateError("state length does not match variable count");
  }
  double total = 0.0;
  for (const Factor& factor : factors_) {
    total += factor.value_at(x);
  }
  return total;
}

double FactorGraph::local_energy(std::int32_t var, const State& x) const {
  if (x.size() != static_cast<std::size_t>(num_variables_)) {
    throw InvalidStateError("state length does not match variable count");
  }
  double total = 0.0;
  for (std::int32_t f : adjacent_factors(var)) {
    total += factors_[static_cast<std::size_t>(f)].value_at(x);
  }
  return total;
}

StateSpace::StateSpace(std::int32_t num_variables, std::int32_t domain_size,
                       std::uint64_t cap)
    : num_variables_(num_variables), domain_size_(domain_size) {
  if (num_variables_ < 1 || domain_size_ < 1) {
    throw std::invalid_argument("state space: n and D must be positive");
  }
  size_ = 1;
  for (std::int32_t i = 0; i < num_variables_; ++i) {
    if (size_ > cap / static_cast<std::uint64_t>(domain_size_)) {
      throw StateSpaceTooLargeError("state space exceeds cap of " +
                                    std::to_string(cap) + " states");
    }
    size_ *= static_cast<std::uint64_t>(domain_size_);
  }
  if (size_ > cap) {
    throw StateSpaceTooLargeError("state space exceeds cap of " +
                                  std::to_string(cap) + " states");
  }
}

State StateSpace::state_at(std::uint64_t index) const {
  if (index >= size_) {
    throw std::out_of_range("state index out of range");
  }
  State x(static_cast<std::size_t>(num_variables_), 0);
  for (std::size_t i = static_cast<std::size_t>(num_variables_); i-- > 0;) {
    x.set(i, static_cast<std::int32_t>(index % static_cast<std::uint64_t>(domain_size_)));
    index /= static_cast<std::uint64_t>(domain_size_);
  }
  return x;
}

std::uint64_t StateSpace::index_of(const State& x) const {
  if (x.size() != static_cast<std::size_t>(num_variables_)) {
    throw InvalidStateError("state length does not match state space");
  }
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || x[i] >= domain_size_) {
      throw InvalidStateError("state value out of range");
    }
    index = index * static_cast<std::uint64_t>(domain_size_) +
            static_cast<std::uint64_t>(x[i]);
  }
  return index;
}

StateSpace enumerate_states(const FactorGraph& graph, std::uint64_t cap) {
  return StateSpace(graph.num_variables(), graph.domain_size(), cap);
}

}  // namespace minigibbs
