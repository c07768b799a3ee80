#pragma once

#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace minigibbs {

/// A full assignment of one value to each variable. Values are 0-based
/// internally; external formats (graph files, CLI) use 1-based values.
class State {
 public:
  State() = default;
  State(std::size_t num_variables, std::int32_t value)
      : values_(num_variables, value) {}
  explicit State(std::vector<std::int32_t> values) : values_(std::move(values)) {}
  State(std::initializer_list<std::int32_t> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  std::int32_t operator[](std::size_t i) const { return values_[i]; }
  void set(std::size_t i, std::int32_t v) { values_[i] = v; }
  const std::vector<std::int32_t>& values() const { return values_; }

  friend bool operator==(const State&, const State&) = default;

 private:
  std::vector<std::int32_t> values_;
};

struct InvalidStateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct StateSpaceTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A factor over a subset of variables, stored as a dense energy table.
/// Table entries must be finite and non-negative; the maximum energy is
/// the table's largest entry, computed at construction so it is always
/// tight.
class Factor {
 public:
  /// scope: 0-based variable indices, non-empty and duplicate-free.
  /// table: domain_size^|scope| entries in row-major order, the last
  /// scope variable varying fastest.
  Factor(std::vector<std::int32_t> scope, std::vector<double> table,
         std::int32_t domain_size);

  const std::vector<std::int32_t>& scope() const { return scope_; }
  const std::vector<double>& table() const { return table_; }
  std::int32_t domain_size() const { return domain_size_; }
  double max_energy() const { return max_energy_; }

  /// Energy of this factor at state x. Throws InvalidStateError when a
  /// scoped variable's value is out of range.
  double value_at(const State& x) const {
    std::size_t index = 0;
    for (std::int32_t var : scope_) {
      const std::int32_t v = x[static_cast<std::size_t>(var)];
      if (v < 0 || v >= domain_size_) {
        throw InvalidStateError("factor evaluation: variable value out of range");
      }
      index = index * static_cast<std::size_t>(domain_size_) +
              static_cast<std::size_t>(v);
    }
    return table_[index];
  }

 private:
  std::vector<std::int32_t> scope_;
  std::vector<double> table_;
  std::int32_t domain_size_ = 0;
  double max_energy_ = 0.0;
};

/// Structural quantities of a factor graph: the total maximum energy
/// (sum of per-factor maxima), the local maximum energy (largest
/// per-variable neighborhood sum of maxima), and the maximum degree.
struct GraphStats {
  double total_max_energy = 0.0;  // Psi
  double local_max_energy = 0.0;  // L
  std::int64_t max_degree = 0;    // Delta
};

/// An immutable discrete factor graph: n variables sharing one domain
/// {1..D}, a list of factors, and the variable->factor adjacency derived
/// from the factor scopes. Safe to share across threads after
/// construction; all member operations are pure.
class FactorGraph {
 public:
  FactorGraph(std::int32_t num_variables, std::int32_t domain_size,
              std::vector<Factor> factors);

  std::int32_t num_variables() const { return num_variables_; }
  std::int32_t domain_size() const { return domain_size_; }
  const std::vector<Factor>& factors() const { return factors_; }

  /// A[i]: indices of the factors whose scope contains variable var.
  const std::vector<std::int32_t>& adjacent_factors(std::int32_t var) const;

  const GraphStats& stats() const { return stats_; }

  /// Total energy: sum of all factor values at x.
  double energy(const State& x) const;

  /// Sum over the factors adjacent to var only.
  double local_energy(std::int32_t var, const State& x) const;

  /// Throws InvalidStateError unless x has length n with all entries in
  /// [0, D).
  void validate_state(const State& x) const;

 private:
  std::int32_t num_variables_ = 0;
  std::int32_t domain_size_ = 0;
  std::vector<Factor> factors_;
  std::vector<std::vector<std::int32_t>> adjacency_;
  GraphStats stats_;
};

/// Enumeration of all D^n states in lexicographic order (variable 0 most
/// significant, value 0 first). Construction fails when the state count
/// exceeds the cap.
class StateSpace {
 public:
  static constexpr std::uint64_t kDefaultCap = 1000000;

  StateSpace(std::int32_t num_variables, std::int32_t domain_size,
             std::uint64_t cap = kDefaultCap);

  std::uint64_t size() const { return size_; }
  std::int32_t num_variables() const { return num_variables_; }
  std::int32_t domain_size() const { return domain_size_; }

  State state_at(std::uint64_t index) const;
  std::uint64_t index_of(const State& x) const;

  class Iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = State;
    using difference_type = std::ptrdiff_t;
    using pointer = const State*;
    using reference = const State&;

    Iterator() = default;
    Iterator(const StateSpace* space, std::uint64_t index)
        : space_(space), index_(index) {
      if (space_ != nullptr && index_ < space_->size()) {
        current_ = space_->state_at(index_);
      }
    }

    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }

    Iterator& operator++() {
      ++index_;
      if (index_ < space_->size()) advance();
      return *this;
    }
    Iterator operator++(int) {
      Iterator old = *this;
      ++(*this);
      return old;
    }

    friend bool operator==(const Iterator& a, const Iterator& b) {
      return a.index_ == b.index_;
    }

   private:
    // Odometer increment: bump the least significant (last) variable.
    void advance() {
      const std::int32_t d = space_->domain_size();
      for (std::size_t i = current_.size(); i-- > 0;) {
        const std::int32_t v = current_[i] + 1;
        if (v < d) {
          current_.set(i, v);
          return;
        }
        current_.set(i, 0);
      }
    }

    const StateSpace* space_ = nullptr;
    std::uint64_t index_ = 0;
    State current_;
  };

  Iterator begin() const { return Iterator(this, 0); }
  Iterator end() const { return Iterator(this, size_); }

 private:
  std::int32_t num_variables_ = 0;
  std::int32_t domain_size_ = 0;
  std::uint64_t size_ = 0;
};

/// Iterator over all D^n states of the graph; errors above the cap.
StateSpace enumerate_states(const FactorGraph& graph,
                            std::uint64_t cap = StateSpace::kDefaultCap);

}  // namespace minigibbs
