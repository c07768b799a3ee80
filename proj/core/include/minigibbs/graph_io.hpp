#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "minigibbs/factor_graph.hpp"

namespace minigibbs {

struct GraphParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Line-oriented text format. Lines starting with '#' are comments.
///
///   n D
///   F
///   k i1 ... ik        (scope size, then 1-based variable indices)
///   e1 e2 ... e_{D^k}  (table in row-major order, last scope variable fastest)
///
/// repeated F times. Variable indices are 1-based in the file and
/// converted to the library's 0-based convention on read.
FactorGraph read_graph(std::istream& in);
void write_graph(const FactorGraph& graph, std::ostream& out);

FactorGraph load_graph(const std::string& path);
void save_graph(const FactorGraph& graph, const std::string& path);

}  // namespace minigibbs
