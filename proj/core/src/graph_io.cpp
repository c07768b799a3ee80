#include "minigibbs/graph_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace minigibbs {

namespace {

// Token reader that skips blank lines and '#' comment lines.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string token;
    while (!(line_ >> token)) {
      std::string raw;
      if (!std::getline(in_, raw)) {
        throw GraphParseError(std::string("unexpected end of input while reading ") +
                              what + " (line " + std::to_string(line_number_) + ")");
      }
      ++line_number_;
      if (!raw.empty() && raw[0] == '#') continue;
      line_.clear();
      line_.str(raw);
    }
    return token;
  }

  std::int64_t next_int(const char* what) {
    const std::string token = next(what);
    try {
      std::size_t pos = 0;
      const std::int64_t value = std::stoll(token, &pos);
      if (pos != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw GraphParseError("expected integer for " + std::string(what) + ", got '" +
                            token + "' (line " + std::to_string(line_number_) + ")");
    }
  }

  double next_real(const char* what) {
    const std::string token = next(what);
    try {
      std::size_t pos = 0;
      const double value = std::stod(token, &pos);
      if (pos != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw GraphParseError("expected real for " + std::string(what) + ", got '" +
                            token + "' (line " + std::to_string(line_number_) + ")");
    }
  }

 private:
  std::istream& in_;
  std::istringstream line_;
  int line_number_ = 0;
};

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FactorGraph read_graph(std::istream& in) {
  TokenReader reader(in);
  const std::int64_t n = reader.next_int("variable count");
  const std::int64_t d = reader.next_int("domain size");
  if (n < 1 || d < 1) {
    throw GraphParseError("variable count and domain size must be positive");
  }
  const std::int64_t factor_count = reader.next_int("factor count");
  if (factor_count < 0) {
    throw GraphParseError("factor count must be non-negative");
  }

  std::vector<Factor> factors;
  factors.reserve(static_cast<std::size_t>(factor_count));
  for (std::int64_t f = 0; f < factor_count; ++f) {
    const std::int64_t scope_size = reader.next_int("scope size");
    if (scope_size < 1) {
      throw GraphParseError("scope size must be positive");
    }
    std::vector<std::int32_t> scope;
    scope.reserve(static_cast<std::size_t>(scope_size));
    for (std::int64_t k = 0; k < scope_size; ++k) {
      const std::int64_t var = reader.next_int("scope variable index");
      if (var < 1 || var > n) {
        throw GraphParseError("scope variable index out of range [1, n]");
      }
      scope.push_back(static_cast<std::int32_t>(var - 1));
    }
    std::size_t table_size = 1;
    for (std::int64_t k = 0; k < scope_size; ++k) {
      table_size *= static_cast<std::size_t>(d);
    }
    std::vector<double> table;
    table.reserve(table_size);
    for (std::size_t k = 0; k < table_size; ++k) {
      table.push_back(reader.next_real("table entry"));
    }
    try {
      factors.emplace_back(std::move(scope), std::move(table),
                           static_cast<std::int32_t>(d));
    } catch (const std::invalid_argument& e) {
      throw GraphParseError(std::string("invalid factor ") + std::to_string(f + 1) +
                            ": " + e.what());
    }
  }
  return FactorGraph(static_cast<std::int32_t>(n), static_cast<std::int32_t>(d),
                     std::move(factors));
}

void write_graph(const FactorGraph& graph, std::ostream& out) {
  out << graph.num_variables() << ' ' << graph.domain_size() << '\n';
  out << graph.factors().size() << '\n';
  for (const Factor& factor : graph.factors()) {
    out << factor.scope().size();
    for (std::int32_t var : factor.scope()) {
      out << ' ' << (var + 1);
    }
    out << '\n';
    const std::vector<double>& table = factor.table();
    for (std::size_t k = 0; k < table.size(); ++k) {
      if (k > 0) out << ' ';
      out << format_real(table[k]);
    }
    out << '\n';
  }
}

FactorGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open graph file: " + path);
  }
  return read_graph(in);
}

void save_graph(const FactorGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  write_graph(graph, out);
  if (!out) {
    throw std::runtime_error("failed writing graph file: " + path);
  }
}

}  // namespace minigibbs
