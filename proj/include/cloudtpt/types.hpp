#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cloudtpt {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Sorted, duplicate-free list of state indices.
using IndexSet = std::vector<Index>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `row` is 1-based and counts the header line; 0 when
/// the problem is not tied to a row.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t row, const std::string& what)
      : Error(path + (row ? ":" + std::to_string(row) : std::string()) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A numerical or structural failure that names the offending states.
class StateError : public Error {
 public:
  StateError(const std::string& what, IndexSet states)
      : Error(what + describe(states)), states_(std::move(states)) {}
  const IndexSet& states() const noexcept { return states_; }

 private:
  static std::string describe(const IndexSet& s) {
    if (s.empty()) return {};
    std::string out = " [states:";
    const std::size_t shown = s.size() < 16 ? s.size() : 16;
    for (std::size_t k = 0; k < shown; ++k) out += " " + std::to_string(s[k]);
    if (shown < s.size()) out += " ... (" + std::to_string(s.size()) + " total)";
    return out + "]";
  }
  IndexSet states_;
};

/// Normalizes an index list into an IndexSet.
IndexSet make_index_set(std::vector<Index> v);

bool contains(const IndexSet& set, Index i);

}  // namespace cloudtpt
