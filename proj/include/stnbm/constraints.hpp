#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/charges.hpp"
#include "stnbm/errors.hpp"

namespace stnbm {

/// The equality system A·x = b with A an m×N integer matrix.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  ConstraintSystem(std::vector<std::vector<std::int64_t>> A, std::vector<std::int64_t> b)
      : A_(std::move(A)), b_(std::move(b)) {
    detail::require(!A_.empty(), "constraint matrix needs at least one row");
    detail::require(A_.size() == b_.size(), "A has " + std::to_string(A_.size()) +
                                                " rows but b has " + std::to_string(b_.size()) +
                                                " entries");
    n_ = A_.front().size();
    detail::require(n_ >= 1, "constraint matrix needs at least one column");
    for (std::size_t r = 0; r < A_.size(); ++r)
      detail::require(A_[r].size() == n_, "row " + std::to_string(r) + " of A has length " +
                                              std::to_string(A_[r].size()) + ", expected " +
                                              std::to_string(n_));
  }

  /// sum_i x_i = k over n sites.
  static ConstraintSystem cardinality(std::size_t n, std::int64_t k) {
    return ConstraintSystem({std::vector<std::int64_t>(n, 1)}, {k});
  }

  std::size_t num_sites() const { return n_; }
  std::size_t num_constraints() const { return A_.size(); }
  const std::vector<std::vector<std::int64_t>>& A() const { return A_; }
  const std::vector<std::int64_t>& b() const { return b_; }

  Charge column(std::size_t i) const {
    if (i >= n_) detail::fail("site index " + std::to_string(i) + " out of range (N = " + std::to_string(n_) + ")");
    std::vector<std::int64_t> c(A_.size());
    for (std::size_t r = 0; r < A_.size(); ++r) c[r] = A_[r][i];
    return Charge(std::move(c));
  }
  Charge flux() const { return Charge(b_); }

  /// Row of A violated by x, if any.
  std::optional<std::size_t> violated_row(const Bitstring& x) const {
    if (x.size() != n_)
      detail::fail("bitstring length " + std::to_string(x.size()) + " does not match N = " + std::to_string(n_));
    for (std::size_t r = 0; r < A_.size(); ++r) {
      std::int64_t s = 0;
      for (std::size_t i = 0; i < n_; ++i)
        if (x[i]) s += A_[r][i];
      if (s != b_[r]) return r;
    }
    return std::nullopt;
  }
  bool satisfied_by(const Bitstring& x) const {
    return x.size() == n_ && !violated_row(x).has_value();
  }

 private:
  std::vector<std::vector<std::int64_t>> A_;
  std::vector<std::int64_t> b_;
  std::size_t n_ = 0;
};

/// Physical charges of site i for bit values (0, 1): (zero, column i of A).
inline std::pair<Charge, Charge> site_charges(const ConstraintSystem& cs, std::size_t i) {
  return {Charge::zero(cs.num_constraints()), cs.column(i)};
}

/// Deduplicated, sorted set of seed bitstrings that all satisfy A·x = b.
class SeedSet {
 public:
  SeedSet() = default;
  SeedSet(const ConstraintSystem& cs, const std::vector<Bitstring>& xs) {
    std::set<Bitstring> uniq;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto& x = xs[k];
      detail::require(x.size() == cs.num_sites(),
                      "seed " + std::to_string(k) + " has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(cs.num_sites()));
      if (auto row = cs.violated_row(x))
        detail::fail("seed " + std::to_string(k) + " (" + x.str() + ") violates row " +
                     std::to_string(*row) + " of A");
      uniq.insert(x);
    }
    items_.assign(uniq.begin(), uniq.end());
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Bitstring>& bitstrings() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  bool contains(const Bitstring& x) const {
    return std::binary_search(items_.begin(), items_.end(), x);
  }

 private:
  std::vector<Bitstring> items_;
};

}  // namespace stnbm
