#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/errors.hpp"

namespace stnbm {

using BigInt = boost::multiprecision::cpp_int;

struct SolutionSet {
  std::vector<Bitstring> bitstrings;  ///< sorted
  bool complete = true;
  std::size_t size() const { return bitstrings.size(); }
};

/// Exhaustive Gray-code sweep over {0,1}^N, N <= 26.
inline SolutionSet enumerate_solutions(const ConstraintSystem& cs) {
  const std::size_t n = cs.num_sites(), m = cs.num_constraints();
  if (n > 26) detail::fail("exhaustive enumeration limited to N <= 26 (got " + std::to_string(n) + ")");
  std::vector<std::vector<std::int64_t>> col(n, std::vector<std::int64_t>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < m; ++r) col[i][r] = cs.A()[r][i];
  std::vector<std::int64_t> sum(m, 0);
  const auto& b = cs.b();
  std::vector<std::uint64_t> hits;
  std::uint64_t mask = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 0;; ++k) {
    if (sum == b) hits.push_back(mask);
    if (k + 1 == total) break;
    const auto bit = static_cast<std::size_t>(__builtin_ctzll(k + 1));
    mask ^= std::uint64_t{1} << bit;
    const bool on = (mask >> bit) & 1u;
    for (std::size_t r = 0; r < m; ++r) sum[r] += on ? col[bit][r] : -col[bit][r];
  }
  SolutionSet s;
  for (auto h : hits) s.bitstrings.push_back(Bitstring::from_mask(h, n));
  std::sort(s.bitstrings.begin(), s.bitstrings.end());
  return s;
}

namespace detail {

inline std::vector<std::pair<std::int64_t, std::uint64_t>> half_sums(const std::vector<std::int64_t>& a,
                                                                    std::size_t lo, std::size_t hi) {
  const std::size_t h = hi - lo;
  std::vector<std::pair<std::int64_t, std::uint64_t>> out(std::size_t{1} << h);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << h); ++mask) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < h; ++i)
      if ((mask >> i) & 1u) s += a[lo + i];
    out[mask] = {s, mask};
  }
  return out;
}

}  // namespace detail

/// Solutions of a . x = b by meet in the middle: both halves are enumerated,
/// the right half sorted by partial sum, and complementary sums matched.
/// Throws if more than `limit` solutions exist.
inline SolutionSet solve_single_equality_mitm(const std::vector<std::int64_t>& a, std::int64_t b,
                                              std::size_t limit = std::size_t{1} << 24) {
  const std::size_t n = a.size();
  detail::require(n >= 1, "empty coefficient vector");
  if (n > 40) detail::fail("meet in the middle limited to N <= 40 (got " + std::to_string(n) + ")");
  const std::size_t h = n / 2;
  const auto left = detail::half_sums(a, 0, h);
  auto right = detail::half_sums(a, h, n);
  std::sort(right.begin(), right.end());
  SolutionSet s;
  for (const auto& [ls, lm] : left) {
    auto [first, last] = std::equal_range(right.begin(), right.end(), std::make_pair(b - ls, std::uint64_t{0}),
                                          [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto it = first; it != last; ++it) {
      if (s.bitstrings.size() >= limit) detail::fail("solution count exceeds the listing limit");
      s.bitstrings.push_back(Bitstring::from_mask(lm | (it->second << h), n));
    }
  }
  std::sort(s.bitstrings.begin(), s.bitstrings.end());
  return s;
}

/// Number of solutions of a . x = b by meet in the middle, without listing them.
inline BigInt count_single_equality_mitm(const std::vector<std::int64_t>& a, std::int64_t b) {
  const std::size_t n = a.size();
  detail::require(n >= 1, "empty coefficient vector");
  if (n > 40) detail::fail("meet in the middle limited to N <= 40 (got " + std::to_string(n) + ")");
  const std::size_t h = n / 2;
  const auto left = detail::half_sums(a, 0, h);
  auto right = detail::half_sums(a, h, n);
  std::vector<std::int64_t> rs(right.size());
  for (std::size_t k = 0; k < right.size(); ++k) rs[k] = right[k].first;
  std::sort(rs.begin(), rs.end());
  BigInt c = 0;
  for (const auto& [ls, lm] : left) {
    auto [first, last] = std::equal_range(rs.begin(), rs.end(), b - ls);
    c += static_cast<std::uint64_t>(last - first);
  }
  return c;
}

struct DpResult {
  BigInt count;
  std::optional<SolutionSet> solutions;
};

/// Pseudo-polynomial count of solutions of a . x = b for a_i >= 0, b >= 0,
/// over partial sums 0..b. With `reconstruct`, the solutions are listed by
/// backtracking through the table (up to `limit`).
inline DpResult solve_single_equality_dp(const std::vector<std::int64_t>& a, std::int64_t b, bool reconstruct = false,
                                         std::size_t limit = std::size_t{1} << 24) {
  const std::size_t n = a.size();
  detail::require(n >= 1, "empty coefficient vector");
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] < 0) detail::fail("dynamic programming needs non-negative coefficients (a[" + std::to_string(i) + "] < 0)");
  detail::require(b >= 0, "dynamic programming needs a non-negative right-hand side");
  const auto bs = static_cast<std::size_t>(b);
  // ways[i][s]: number of x_0..x_{i-1} with partial sum s.
  std::vector<std::vector<BigInt>> ways(n + 1, std::vector<BigInt>(bs + 1, 0));
  ways[0][0] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ai = static_cast<std::size_t>(a[i]);
    for (std::size_t s = 0; s <= bs; ++s) {
      if (ways[i][s] == 0) continue;
      ways[i + 1][s] += ways[i][s];
      if (s + ai <= bs) ways[i + 1][s + ai] += ways[i][s];
    }
  }
  DpResult r{ways[n][bs], std::nullopt};
  if (reconstruct) {
    if (r.count > limit) detail::fail("solution count exceeds the listing limit");
    SolutionSet sol;
    Bitstring x(n);
    std::function<void(std::size_t, std::size_t)> back = [&](std::size_t i, std::size_t s) {
      if (i == 0) {
        sol.bitstrings.push_back(x);
        return;
      }
      const auto ai = static_cast<std::size_t>(a[i - 1]);
      if (ways[i - 1][s] != 0) {
        x.set(i - 1, 0);
        back(i - 1, s);
      }
      if (s >= ai && ways[i - 1][s - ai] != 0) {
        x.set(i - 1, 1);
        back(i - 1, s - ai);
        x.set(i - 1, 0);
      }
    };
    back(n, bs);
    std::sort(sol.bitstrings.begin(), sol.bitstrings.end());
    r.solutions = std::move(sol);
  }
  return r;
}

inline BigInt binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (std::int64_t j = 1; j <= k; ++j) {
    r *= n - k + j;
    r /= j;
  }
  return r;
}

namespace detail {

inline void require_degeneracy_domain(std::int64_t a, std::int64_t kappa, std::int64_t n) {
  require(n >= 1, "N must be positive");
  require(kappa >= 0 && kappa <= n, "kappa must lie in [0, N]");
  require(a >= 0, "a must be non-negative");
  if (!(2 * a < n - kappa))
    fail("degeneracy formula requires 2a < N - kappa (a = " + std::to_string(a) + ", kappa = " + std::to_string(kappa) +
         ", N = " + std::to_string(n) + ")");
}

}  // namespace detail

/// The two-branch binomial sum for the number of cardinality-kappa strings with
/// negative-separation cost -N + kappa + a - 1, evaluated term by term.
inline BigInt degeneracy_count_as_printed(std::int64_t a, std::int64_t kappa, std::int64_t n) {
  detail::require_degeneracy_domain(a, kappa, n);
  BigInt s = 0;
  for (std::int64_t i = a; i <= kappa + a - 2; ++i) s += 2 * binomial(i, a);
  const std::int64_t jmax = a % 2 == 1 ? (a - 1) / 2 : a / 2 - 1;
  for (std::int64_t j = 1; j <= jmax; ++j)
    for (std::int64_t i = a - j; i <= kappa + a - 2 - j; ++i) s += 2 * binomial(i, a - j) * binomial(kappa + a - 2 - i, j);
  if (a % 2 == 0)
    for (std::int64_t i = a / 2; i <= kappa - 2 + a / 2; ++i) s += binomial(i, a / 2) * binomial(kappa + a - 2 - i, a / 2);
  return s;
}

/// Same count with the a = 0 case taken once: there the "all extra zeros on
/// one side" term and the symmetric term describe the same strings, and the
/// printed sum returns 3(kappa - 1) instead of kappa - 1.
inline BigInt degeneracy_count(std::int64_t a, std::int64_t kappa, std::int64_t n) {
  detail::require_degeneracy_domain(a, kappa, n);
  if (a == 0) return kappa >= 1 ? BigInt(kappa - 1) : BigInt(0);
  return degeneracy_count_as_printed(a, kappa, n);
}

/// Uniform random bitstrings filtered by A x = b, deduplicated; stops after
/// `budget` draws or once `max_seeds` distinct solutions are found.
template <class Rng>
SeedSet random_valid_search(const ConstraintSystem& cs, std::size_t budget, Rng& rng,
                            std::size_t max_seeds = static_cast<std::size_t>(-1)) {
  std::bernoulli_distribution coin(0.5);
  std::set<Bitstring> found;
  Bitstring x(cs.num_sites());
  for (std::size_t k = 0; k < budget && found.size() < max_seeds; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) x.set(i, coin(rng) ? 1 : 0);
    if (cs.satisfied_by(x)) found.insert(x);
  }
  return SeedSet(cs, {found.begin(), found.end()});
}

}  // namespace stnbm
