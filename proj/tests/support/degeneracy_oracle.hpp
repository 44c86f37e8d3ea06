#pragma once

// Independent counts of cardinality-kappa strings by largest separation.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <map>
#include <vector>

namespace stnbm::testing {

/// Largest j - i over consecutive ones of the N-bit mask (0 with fewer than two ones).
inline int max_separation(std::uint64_t mask, int n) {
  int last = -1, best = 0;
  for (int i = 0; i < n; ++i)
    if ((mask >> i) & 1u) {
      if (last >= 0 && i - last > best) best = i - last;
      last = i;
    }
  return best;
}

/// bucket[kappa][sep] = number of N-bit strings with kappa ones and largest separation sep.
inline std::vector<std::map<int, std::uint64_t>> separation_buckets(int n) {
  std::vector<std::map<int, std::uint64_t>> b(static_cast<std::size_t>(n) + 1);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m)
    ++b[static_cast<std::size_t>(__builtin_popcountll(m))][max_separation(m, n)];
  return b;
}

/// Number of N-bit strings with kappa ones whose separations are all <= s, by
/// dynamic programming over (ones placed, zeros since the last one).
inline boost::multiprecision::uint128_t count_separation_at_most(int n, int kappa, int s) {
  using U = boost::multiprecision::uint128_t;
  // dp[k][r]: k ones so far; r = zeros since the last one, or r = n + 1 before the first one.
  const int none = n + 1;
  std::vector<std::vector<U>> dp(kappa + 1, std::vector<U>(n + 2, 0)), nx = dp;
  dp[0][none] = 1;
  for (int i = 0; i < n; ++i) {
    for (auto& row : nx) std::fill(row.begin(), row.end(), U{0});
    for (int k = 0; k <= kappa; ++k)
      for (int r = 0; r <= none; ++r) {
        const U v = dp[k][r];
        if (!v) continue;
        nx[k][r == none ? none : r + 1] += v;
        if (k < kappa && (r == none || r + 1 <= s)) nx[k + 1][0] += v;
      }
    std::swap(dp, nx);
  }
  U total = 0;
  for (int r = 0; r <= none; ++r) total += dp[kappa][r];
  return total;
}

}  // namespace stnbm::testing
