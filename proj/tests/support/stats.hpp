#pragma once

// Goodness-of-fit between sample counts and exact probabilities.

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstddef>
#include <vector>

namespace stnbm::testing {

struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Pearson test of `counts` (q draws) against `probs`. Cells with expected count
/// below 5 are pooled into one cell; zero-probability cells with hits give p = 0.
inline ChiSquare chi_square_test(const std::vector<std::size_t>& counts, const std::vector<double>& probs,
                                 std::size_t q) {
  ChiSquare r;
  double pooled_e = 0.0, pooled_o = 0.0;
  std::size_t cells = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double e = probs[k] * static_cast<double>(q), o = static_cast<double>(counts[k]);
    if (probs[k] == 0.0) {
      if (o > 0.0) return {INFINITY, 0.0, 0.0};
      continue;
    }
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += o;
      continue;
    }
    r.statistic += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    r.statistic += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  if (cells < 2) return r;
  r.dof = static_cast<double>(cells - 1);
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

/// Total variation distance between empirical frequencies and `probs`.
inline double total_variation(const std::vector<std::size_t>& counts, const std::vector<double>& probs, std::size_t q) {
  double tv = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k)
    tv += std::abs(static_cast<double>(counts[k]) / static_cast<double>(q) - probs[k]);
  return 0.5 * tv;
}

}  // namespace stnbm::testing
