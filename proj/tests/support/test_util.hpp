#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/symmps.hpp"

namespace stnbm::testing {

inline std::vector<Bitstring> all_bitstrings(std::size_t n) {
  std::vector<Bitstring> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) out.push_back(Bitstring::from_mask(m, n));
  return out;
}

/// Brute-force A x = b, written out independently of ConstraintSystem::satisfied_by.
inline bool satisfies(const std::vector<std::vector<std::int64_t>>& A, const std::vector<std::int64_t>& b,
                      const Bitstring& x) {
  for (std::size_t r = 0; r < A.size(); ++r) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += A[r][i] * x[i];
    if (s != b[r]) return false;
  }
  return true;
}

inline std::set<Bitstring> brute_solutions(const ConstraintSystem& cs) {
  std::set<Bitstring> s;
  for (const auto& x : all_bitstrings(cs.num_sites()))
    if (satisfies(cs.A(), cs.b(), x)) s.insert(x);
  return s;
}

/// Strings with nonzero amplitude, by exhaustive evaluation.
inline std::set<Bitstring> nonzero_support(const SymMPS& mps, double tol = 0.0) {
  std::set<Bitstring> s;
  for (const auto& x : all_bitstrings(mps.size()))
    if (std::abs(mps.amplitude(x)) > tol) s.insert(x);
  return s;
}

/// Random feasible system: b = A x0 for a random x0.
template <class Rng>
ConstraintSystem random_system(std::size_t n, std::size_t m, std::int64_t lo, std::int64_t hi, Rng& rng) {
  std::uniform_int_distribution<std::int64_t> coef(lo, hi);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<std::int64_t>> A(m, std::vector<std::int64_t>(n));
  for (auto& row : A)
    for (auto& v : row) v = coef(rng);
  std::vector<std::int64_t> b(m, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (coin(rng))
      for (std::size_t r = 0; r < m; ++r) b[r] += A[r][i];
  return ConstraintSystem(std::move(A), std::move(b));
}

/// Exact Born probabilities over all 2^N strings, indexed by mask.
inline std::vector<double> born_probabilities(const SymMPS& mps) {
  std::vector<double> p;
  double z = 0.0;
  for (const auto& x : all_bitstrings(mps.size())) {
    const double a = mps.amplitude(x);
    p.push_back(a * a);
    z += a * a;
  }
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace stnbm::testing

#include "stnbm/builder.hpp"

namespace stnbm::testing {

/// Greedy set cover of the (link, charge) pairs used by `candidates`: repeatedly
/// take the candidate that adds the most uncovered pairs (first in order on ties).
inline std::vector<Bitstring> greedy_link_cover(const ConstraintSystem& cs, const std::vector<Bitstring>& candidates) {
  std::vector<std::set<std::pair<std::size_t, Charge>>> pairs;
  std::set<std::pair<std::size_t, Charge>> uncovered;
  for (const auto& x : candidates) {
    std::set<std::pair<std::size_t, Charge>> p;
    const auto lc = link_charges_for_bitstring(cs, x);
    for (std::size_t j = 0; j < lc.size(); ++j) p.insert({j, lc[j]});
    uncovered.insert(p.begin(), p.end());
    pairs.push_back(std::move(p));
  }
  std::vector<Bitstring> chosen;
  while (!uncovered.empty()) {
    std::size_t best = 0, gain = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      std::size_t g = 0;
      for (const auto& q : pairs[k]) g += uncovered.count(q);
      if (g > gain) {
        gain = g;
        best = k;
      }
    }
    chosen.push_back(candidates[best]);
    for (const auto& q : pairs[best]) uncovered.erase(q);
  }
  return chosen;
}

}  // namespace stnbm::testing
