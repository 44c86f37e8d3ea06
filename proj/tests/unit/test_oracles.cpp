#include <gtest/gtest.h>

#include <random>

#include "degeneracy_oracle.hpp"
#include "stnbm/oracles.hpp"
#include "test_util.hpp"

using namespace stnbm;
using namespace stnbm::testing;

namespace {

std::vector<Bitstring> sorted(const std::set<Bitstring>& s) { return {s.begin(), s.end()}; }

std::vector<std::int64_t> random_coefficients(std::size_t n, std::int64_t lo, std::int64_t hi, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  std::vector<std::int64_t> a(n);
  for (auto& v : a) v = d(rng);
  return a;
}

}  // namespace

TEST(Enumerate, CardinalitySixThree) {
  const auto cs = ConstraintSystem::cardinality(6, 3);
  const auto s = enumerate_solutions(cs);
  EXPECT_EQ(s.size(), 20u);
  EXPECT_EQ(s.bitstrings, sorted(brute_solutions(cs)));
}

TEST(Enumerate, InfeasibleIsEmpty) {
  EXPECT_EQ(enumerate_solutions(ConstraintSystem({{2, 2, 2}}, {3})).size(), 0u);
}

TEST(Enumerate, MatchesBruteForceOnRandomSystems) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const auto cs = random_system(12, 1 + rep % 3, -2, 2, rng);
    EXPECT_EQ(enumerate_solutions(cs).bitstrings, sorted(brute_solutions(cs)));
  }
  EXPECT_EQ(enumerate_solutions(ConstraintSystem::cardinality(12, 5)).size(), 792u);
}

TEST(Enumerate, RejectsLargeN) {
  EXPECT_THROW(enumerate_solutions(ConstraintSystem::cardinality(27, 3)), ValidationError);
}

TEST(Mitm, AgreesWithEnumeration) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = random_coefficients(16, -5, 5, rng);
    const std::int64_t b = std::uniform_int_distribution<std::int64_t>(-6, 6)(rng);
    const auto e = enumerate_solutions(ConstraintSystem({a}, {b}));
    const auto m = solve_single_equality_mitm(a, b);
    EXPECT_EQ(m.bitstrings, e.bitstrings);
    EXPECT_EQ(count_single_equality_mitm(a, b), BigInt(e.size()));
  }
}

TEST(Mitm, OddLengthAndEdgeCases) {
  EXPECT_EQ(solve_single_equality_mitm({0, 0, 0}, 0).size(), 8u);
  EXPECT_EQ(solve_single_equality_mitm({0, 0, 0}, 1).size(), 0u);
  EXPECT_EQ(solve_single_equality_mitm({1, 1, 1, 1, 1, 1, 1}, 3).size(), 35u);
  EXPECT_EQ(solve_single_equality_mitm({5}, 5).bitstrings, std::vector<Bitstring>{Bitstring::parse("1")});
  EXPECT_THROW(solve_single_equality_mitm({}, 0), ValidationError);
  EXPECT_THROW(solve_single_equality_mitm(std::vector<std::int64_t>(8, 0), 0, 10), ValidationError);
}

TEST(Dp, AgreesWithMitm) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = random_coefficients(20, 0, 9, rng);
    const std::int64_t b = std::uniform_int_distribution<std::int64_t>(0, 40)(rng);
    const auto m = solve_single_equality_mitm(a, b);
    const auto d = solve_single_equality_dp(a, b, true);
    EXPECT_EQ(d.count, BigInt(m.size()));
    ASSERT_TRUE(d.solutions.has_value());
    EXPECT_EQ(d.solutions->bitstrings, m.bitstrings);
  }
}

TEST(Dp, SmallExamples) {
  const auto d = solve_single_equality_dp({1, 2, 3}, 3, true);
  EXPECT_EQ(d.count, 2);
  EXPECT_EQ(d.solutions->bitstrings, (std::vector<Bitstring>{Bitstring::parse("001"), Bitstring::parse("110")}));
  EXPECT_EQ(solve_single_equality_dp({4, 7, 1}, 0).count, 1);
  EXPECT_FALSE(solve_single_equality_dp({4, 7, 1}, 0).solutions.has_value());
  EXPECT_EQ(solve_single_equality_dp(std::vector<std::int64_t>(60, 1), 30).count, binomial(60, 30));
}

TEST(Dp, RejectsNegativeInput) {
  EXPECT_THROW(solve_single_equality_dp({1, -2}, 1), ValidationError);
  EXPECT_THROW(solve_single_equality_dp({1, 2}, -1), ValidationError);
}

TEST(Binomial, KnownValues) {
  EXPECT_EQ(binomial(50, 25), BigInt("126410606437752"));
  EXPECT_EQ(binomial(5, 0), 1);
  EXPECT_EQ(binomial(5, 6), 0);
}

TEST(Degeneracy, MatchesBucketsForAllAdmissibleArguments) {
  for (int n : {8, 10, 12}) {
    const auto buckets = separation_buckets(n);
    for (int kappa = 0; kappa <= n; ++kappa)
      for (int a = 0; 2 * a < n - kappa; ++a) {
        const int sep = n - kappa - a + 1;
        const auto it = buckets[static_cast<std::size_t>(kappa)].find(sep);
        const std::uint64_t want = it == buckets[static_cast<std::size_t>(kappa)].end() ? 0 : it->second;
        EXPECT_EQ(degeneracy_count(a, kappa, n), BigInt(want)) << "N=" << n << " a=" << a << " kappa=" << kappa;
      }
  }
}

TEST(Degeneracy, ZeroExtraZerosAnchor) {
  for (int kappa = 1; kappa <= 10; ++kappa) {
    EXPECT_EQ(degeneracy_count(0, kappa, 20), kappa - 1);
    EXPECT_EQ(degeneracy_count_as_printed(0, kappa, 20), 3 * (kappa - 1));
  }
}

TEST(Degeneracy, PositiveAMatchesPrintedSum) {
  for (int a = 1; a < 12; ++a) EXPECT_EQ(degeneracy_count(a, 25, 50), degeneracy_count_as_printed(a, 25, 50));
}

TEST(Degeneracy, DynamicProgrammingAtFifty) {
  for (int a = 0; a < 12; ++a) {
    const int sep = 50 - 25 - a + 1;
    const auto want = count_separation_at_most(50, 25, sep) - count_separation_at_most(50, 25, sep - 1);
    EXPECT_EQ(degeneracy_count(a, 25, 50), BigInt(want.convert_to<std::uint64_t>())) << "a=" << a;
  }
}

TEST(Degeneracy, DomainErrors) {
  EXPECT_THROW(degeneracy_count(5, 10, 20), ValidationError);
  EXPECT_THROW(degeneracy_count(-1, 10, 20), ValidationError);
  EXPECT_THROW(degeneracy_count(0, 21, 20), ValidationError);
  EXPECT_THROW(degeneracy_count_as_printed(0, 3, 0), ValidationError);
}

TEST(RandomSearch, FindsOnlyValidStrings) {
  std::mt19937_64 rng(4);
  const auto cs = ConstraintSystem::cardinality(10, 5);
  const auto s = random_valid_search(cs, 5000, rng);
  EXPECT_GT(s.size(), 200u);
  for (const auto& x : s) EXPECT_EQ(x.count_ones(), 5u);
  EXPECT_EQ(random_valid_search(cs, 5000, rng, 7).size(), 7u);
  EXPECT_EQ(random_valid_search(ConstraintSystem({{2, 2}}, {1}), 100, rng).size(), 0u);
}
