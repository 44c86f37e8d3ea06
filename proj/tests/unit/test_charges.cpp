#include <gtest/gtest.h>

#include <climits>
#include <random>
#include <unordered_set>

#include "stnbm/charges.hpp"
#include "stnbm/constraints.hpp"

using namespace stnbm;

TEST(Charge, AdditionIsComponentwise) {
  EXPECT_EQ(fuse(Charge{1}, Charge{2}), Charge{3});
  EXPECT_EQ(fuse(Charge{2, -1}, Charge{-2, 1}), Charge::zero(2));
}

TEST(Charge, LengthMismatchThrows) {
  EXPECT_THROW(fuse(Charge{1}, Charge{1, 2}), ValidationError);
}

TEST(Charge, OverflowIsChecked) {
  EXPECT_THROW(fuse(Charge{INT64_MAX}, Charge{1}), ValidationError);
  EXPECT_THROW(-Charge{INT64_MIN}, ValidationError);
}

TEST(Charge, GroupLawsOnRandomTriples) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> d(-1000, 1000);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 1 + rep % 4;
    auto rnd = [&] {
      std::vector<std::int64_t> v(m);
      for (auto& x : v) x = d(rng);
      return Charge(v);
    };
    const Charge a = rnd(), b = rnd(), c = rnd(), z = Charge::zero(m);
    EXPECT_EQ(fuse(a, b), fuse(b, a));
    EXPECT_EQ(fuse(fuse(a, b), c), fuse(a, fuse(b, c)));
    EXPECT_EQ(fuse(z, a), a);
    EXPECT_EQ(fuse(a, z), a);
    EXPECT_EQ(fuse(a, -a), z);
  }
}

TEST(Charge, TotalOrderIsLexicographic) {
  EXPECT_LT((Charge{0, 5}), (Charge{1, 0}));
  EXPECT_LT((Charge{1, -1}), (Charge{1, 0}));
  EXPECT_EQ(ChargeHash{}(Charge{3, 4}), ChargeHash{}(Charge{3, 4}));
}

TEST(ChargedIndex, SortsAndLooksUpExactly) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> d(-50, 50);
  std::set<Charge> charges;
  while (charges.size() < 40) charges.insert(Charge{d(rng), d(rng)});
  std::vector<Sector> secs;
  std::map<Charge, std::size_t> want;
  std::size_t deg = 1;
  for (auto it = charges.rbegin(); it != charges.rend(); ++it) {
    secs.push_back({*it, deg});
    want[*it] = deg;
    deg = deg % 5 + 1;
  }
  const ChargedIndex idx(secs, Direction::Out);
  std::size_t total = 0;
  for (std::size_t s = 0; s < idx.num_sectors(); ++s) {
    if (s) {
      EXPECT_LT(idx.charge(s - 1), idx.charge(s));
    }
    total += idx.dim(s);
  }
  EXPECT_EQ(total, idx.total_dim());
  for (const auto& [c, dg] : want) {
    const auto s = idx.find(c);
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(idx.dim(*s), dg);
  }
  EXPECT_FALSE(idx.find(Charge{1000, 1000}).has_value());
}

TEST(ChargedIndex, RejectsDuplicatesAndZeroDims) {
  EXPECT_THROW(ChargedIndex({{Charge{1}, 1}, {Charge{1}, 2}}, Direction::In), ValidationError);
  EXPECT_THROW(ChargedIndex({{Charge{1}, 0}}, Direction::In), ValidationError);
  EXPECT_THROW(ChargedIndex({}, Direction::In), ValidationError);
}

TEST(ChargedIndex, ReversedFlipsOnlyDirection) {
  const ChargedIndex idx({{Charge{0}, 2}, {Charge{1}, 3}}, Direction::In);
  const auto r = idx.reversed();
  EXPECT_EQ(r.direction(), Direction::Out);
  EXPECT_TRUE(r.same_sectors(idx));
}

TEST(SiteCharges, CardinalityColumn) {
  const auto cs = ConstraintSystem::cardinality(6, 3);
  const auto [c0, c1] = site_charges(cs, 2);
  EXPECT_EQ(c0, Charge::zero(1));
  EXPECT_EQ(c1, Charge{1});
}

TEST(SiteCharges, ZeroColumnGivesTwoEmptyCharges) {
  const ConstraintSystem cs({{0, 1, 0}}, {1});
  const auto [c0, c1] = site_charges(cs, 0);
  EXPECT_EQ(c0, c1);
  EXPECT_TRUE(c1.is_zero());
}

TEST(SiteCharges, TwoRowColumn) {
  const ConstraintSystem cs({{2, -1}, {0, 3}}, {0, 0});
  EXPECT_EQ(site_charges(cs, 1).second, (Charge{-1, 3}));
  EXPECT_EQ(site_charges(cs, 0).second, (Charge{2, 0}));
}

TEST(SiteCharges, IndexOutOfRange) {
  EXPECT_THROW(site_charges(ConstraintSystem::cardinality(4, 2), 4), ValidationError);
}

TEST(ConstraintSystem, RejectsRaggedInput) {
  EXPECT_THROW(ConstraintSystem({{1, 1}, {1}}, {1, 1}), ValidationError);
  EXPECT_THROW(ConstraintSystem({{1, 1}}, {1, 1}), ValidationError);
  EXPECT_THROW(ConstraintSystem({}, {}), ValidationError);
}

TEST(ConstraintSystem, ViolatedRowIsReported) {
  const ConstraintSystem cs({{1, 1, 0}, {0, 1, 1}}, {1, 1});
  EXPECT_FALSE(cs.violated_row(Bitstring::parse("010")).has_value());
  EXPECT_EQ(cs.violated_row(Bitstring::parse("011")), std::optional<std::size_t>(1));
  EXPECT_EQ(cs.violated_row(Bitstring::parse("000")), std::optional<std::size_t>(0));
}

TEST(Bitstring, ParseAndMask) {
  const auto x = Bitstring::parse("1101");
  EXPECT_EQ(x.str(), "1101");
  EXPECT_EQ(x.count_ones(), 3u);
  EXPECT_EQ(Bitstring::from_mask(0b0011, 4).str(), "1100");
  EXPECT_THROW(Bitstring::parse("10a1"), ValidationError);
}

TEST(SeedSet, DeduplicatesAndNamesViolatedRow) {
  const ConstraintSystem cs({{1, 1, 1}, {1, 0, 0}}, {2, 1});
  const SeedSet s(cs, {Bitstring::parse("110"), Bitstring::parse("101"), Bitstring::parse("110")});
  EXPECT_EQ(s.size(), 2u);
  try {
    SeedSet(cs, {Bitstring::parse("011")});
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}
