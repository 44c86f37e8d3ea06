#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "stnbm/builder.hpp"
#include "stnbm/io.hpp"
#include "test_util.hpp"

using namespace stnbm;
using namespace stnbm::testing;

namespace {

double max_amp_diff(const SymMPS& a, const SymMPS& b) {
  double d = 0.0;
  for (const auto& x : all_bitstrings(a.size())) d = std::max(d, std::abs(a.amplitude(x) - b.amplitude(x)));
  return d;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("stnbm_io_" + std::to_string(::getpid()) + "_" + name)).string();
}

}  // namespace

TEST(ModelFile, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(1);
  const auto cs = random_system(9, 2, -2, 2, rng);
  for (const SymMPS& m : {random_symmetric_mps(cs, 3, rng), random_vanilla_mps(7, 5, rng), build_cardinality_mps(6, 3)}) {
    const auto bytes = io::serialize_model(m);
    const auto back = io::deserialize_model(bytes);
    EXPECT_EQ(io::serialize_model(back), bytes);
    EXPECT_EQ(max_amp_diff(m, back), 0.0);
    EXPECT_EQ(back.center(), m.center());
    EXPECT_EQ(back.flux(), m.flux());
  }
}

TEST(ModelFile, SaveAndLoad) {
  const auto path = temp_path("model.bin");
  const auto m = build_cardinality_mps(8, 3);
  io::save_model(path, m);
  EXPECT_EQ(io::serialize_model(io::load_model(path)), io::serialize_model(m));
  std::filesystem::remove(path);
  EXPECT_THROW(io::load_model(path), ValidationError);
}

TEST(ModelFile, HeaderLayout) {
  const auto bytes = io::serialize_model(build_cardinality_mps(4, 2));
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 8), "STNBMMPS");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);
  EXPECT_EQ(bytes[9], '\0');
}

TEST(ModelFile, TruncationAtEveryLengthIsRejected) {
  const auto bytes = io::serialize_model(build_cardinality_mps(5, 2));
  for (std::size_t len = 0; len < bytes.size(); ++len)
    EXPECT_THROW(io::deserialize_model(std::string_view(bytes).substr(0, len)), ValidationError) << "length " << len;
}

TEST(ModelFile, CorruptionIsRejected) {
  const auto bytes = io::serialize_model(build_cardinality_mps(5, 2));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(io::deserialize_model(bad), ValidationError);
  bad = bytes;
  bad[8] = 2;
  EXPECT_THROW(io::deserialize_model(bad), ValidationError);
  EXPECT_THROW(io::deserialize_model(bytes + "x"), ValidationError);
  // Sector count of the first leg: header (36) + flux (8) + columns (5 x 8) + direction byte.
  bad = bytes;
  for (std::size_t k = 85; k < 93; ++k) bad[k] = '\xff';
  EXPECT_THROW(io::deserialize_model(bad), ValidationError);
}

TEST(Constraints, JsonRoundTrip) {
  const ConstraintSystem cs({{1, -2, 0}, {3, 3, 3}}, {-1, 6});
  const auto back = io::constraints_from_json(io::constraints_to_json(cs));
  EXPECT_EQ(back.A(), cs.A());
  EXPECT_EQ(back.b(), cs.b());
}

TEST(Constraints, JsonErrors) {
  using nlohmann::json;
  EXPECT_THROW(io::constraints_from_json(json::parse(R"({"A": [[1, 1]]})")), ValidationError);
  EXPECT_THROW(io::constraints_from_json(json::parse(R"({"A": [[1, 1.5]], "b": [1]})")), ValidationError);
  EXPECT_THROW(io::constraints_from_json(json::parse(R"({"A": [[1, 1]], "b": ["1"]})")), ValidationError);
  EXPECT_THROW(io::constraints_from_json(json::parse(R"({"A": [1, 1], "b": [1]})")), ValidationError);
  EXPECT_THROW(io::constraints_from_json(json::parse(R"([1])")), ValidationError);
  const auto path = temp_path("bad.json");
  io::write_text(path, "{\"A\": [[1, 1]], ");
  EXPECT_THROW(io::load_constraints(path), ValidationError);
  std::filesystem::remove(path);
}

TEST(Bitstrings, ParseWithCommentsAndCosts) {
  const auto l = io::parse_bitstrings("# header\n\n0110 -2.5\n1001,3\r\n  1100\t1e-3\n0011\n");
  ASSERT_EQ(l.bitstrings.size(), 4u);
  EXPECT_EQ(l.bitstrings[1].str(), "1001");
  EXPECT_EQ(l.costs[0], -2.5);
  EXPECT_EQ(l.costs[1], 3.0);
  EXPECT_EQ(l.costs[2], 1e-3);
  EXPECT_FALSE(l.costs[3].has_value());
}

TEST(Bitstrings, ErrorsNameTheLine) {
  try {
    io::parse_bitstrings("0110\n01x0\n", "seeds.txt");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("seeds.txt:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(io::parse_bitstrings("0110\n011\n"), ValidationError);
  EXPECT_THROW(io::parse_bitstrings("0110 abc\n"), ValidationError);
}

TEST(Bitstrings, FormatRoundTrips) {
  const std::vector<Bitstring> xs{Bitstring::parse("101"), Bitstring::parse("010")};
  const std::vector<double> c{0.1, -26.0};
  const auto text = io::format_bitstrings(xs, &c);
  EXPECT_EQ(text, "101 0.1\n010 -26\n");
  const auto back = io::parse_bitstrings(text);
  EXPECT_EQ(back.bitstrings, xs);
  EXPECT_EQ(back.costs[0], 0.1);
  EXPECT_EQ(io::format_bitstrings(xs), "101\n010\n");
}
