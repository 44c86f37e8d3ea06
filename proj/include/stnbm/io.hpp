#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/block_tensor.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/errors.hpp"
#include "stnbm/symmps.hpp"

namespace stnbm::io {

// ---------------------------------------------------------------------------
// Constraint systems: {"A": [[int, ...], ...], "b": [int, ...]}

inline ConstraintSystem constraints_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("b"))
    detail::fail("constraints JSON must be an object with keys \"A\" and \"b\"");
  const auto& ja = j.at("A");
  const auto& jb = j.at("b");
  if (!ja.is_array() || !jb.is_array()) detail::fail("\"A\" and \"b\" must be arrays");
  std::vector<std::vector<std::int64_t>> A;
  for (std::size_t r = 0; r < ja.size(); ++r) {
    if (!ja[r].is_array()) detail::fail("row " + std::to_string(r) + " of \"A\" is not an array");
    std::vector<std::int64_t> row;
    for (const auto& v : ja[r]) {
      if (!v.is_number_integer()) detail::fail("row " + std::to_string(r) + " of \"A\" has a non-integer entry");
      row.push_back(v.get<std::int64_t>());
    }
    A.push_back(std::move(row));
  }
  std::vector<std::int64_t> b;
  for (const auto& v : jb) {
    if (!v.is_number_integer()) detail::fail("\"b\" has a non-integer entry");
    b.push_back(v.get<std::int64_t>());
  }
  return ConstraintSystem(std::move(A), std::move(b));
}

inline nlohmann::json constraints_to_json(const ConstraintSystem& cs) {
  return nlohmann::json{{"A", cs.A()}, {"b", cs.b()}};
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::fail("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) detail::fail("write to " + path + " failed");
}

inline ConstraintSystem load_constraints(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    detail::fail("malformed JSON in " + path + ": " + e.what());
  }
  return constraints_from_json(j);
}

// ---------------------------------------------------------------------------
// Bitstring lists: one '0'/'1' string per line, optionally followed by a cost.

struct BitstringList {
  std::vector<Bitstring> bitstrings;
  std::vector<std::optional<double>> costs;  ///< same length; empty entry when no cost column
};

inline BitstringList parse_bitstrings(std::string_view text, const std::string& origin = "<input>") {
  BitstringList out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    line = line.substr(first);
    const auto sep = line.find_first_of(" \t,");
    const std::string_view bits = line.substr(0, sep);
    try {
      out.bitstrings.push_back(Bitstring::parse(bits));
    } catch (const ValidationError& e) {
      detail::fail(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
    std::optional<double> cost;
    if (sep != std::string_view::npos) {
      std::string_view rest = line.substr(sep + 1);
      const auto f = rest.find_first_not_of(" \t,");
      if (f != std::string_view::npos) {
        rest = rest.substr(f);
        const auto l = rest.find_last_not_of(" \t");
        rest = rest.substr(0, l + 1);
        double v = 0.0;
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
        if (ec != std::errc() || p != rest.data() + rest.size())
          detail::fail(origin + ":" + std::to_string(line_no) + ": cannot parse cost '" + std::string(rest) + "'");
        cost = v;
      }
    }
    out.costs.push_back(cost);
    if (out.bitstrings.size() > 1 && out.bitstrings.back().size() != out.bitstrings.front().size())
      detail::fail(origin + ":" + std::to_string(line_no) + ": bitstring length differs from the first line");
  }
  return out;
}

inline BitstringList load_bitstrings(const std::string& path) { return parse_bitstrings(read_text(path), path); }

/// Shortest decimal representation that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::string format_bitstrings(const std::vector<Bitstring>& xs, const std::vector<double>* costs = nullptr) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    s += xs[k].str();
    if (costs) {
      s += ' ';
      s += format_double((*costs)[k]);
    }
    s += '\n';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Model files.
//
// Layout (all integers little-endian, doubles as IEEE-754 binary64 bit
// patterns in little-endian order):
//   magic "STNBMMPS" | u32 version | u64 N | u64 m | u64 center
//   flux: m x i64 | per site: column m x i64
//   per site tensor, 3 legs: u8 direction | u64 sectors | per sector (m x i64, u64 dim)
//   per site tensor: u64 blocks | per block (3 x u32 key, u64 count, count x f64)
// Blocks appear in key order, so equal models serialize to equal bytes.

inline constexpr char kModelMagic[8] = {'S', 'T', 'N', 'B', 'M', 'M', 'P', 'S'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail_bin {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    u64(u);
  }
  void charge(const Charge& c) {
    for (auto x : c.entries()) i64(x);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : d_(data) {}
  void need(std::size_t n) const {
    if (p_ + n > d_.size()) detail::fail("model file is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(d_[p_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(u8()) << (8 * k);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  Charge charge(std::size_t m) {
    std::vector<std::int64_t> c(m);
    for (auto& x : c) x = i64();
    return Charge(std::move(c));
  }
  /// Bounded count: guards allocations against corrupt files.
  std::uint64_t count(std::uint64_t max, const char* what) {
    const auto v = u64();
    if (v > max) detail::fail(std::string("model file: implausible ") + what + " count");
    return v;
  }
  bool done() const { return p_ == d_.size(); }
  std::size_t remaining() const { return d_.size() - p_; }

 private:
  std::string_view d_;
  std::size_t p_ = 0;
};

}  // namespace detail_bin

inline std::string serialize_model(const SymMPS& mps) {
  detail_bin::Writer w;
  w.bytes(kModelMagic, 8);
  w.u32(kModelVersion);
  const std::size_t m = mps.num_constraints();
  w.u64(mps.size());
  w.u64(m);
  w.u64(mps.center());
  w.charge(mps.flux());
  for (const auto& c : mps.site_columns()) w.charge(c);
  for (const auto& t : mps.tensors()) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& leg = t.leg(k);
      w.u8(leg.direction() == Direction::Out ? 1 : 0);
      w.u64(leg.num_sectors());
      for (const auto& s : leg.sectors()) {
        w.charge(s.charge);
        w.u64(s.dim);
      }
    }
    w.u64(t.num_blocks());
    for (const auto& [key, data] : t.blocks()) {
      for (int k : key) w.u32(static_cast<std::uint32_t>(k));
      w.u64(data.size());
      for (double v : data) w.f64(v);
    }
  }
  return w.take();
}

inline SymMPS deserialize_model(std::string_view bytes) {
  detail_bin::Reader r(bytes);
  r.need(8);
  if (std::memcmp(bytes.data(), kModelMagic, 8) != 0) detail::fail("not a model file (bad magic)");
  for (int k = 0; k < 8; ++k) r.u8();
  const auto version = r.u32();
  if (version != kModelVersion) detail::fail("unsupported model format version " + std::to_string(version));
  const auto n = r.count(1u << 24, "site");
  const auto m = r.count(1u << 16, "constraint");
  const auto center = r.u64();
  const Charge flux = r.charge(m);
  std::vector<Charge> cols;
  for (std::uint64_t i = 0; i < n; ++i) cols.push_back(r.charge(m));
  std::vector<BlockTensor> ts;
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<ChargedIndex> legs;
    for (int k = 0; k < 3; ++k) {
      const auto dir = r.u8();
      if (dir > 1) detail::fail("model file: bad leg direction");
      const auto ns = r.count(r.remaining(), "sector");
      std::vector<Sector> secs;
      for (std::uint64_t s = 0; s < ns; ++s) {
        Charge c = r.charge(m);
        const auto d = r.count(1u << 30, "degeneracy");
        if (!secs.empty() && !(secs.back().charge < c)) detail::fail("model file: sectors out of order");
        secs.push_back({std::move(c), d});
      }
      legs.emplace_back(std::move(secs), dir ? Direction::Out : Direction::In);
    }
    BlockTensor t(std::move(legs), i == center ? flux : Charge::zero(m));
    const auto nb = r.count(r.remaining(), "block");
    for (std::uint64_t b = 0; b < nb; ++b) {
      BlockTensor::Key key(3);
      for (auto& k : key) k = static_cast<int>(r.u32());
      if (!t.valid_key(key)) detail::fail("model file: block key out of range");
      const auto cnt = r.count(r.remaining() / 8, "element");
      if (cnt != t.block_size(key)) detail::fail("model file: block size does not match its sectors");
      BlockTensor::Data data(cnt);
      for (auto& v : data) v = r.f64();
      t.set_block(key, std::move(data));
    }
    ts.push_back(std::move(t));
  }
  if (!r.done()) detail::fail("model file has trailing bytes");
  return SymMPS(std::move(cols), flux, std::move(ts), center);
}

inline void save_model(const std::string& path, const SymMPS& mps) { write_text(path, serialize_model(mps)); }
inline SymMPS load_model(const std::string& path) { return deserialize_model(read_text(path)); }

}  // namespace stnbm::io
