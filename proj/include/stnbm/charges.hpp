#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/errors.hpp"

namespace stnbm {

/// U(1)^m charge: one signed integer per equality constraint.
/// m = 0 is the trivial symmetry used by vanilla (dense) models.
class Charge {
 public:
  Charge() = default;
  explicit Charge(std::vector<std::int64_t> entries) : v_(std::move(entries)) {}
  Charge(std::initializer_list<std::int64_t> entries) : v_(entries) {}

  static Charge zero(std::size_t m) { return Charge(std::vector<std::int64_t>(m, 0)); }

  std::size_t size() const { return v_.size(); }
  std::int64_t operator[](std::size_t k) const { return v_[k]; }
  std::span<const std::int64_t> entries() const { return v_; }
  bool is_zero() const {
    return std::all_of(v_.begin(), v_.end(), [](std::int64_t x) { return x == 0; });
  }

  Charge operator-() const {
    Charge r = *this;
    for (auto& x : r.v_) {
      if (x == INT64_MIN) detail::fail("charge negation overflows int64");
      x = -x;
    }
    return r;
  }

  friend Charge operator+(const Charge& a, const Charge& b) {
    if (a.size() != b.size())
      detail::fail("charge length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    Charge r = a;
    for (std::size_t k = 0; k < r.v_.size(); ++k) {
      if (__builtin_add_overflow(r.v_[k], b.v_[k], &r.v_[k]))
        detail::fail("charge addition overflows int64");
    }
    return r;
  }
  friend Charge operator-(const Charge& a, const Charge& b) { return a + (-b); }
  Charge& operator+=(const Charge& b) { return *this = *this + b; }

  /// c scaled by an integer factor (used for x_i * A_i with x_i in {0, 1}).
  Charge scaled(std::int64_t f) const {
    Charge r = *this;
    for (auto& x : r.v_) {
      if (__builtin_mul_overflow(x, f, &x)) detail::fail("charge scaling overflows int64");
    }
    return r;
  }

  friend auto operator<=>(const Charge&, const Charge&) = default;
  friend bool operator==(const Charge&, const Charge&) = default;

  std::string str() const {
    std::string s = "[";
    for (std::size_t k = 0; k < v_.size(); ++k) {
      if (k) s += ",";
      s += std::to_string(v_[k]);
    }
    return s + "]";
  }
  friend std::ostream& operator<<(std::ostream& os, const Charge& c) { return os << c.str(); }

 private:
  std::vector<std::int64_t> v_;
};

/// fuse(a, b): the U(1) fusion rule, componentwise addition.
inline Charge fuse(const Charge& a, const Charge& b) { return a + b; }

struct ChargeHash {
  std::size_t operator()(const Charge& c) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull ^ c.size();
    for (auto x : c.entries()) {
      h ^= std::hash<std::int64_t>{}(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

enum class Direction : std::uint8_t { In = 0, Out = 1 };

inline Direction reverse(Direction d) { return d == Direction::In ? Direction::Out : Direction::In; }
/// Sign with which a leg's charge enters the conservation law
/// sum(out) - sum(in) = flux.
inline int sign(Direction d) { return d == Direction::Out ? 1 : -1; }

struct Sector {
  Charge charge;
  std::size_t dim = 1;
  friend bool operator==(const Sector&, const Sector&) = default;
};

/// A tensor leg decomposed into charge sectors, V = (+)_n V_n with dim V_n = d_n.
/// Sectors are kept sorted by charge so iteration order is deterministic.
class ChargedIndex {
 public:
  ChargedIndex() = default;
  ChargedIndex(std::vector<Sector> sectors, Direction dir) : sectors_(std::move(sectors)), dir_(dir) {
    detail::require(!sectors_.empty(), "charged index needs at least one sector");
    std::sort(sectors_.begin(), sectors_.end(),
              [](const Sector& a, const Sector& b) { return a.charge < b.charge; });
    const std::size_t m = sectors_.front().charge.size();
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
      detail::require(sectors_[s].dim >= 1, "sector degeneracy must be positive");
      detail::require(sectors_[s].charge.size() == m, "sector charges differ in length");
      if (s > 0)
        detail::require(sectors_[s].charge != sectors_[s - 1].charge,
                        "duplicate charge " + sectors_[s].charge.str() + " in index");
    }
    offsets_.resize(sectors_.size());
    std::size_t off = 0;
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
      offsets_[s] = off;
      off += sectors_[s].dim;
    }
    total_ = off;
  }

  /// Single trivial-charge sector of dimension d (length-m zero charge).
  static ChargedIndex trivial(std::size_t m, std::size_t d, Direction dir) {
    return ChargedIndex({Sector{Charge::zero(m), d}}, dir);
  }

  std::size_t num_sectors() const { return sectors_.size(); }
  const Sector& sector(std::size_t s) const { return sectors_[s]; }
  const std::vector<Sector>& sectors() const { return sectors_; }
  const Charge& charge(std::size_t s) const { return sectors_[s].charge; }
  std::size_t dim(std::size_t s) const { return sectors_[s].dim; }
  std::size_t offset(std::size_t s) const { return offsets_[s]; }
  std::size_t total_dim() const { return total_; }
  Direction direction() const { return dir_; }
  std::size_t charge_length() const { return sectors_.empty() ? 0 : sectors_.front().charge.size(); }

  std::optional<std::size_t> find(const Charge& c) const {
    auto it = std::lower_bound(sectors_.begin(), sectors_.end(), c,
                               [](const Sector& s, const Charge& q) { return s.charge < q; });
    if (it == sectors_.end() || it->charge != c) return std::nullopt;
    return static_cast<std::size_t>(it - sectors_.begin());
  }

  ChargedIndex reversed() const {
    ChargedIndex r = *this;
    r.dir_ = reverse(dir_);
    return r;
  }

  bool same_sectors(const ChargedIndex& o) const { return sectors_ == o.sectors_; }
  friend bool operator==(const ChargedIndex& a, const ChargedIndex& b) {
    return a.dir_ == b.dir_ && a.sectors_ == b.sectors_;
  }

  std::string str() const {
    std::string s = dir_ == Direction::In ? "in{" : "out{";
    for (std::size_t k = 0; k < sectors_.size(); ++k) {
      if (k) s += ", ";
      s += sectors_[k].charge.str() + ":" + std::to_string(sectors_[k].dim);
    }
    return s + "}";
  }

 private:
  std::vector<Sector> sectors_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  Direction dir_ = Direction::Out;
};

}  // namespace stnbm
