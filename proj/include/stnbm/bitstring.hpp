#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "stnbm/errors.hpp"

namespace stnbm {

/// A configuration x in {0,1}^N. Ordering is lexicographic over sites 0..N-1,
/// which coincides with ordering of the printed '0'/'1' strings.
class Bitstring {
 public:
  Bitstring() = default;
  explicit Bitstring(std::size_t n) : bits_(n, 0) {}
  explicit Bitstring(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) detail::require(b <= 1, "bitstring entries must be 0 or 1");
  }

  static Bitstring parse(std::string_view s) {
    Bitstring r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '0' && s[i] != '1')
        detail::fail("bitstring contains non-binary character '" + std::string(1, s[i]) + "'");
      r.bits_[i] = static_cast<std::uint8_t>(s[i] - '0');
    }
    return r;
  }

  /// Site i holds bit (i) of `mask`, i.e. site 0 is the least significant bit.
  static Bitstring from_mask(std::uint64_t mask, std::size_t n) {
    Bitstring r(n);
    for (std::size_t i = 0; i < n; ++i) r.bits_[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
    return r;
  }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, std::uint8_t b) { bits_[i] = b ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t count_ones() const {
    std::size_t c = 0;
    for (auto b : bits_) c += b;
    return c;
  }

  std::string str() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = static_cast<char>('0' + bits_[i]);
    return s;
  }

  friend auto operator<=>(const Bitstring&, const Bitstring&) = default;
  friend bool operator==(const Bitstring&, const Bitstring&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct BitstringHash {
  std::size_t operator()(const Bitstring& b) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : b.bits()) {
      h ^= x + 1;
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace stnbm
