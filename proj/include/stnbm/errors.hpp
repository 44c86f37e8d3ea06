#pragma once

#include <stdexcept>
#include <string>

namespace stnbm {

/// Invalid input: bad shapes, mismatched charges, seeds violating A·x = b.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical operation could not produce a meaningful result
/// (zero-norm model, zero amplitude on a training item, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw ValidationError(what); }

inline void require(bool cond, const char* what) {
  if (!cond) fail(what);
}
inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

}  // namespace detail
}  // namespace stnbm
