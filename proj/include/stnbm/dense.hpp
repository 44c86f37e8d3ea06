#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "stnbm/errors.hpp"

namespace stnbm {

/// Plain row-major array with an explicit shape.
struct DenseTensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(element_count(shape), 0.0) {}

  static std::size_t element_count(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }
  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }
};

namespace dense {

inline std::vector<std::size_t> strides(std::span<const std::size_t> shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) st[k - 1] = st[k] * shape[k];
  return st;
}

/// out[j_0..j_{r-1}] = in[i] with j_k = i_{perm[k]}.
inline std::vector<double> permute(std::span<const double> in, std::span<const std::size_t> shape,
                                   std::span<const std::size_t> perm) {
  const std::size_t r = shape.size();
  bool identity = true;
  for (std::size_t k = 0; k < r; ++k) identity = identity && perm[k] == k;
  if (identity) return {in.begin(), in.end()};

  std::vector<std::size_t> out_shape(r);
  for (std::size_t k = 0; k < r; ++k) out_shape[k] = shape[perm[k]];
  const auto in_st = strides(shape);
  std::vector<std::size_t> src_st(r);  // stride in `in` of output axis k
  for (std::size_t k = 0; k < r; ++k) src_st[k] = in_st[perm[k]];

  std::vector<double> out(in.size());
  std::vector<std::size_t> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < out.size(); ++o) {
    out[o] = in[src];
    for (std::size_t k = r; k-- > 0;) {
      if (++idx[k] < out_shape[k]) {
        src += src_st[k];
        break;
      }
      src -= src_st[k] * (idx[k] - 1);
      idx[k] = 0;
    }
  }
  return out;
}

/// Copy `src` (shape src_shape) into `dst` (shape dst_shape) starting at `offset`.
inline void embed(std::span<double> dst, std::span<const std::size_t> dst_shape,
                  std::span<const double> src, std::span<const std::size_t> src_shape,
                  std::span<const std::size_t> offset) {
  const std::size_t r = src_shape.size();
  if (src.empty()) return;
  const auto dst_st = strides(dst_shape);
  std::size_t base = 0;
  for (std::size_t k = 0; k < r; ++k) base += offset[k] * dst_st[k];
  std::vector<std::size_t> idx(r, 0);
  std::size_t d = base;
  for (std::size_t s = 0; s < src.size(); ++s) {
    dst[d] = src[s];
    for (std::size_t k = r; k-- > 0;) {
      if (++idx[k] < src_shape[k]) {
        d += dst_st[k];
        break;
      }
      d -= dst_st[k] * (idx[k] - 1);
      idx[k] = 0;
    }
  }
}

}  // namespace dense
}  // namespace stnbm
