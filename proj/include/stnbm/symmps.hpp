#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/block_tensor.hpp"
#include "stnbm/charges.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/errors.hpp"

namespace stnbm {

/// Physical index of a site whose bit-1 charge is `col`: sectors {0, col}
/// with degeneracy 1 each, or a single zero sector of degeneracy 2 when col = 0.
inline ChargedIndex site_index(const Charge& col) {
  const Charge z = Charge::zero(col.size());
  if (col == z) return ChargedIndex({Sector{z, 2}}, Direction::Out);
  return ChargedIndex({Sector{z, 1}, Sector{col, 1}}, Direction::Out);
}

/// (sector position, offset within the sector) that bit value `bit` occupies on `idx`.
inline std::pair<int, std::size_t> bit_slot(const ChargedIndex& idx, const Charge& col, int bit) {
  if (idx.num_sectors() == 1) return {0, static_cast<std::size_t>(bit)};
  const Charge c = bit ? col : Charge::zero(col.size());
  return {static_cast<int>(*idx.find(c)), 0};
}

/// Symmetric matrix product state. Site tensors have legs
/// (left link: out, site: out, right link: in). The flux b lives on the
/// canonical center; every other tensor has zero flux. The two boundary
/// links are one-dimensional zero-charge indices.
///
/// With this layout a link left of the center carries the partial sums
/// sum_{j<=i} x_j A_j, and a link right of the center carries the same sums
/// shifted by -b.
class SymMPS {
 public:
  SymMPS() = default;

  /// `cols[i]` is the charge of bit 1 at site i (column i of A, or the empty
  /// charge for a vanilla model).
  SymMPS(std::vector<Charge> cols, Charge flux, std::vector<BlockTensor> tensors, std::size_t center)
      : cols_(std::move(cols)), flux_(std::move(flux)), tensors_(std::move(tensors)), center_(center) {
    validate();
  }

  std::size_t size() const { return tensors_.size(); }
  std::size_t num_constraints() const { return flux_.size(); }
  bool vanilla() const { return flux_.size() == 0; }
  std::size_t center() const { return center_; }
  const Charge& flux() const { return flux_; }
  const std::vector<Charge>& site_columns() const { return cols_; }
  const Charge& site_column(std::size_t i) const { return cols_[i]; }
  const BlockTensor& tensor(std::size_t i) const { return tensors_[i]; }
  const std::vector<BlockTensor>& tensors() const { return tensors_; }

  /// Structural checks: shapes, shared links, flux placement. Does not check isometries.
  void validate() const {
    const std::size_t n = tensors_.size();
    detail::require(n >= 1, "MPS needs at least one site");
    detail::require(cols_.size() == n, "site charge list length does not match number of tensors");
    detail::require(center_ < n, "canonical center out of range");
    const std::size_t m = flux_.size();
    const Charge z = Charge::zero(m);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = tensors_[i];
      const std::string at = " at site " + std::to_string(i);
      detail::require(t.rank() == 3, "site tensor must have rank 3" + at);
      detail::require(cols_[i].size() == m, "site charge length mismatch" + at);
      detail::require(t.leg(0).direction() == Direction::Out && t.leg(1).direction() == Direction::Out &&
                          t.leg(2).direction() == Direction::In,
                      "site tensor legs must be (out, out, in)" + at);
      detail::require(t.leg(1) == site_index(cols_[i]), "physical index inconsistent with site charge" + at);
      detail::require(t.flux() == (i == center_ ? flux_ : z), "flux must sit on the canonical center" + at);
      if (i + 1 < n)
        detail::require(t.leg(2).same_sectors(tensors_[i + 1].leg(0)), "shared link mismatch" + at);
    }
    detail::require(tensors_.front().leg(0) == ChargedIndex::trivial(m, 1, Direction::Out),
                    "left boundary must be a 1-dim zero-charge link");
    detail::require(tensors_.back().leg(2) == ChargedIndex::trivial(m, 1, Direction::In),
                    "right boundary must be a 1-dim zero-charge link");
  }

  /// Psi(x). Exactly 0 when x needs a sector that is absent from the model.
  double amplitude(const Bitstring& x) const {
    if (x.size() != size())
      detail::fail("bitstring length " + std::to_string(x.size()) + " does not match N = " + std::to_string(size()));
    std::vector<double> v{1.0};
    int l = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      auto step = transition(i, l, x[i]);
      if (!step) return 0.0;
      std::vector<double> w(step->dr, 0.0);
      for (std::size_t a = 0; a < step->dl; ++a) {
        if (v[a] == 0.0) continue;
        const double* row = step->data + (a * step->ds + step->offset) * step->dr;
        for (std::size_t c = 0; c < step->dr; ++c) w[c] += v[a] * row[c];
      }
      v = std::move(w);
      l = step->r;
    }
    return v[0];
  }

  double probability(const Bitstring& x, double z) const {
    const double a = amplitude(x);
    return a * a / z;
  }

  /// The slice of site i selected by left sector `l` and bit value `bit`.
  struct Step {
    int r;               ///< right sector position
    const double* data;  ///< block data, shape (dl, ds, dr)
    std::size_t dl, ds, dr, offset;
  };
  std::optional<Step> transition(std::size_t i, int l, int bit) const {
    const auto& t = tensors_[i];
    const auto [s, off] = bit_slot(t.leg(1), cols_[i], bit);
    // out(l) + out(s) - in(r) = flux  =>  r = l + s - flux
    const Charge need = t.leg(0).charge(static_cast<std::size_t>(l)) + t.leg(1).charge(static_cast<std::size_t>(s)) -
                        t.flux();
    const auto r = t.leg(2).find(need);
    if (!r) return std::nullopt;
    const auto* d = t.find({l, s, static_cast<int>(*r)});
    if (!d) return std::nullopt;
    return Step{static_cast<int>(*r), d->data(), t.leg(0).dim(static_cast<std::size_t>(l)),
                t.leg(1).dim(static_cast<std::size_t>(s)), t.leg(2).dim(*r), off};
  }

  /// Z from the squared norm of the center tensor (valid in canonical form).
  double center_norm_squared() const { return tensors_[center_].norm_squared(); }

  /// Z = sum_x Psi(x)^2 by transfer-matrix contraction; valid in any gauge.
  double contracted_norm_squared() const {
    using Mat = Eigen::MatrixXd;
    std::map<int, Mat> env{{0, Mat::Ones(1, 1)}};
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& t = tensors_[i];
      std::map<int, Mat> next;
      for (const auto& [key, data] : t.blocks()) {
        auto it = env.find(key[0]);
        if (it == env.end()) continue;
        const auto dl = t.leg(0).dim(static_cast<std::size_t>(key[0]));
        const auto ds = t.leg(1).dim(static_cast<std::size_t>(key[1]));
        const auto dr = t.leg(2).dim(static_cast<std::size_t>(key[2]));
        auto& acc = next[key[2]];
        if (acc.size() == 0) acc = Mat::Zero(static_cast<Eigen::Index>(dr), static_cast<Eigen::Index>(dr));
        for (std::size_t s = 0; s < ds; ++s) {
          Mat a(static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(dr));
          for (std::size_t p = 0; p < dl; ++p)
            for (std::size_t c = 0; c < dr; ++c)
              a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = data[(p * ds + s) * dr + c];
          acc.noalias() += a.transpose() * it->second * a;
        }
      }
      env = std::move(next);
    }
    auto it = env.find(0);
    return it == env.end() ? 0.0 : it->second(0, 0);
  }

  /// Total dimension of the link between sites i and i+1, for i = 0..N-2.
  std::vector<std::size_t> bond_dims() const {
    std::vector<std::size_t> d;
    for (std::size_t i = 0; i + 1 < size(); ++i) d.push_back(tensors_[i].leg(2).total_dim());
    return d;
  }
  std::size_t max_bond_dim() const {
    std::size_t m = 1;
    for (auto d : bond_dims()) m = std::max(m, d);
    return m;
  }
  /// Number of stored tensor elements.
  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.num_elements();
    return n;
  }

  // -- mutation --------------------------------------------------------------

  BlockTensor& mutable_tensor(std::size_t i) { return tensors_[i]; }

  /// Replace sites (i, i+1) and move the center. Used by the sweep code.
  void set_pair(std::size_t i, BlockTensor left, BlockTensor right, std::size_t new_center) {
    tensors_[i] = std::move(left);
    tensors_[i + 1] = std::move(right);
    center_ = new_center;
  }

  /// Move the center one site to the right (or left) with the given truncation.
  /// Returns the truncation error of the split.
  double move_right(const Truncation& trunc = {}) {
    detail::require(center_ + 1 < size(), "cannot move the center past the last site");
    const double err = split_right(center_, trunc);
    ++center_;
    return err;
  }
  double move_left(const Truncation& trunc = {}) {
    detail::require(center_ > 0, "cannot move the center past the first site");
    auto sp = svd_split(tensors_[center_], {0}, trunc, FluxSide::Left, Direction::In);
    scale_leg(sp.u, 1, sp.singular_values);
    tensors_[center_ - 1] = contract(tensors_[center_ - 1], sp.u, {{2, 0}});
    tensors_[center_] = std::move(sp.vh);
    --center_;
    return sp.truncation_error;
  }

  /// Move the center to site `to` by untruncated splits (exact zeros are dropped).
  SymMPS& shift_center(std::size_t to, const Truncation& trunc = {}) {
    if (to >= size()) detail::fail("target site " + std::to_string(to) + " out of range");
    while (center_ < to) move_right(trunc);
    while (center_ > to) move_left(trunc);
    return *this;
  }

  /// Bring an arbitrary-gauge chain into canonical form with the center at the
  /// last site: a left-to-right sweep of splits starting at site 0.
  SymMPS& canonicalize(const Truncation& trunc = {}) {
    for (std::size_t i = 0; i + 1 < size(); ++i) {
      split_right(i, trunc);
      if (center_ == i) center_ = i + 1;
    }
    return *this;
  }

  /// Scale the center tensor to unit norm so that Z = 1.
  SymMPS& normalize() {
    const double n = tensors_[center_].norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize a model with zero or non-finite norm");
    tensors_[center_].scale(1.0 / n);
    return *this;
  }

  /// Largest deviation from the left/right isometry conditions over all non-center sites.
  double isometry_error() const {
    double err = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (i == center_) continue;
      err = std::max(err, gram_error(i, i < center_));
    }
    return err;
  }

 private:
  // Factor tensor i = U S Vh, keep U at i and absorb S Vh (with any flux) into i+1.
  double split_right(std::size_t i, const Truncation& trunc) {
    auto sp = svd_split(tensors_[i], {0, 1}, trunc, FluxSide::Right, Direction::In);
    scale_leg(sp.vh, 0, sp.singular_values);
    tensors_[i + 1] = contract(sp.vh, tensors_[i + 1], {{1, 0}});
    tensors_[i] = std::move(sp.u);
    return sp.truncation_error;
  }

  double gram_error(std::size_t i, bool left) const {
    const auto& t = tensors_[i];
    // Accumulate the Gram matrix per sector of the free link.
    std::map<int, Eigen::MatrixXd> gram;
    const std::size_t free_leg = left ? 2 : 0;
    for (const auto& [key, data] : t.blocks()) {
      const auto dl = t.leg(0).dim(static_cast<std::size_t>(key[0]));
      const auto ds = t.leg(1).dim(static_cast<std::size_t>(key[1]));
      const auto dr = t.leg(2).dim(static_cast<std::size_t>(key[2]));
      const int f = key[free_leg];
      const auto df = left ? dr : dl;
      auto& g = gram[f];
      if (g.size() == 0) g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(df), static_cast<Eigen::Index>(df));
      Eigen::Map<const detail::RowMat> m(data.data(), static_cast<Eigen::Index>(dl * ds), static_cast<Eigen::Index>(dr));
      if (left) {
        g.noalias() += m.transpose() * m;
      } else {
        Eigen::Map<const detail::RowMat> w(data.data(), static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(ds * dr));
        g.noalias() += w * w.transpose();
      }
    }
    double err = 0.0;
    const auto& idx = t.leg(free_leg);
    for (std::size_t s = 0; s < idx.num_sectors(); ++s) {
      const auto d = static_cast<Eigen::Index>(idx.dim(s));
      auto it = gram.find(static_cast<int>(s));
      const Eigen::MatrixXd g = it == gram.end() ? Eigen::MatrixXd::Zero(d, d) : it->second;
      err = std::max(err, (g - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
    }
    return err;
  }

  std::vector<Charge> cols_;
  Charge flux_;
  std::vector<BlockTensor> tensors_;
  std::size_t center_ = 0;
};

/// Z by both routes; throws if they disagree beyond `tol` (relative).
inline double partition_function(const SymMPS& mps, double tol = 1e-10) {
  const double zc = mps.contracted_norm_squared();
  const double zn = mps.center_norm_squared();
  if (std::abs(zc - zn) > tol * std::max(1.0, std::abs(zc)))
    throw NumericalError("partition function mismatch: contracted " + std::to_string(zc) + " vs center norm " +
                         std::to_string(zn) + " (model not in canonical form?)");
  return zc;
}

/// Direct sum of two models with the same sites, flux and center position:
/// Psi(x) = Psi_a(x) + Psi_b(x). The result is not canonical; call canonicalize().
inline SymMPS mps_direct_sum(const SymMPS& a, const SymMPS& b) {
  detail::require(a.size() == b.size(), "direct sum needs equal chain lengths");
  detail::require(a.flux() == b.flux(), "direct sum needs equal flux");
  detail::require(a.site_columns() == b.site_columns(), "direct sum needs equal site charges");
  detail::require(a.center() == b.center(), "direct sum needs the centers at the same site");
  const std::size_t n = a.size();
  std::vector<BlockTensor> ts;
  for (std::size_t i = 0; i < n; ++i) {
    if (n == 1) {
      BlockTensor t = a.tensor(0);
      t.axpy(1.0, b.tensor(0));
      ts.push_back(std::move(t));
    } else if (i == 0) {
      ts.push_back(direct_sum(a.tensor(i), b.tensor(i), {2}));
    } else if (i + 1 == n) {
      ts.push_back(direct_sum(a.tensor(i), b.tensor(i), {0}));
    } else {
      ts.push_back(direct_sum(a.tensor(i), b.tensor(i), {0, 2}));
    }
  }
  return SymMPS(a.site_columns(), a.flux(), std::move(ts), a.center());
}

/// The same model with every charge forgotten (m = 0): a dense MPS whose
/// site index maps bit b to position b.
inline SymMPS to_vanilla(const SymMPS& mps) {
  std::vector<BlockTensor> ts;
  const Charge e;
  for (std::size_t i = 0; i < mps.size(); ++i) {
    const auto& t = mps.tensor(i);
    DenseTensor d = densify(t);
    const std::size_t dl = d.shape[0], dr = d.shape[2];
    // Dense site position of each bit.
    std::size_t pos[2];
    for (int bit = 0; bit < 2; ++bit) {
      const auto [s, off] = bit_slot(t.leg(1), mps.site_column(i), bit);
      pos[bit] = t.leg(1).offset(static_cast<std::size_t>(s)) + off;
    }
    BlockTensor v({ChargedIndex::trivial(0, dl, Direction::Out), ChargedIndex::trivial(0, 2, Direction::Out),
                   ChargedIndex::trivial(0, dr, Direction::In)},
                  e);
    BlockTensor::Data data(dl * 2 * dr);
    for (std::size_t p = 0; p < dl; ++p)
      for (int bit = 0; bit < 2; ++bit)
        for (std::size_t c = 0; c < dr; ++c)
          data[(p * 2 + static_cast<std::size_t>(bit)) * dr + c] = d.data[(p * 2 + pos[bit]) * dr + c];
    v.set_block({0, 0, 0}, std::move(data));
    ts.push_back(std::move(v));
  }
  return SymMPS(std::vector<Charge>(mps.size()), e, std::move(ts), mps.center());
}

/// Random dense (m = 0) model with uniform bond dimension `chi` (capped by the
/// exact maximum 2^min(i, N-i)), entries N(0,1), canonical with unit norm.
template <class Rng>
SymMPS random_vanilla_mps(std::size_t n, std::size_t chi, Rng& rng) {
  detail::require(n >= 1 && chi >= 1, "random model needs N >= 1 and chi >= 1");
  auto link = [&](std::size_t i) {  // link after site i
    if (i + 1 >= n) return std::size_t{1};
    std::size_t cap = 1;
    for (std::size_t k = 0; k < std::min(i + 1, n - i - 1) && cap < chi; ++k) cap *= 2;
    return std::min(chi, cap);
  };
  std::vector<BlockTensor> ts;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t dl = i == 0 ? 1 : link(i - 1);
    ts.push_back(BlockTensor::random({ChargedIndex::trivial(0, dl, Direction::Out),
                                      ChargedIndex::trivial(0, 2, Direction::Out),
                                      ChargedIndex::trivial(0, link(i), Direction::In)},
                                     Charge{}, rng));
  }
  SymMPS m(std::vector<Charge>(n), Charge{}, std::move(ts), n - 1);
  m.canonicalize();
  m.normalize();
  return m;
}

/// Every bitstring with nonzero amplitude, in lexicographic order.
/// Stops with a ValidationError once more than `limit` strings are found.
inline std::vector<Bitstring> support(const SymMPS& mps, std::size_t limit = 1u << 22) {
  std::vector<Bitstring> out;
  Bitstring x(mps.size());
  std::function<void(std::size_t, int, const std::vector<double>&)> dfs =
      [&](std::size_t i, int l, const std::vector<double>& v) {
        if (i == mps.size()) {
          if (v[0] != 0.0) {
            out.push_back(x);
            if (out.size() > limit) detail::fail("support larger than the enumeration limit");
          }
          return;
        }
        for (int bit = 0; bit < 2; ++bit) {
          auto step = mps.transition(i, l, bit);
          if (!step) continue;
          std::vector<double> w(step->dr, 0.0);
          bool any = false;
          for (std::size_t a = 0; a < step->dl; ++a) {
            if (v[a] == 0.0) continue;
            const double* row = step->data + (a * step->ds + step->offset) * step->dr;
            for (std::size_t c = 0; c < step->dr; ++c) w[c] += v[a] * row[c];
          }
          for (double e : w) any = any || e != 0.0;
          if (!any) continue;
          x.set(i, static_cast<std::uint8_t>(bit));
          dfs(i + 1, step->r, w);
        }
        x.set(i, 0);
      };
  dfs(0, 0, {1.0});
  return out;
}

}  // namespace stnbm
