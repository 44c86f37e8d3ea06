#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/charges.hpp"
#include "stnbm/dense.hpp"
#include "stnbm/errors.hpp"

namespace stnbm {

/// Block-sparse tensor carrying a flux. A block is addressed by one sector
/// position per leg and is stored only if its charges satisfy
///
///     sum_{out legs} n - sum_{in legs} n = flux.
///
/// Each block is a dense row-major array with shape given by the sector
/// degeneracies; blocks absent from the map are exactly zero.
class BlockTensor {
 public:
  using Key = std::vector<int>;
  using Data = std::vector<double>;

  BlockTensor() = default;
  BlockTensor(std::vector<ChargedIndex> legs, Charge flux) : legs_(std::move(legs)), flux_(std::move(flux)) {
    for (const auto& l : legs_)
      if (l.charge_length() != flux_.size())
        detail::fail("leg charge length " + std::to_string(l.charge_length()) +
                     " does not match flux length " + std::to_string(flux_.size()));
  }

  std::size_t rank() const { return legs_.size(); }
  const ChargedIndex& leg(std::size_t k) const { return legs_[k]; }
  const std::vector<ChargedIndex>& legs() const { return legs_; }
  const Charge& flux() const { return flux_; }
  const std::map<Key, Data>& blocks() const { return blocks_; }
  std::size_t num_blocks() const { return blocks_.size(); }

  /// sum_out n - sum_in n for the charges selected by `key`.
  Charge divergence(const Key& key) const {
    Charge d = Charge::zero(flux_.size());
    for (std::size_t k = 0; k < legs_.size(); ++k) {
      const Charge& c = legs_[k].charge(static_cast<std::size_t>(key[k]));
      d = legs_[k].direction() == Direction::Out ? d + c : d - c;
    }
    return d;
  }

  bool valid_key(const Key& key) const {
    if (key.size() != legs_.size()) return false;
    for (std::size_t k = 0; k < legs_.size(); ++k)
      if (key[k] < 0 || static_cast<std::size_t>(key[k]) >= legs_[k].num_sectors()) return false;
    return true;
  }
  bool allowed(const Key& key) const { return valid_key(key) && divergence(key) == flux_; }

  std::vector<std::size_t> block_shape(const Key& key) const {
    std::vector<std::size_t> s(legs_.size());
    for (std::size_t k = 0; k < legs_.size(); ++k) s[k] = legs_[k].dim(static_cast<std::size_t>(key[k]));
    return s;
  }
  std::size_t block_size(const Key& key) const { return DenseTensor::element_count(block_shape(key)); }

  const Data* find(const Key& key) const {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
  }

  /// Block for `key`, created as zeros if absent. The key must conserve charge.
  Data& block(const Key& key) {
    auto it = blocks_.find(key);
    if (it != blocks_.end()) return it->second;
    detail::require(allowed(key), "block key violates charge conservation");
    return blocks_.emplace(key, Data(block_size(key), 0.0)).first->second;
  }

  void set_block(const Key& key, Data data) {
    detail::require(allowed(key), "block key violates charge conservation");
    detail::require(data.size() == block_size(key), "block data has wrong size");
    blocks_[key] = std::move(data);
  }
  void erase_block(const Key& key) { blocks_.erase(key); }

  /// Every key allowed by charge conservation, in lexicographic order.
  std::vector<Key> allowed_keys() const {
    std::vector<Key> out;
    if (legs_.empty()) {
      if (flux_.is_zero()) out.push_back({});
      return out;
    }
    const std::size_t r = legs_.size();
    Key key(r, 0);
    // Enumerate the first r-1 legs and solve for the last one.
    while (true) {
      Charge partial = Charge::zero(flux_.size());
      for (std::size_t k = 0; k + 1 < r; ++k) {
        const Charge& c = legs_[k].charge(static_cast<std::size_t>(key[k]));
        partial = legs_[k].direction() == Direction::Out ? partial + c : partial - c;
      }
      const Charge need = legs_[r - 1].direction() == Direction::Out ? flux_ - partial : partial - flux_;
      if (auto s = legs_[r - 1].find(need)) {
        key[r - 1] = static_cast<int>(*s);
        out.push_back(key);
      }
      std::size_t k = r - 1;
      while (k-- > 0) {
        if (static_cast<std::size_t>(++key[k]) < legs_[k].num_sectors()) break;
        key[k] = 0;
      }
      if (k == static_cast<std::size_t>(-1)) break;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t num_elements() const {
    std::size_t n = 0;
    for (const auto& [k, d] : blocks_) n += d.size();
    return n;
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& [k, d] : blocks_)
      for (double v : d) s += v * v;
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }

  BlockTensor& scale(double a) {
    for (auto& [k, d] : blocks_)
      for (double& v : d) v *= a;
    return *this;
  }

  /// this += a * x. Legs and flux must agree.
  BlockTensor& axpy(double a, const BlockTensor& x) {
    detail::require(legs_ == x.legs_ && flux_ == x.flux_, "axpy on tensors with different structure");
    for (const auto& [k, d] : x.blocks_) {
      auto& mine = block(k);
      for (std::size_t e = 0; e < d.size(); ++e) mine[e] += a * d[e];
    }
    return *this;
  }

  /// Same legs and flux, no blocks.
  BlockTensor zeros_like() const { return BlockTensor(legs_, flux_); }

  /// Fill every allowed block with N(0,1) entries.
  template <class Rng>
  static BlockTensor random(std::vector<ChargedIndex> legs, Charge flux, Rng& rng) {
    BlockTensor t(std::move(legs), std::move(flux));
    std::normal_distribution<double> g(0.0, 1.0);
    for (const auto& key : t.allowed_keys()) {
      auto& d = t.block(key);
      for (double& v : d) v = g(rng);
    }
    return t;
  }

 private:
  std::vector<ChargedIndex> legs_;
  Charge flux_;
  std::map<Key, Data> blocks_;
};

// ---------------------------------------------------------------------------
// Densification

inline DenseTensor densify(const BlockTensor& t) {
  std::vector<std::size_t> shape(t.rank());
  for (std::size_t k = 0; k < t.rank(); ++k) shape[k] = t.leg(k).total_dim();
  DenseTensor out(shape);
  std::vector<std::size_t> off(t.rank());
  for (const auto& [key, data] : t.blocks()) {
    for (std::size_t k = 0; k < t.rank(); ++k) off[k] = t.leg(k).offset(static_cast<std::size_t>(key[k]));
    dense::embed(out.data, out.shape, data, t.block_shape(key), off);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leg permutation

inline BlockTensor permute_legs(const BlockTensor& t, std::span<const std::size_t> perm) {
  detail::require(perm.size() == t.rank(), "permutation length mismatch");
  std::vector<ChargedIndex> legs;
  for (auto p : perm) legs.push_back(t.leg(p));
  BlockTensor out(std::move(legs), t.flux());
  for (const auto& [key, data] : t.blocks()) {
    BlockTensor::Key nk(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) nk[k] = key[perm[k]];
    out.set_block(nk, dense::permute(data, t.block_shape(key), perm));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contraction

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline BlockTensor::Key sub_key(const BlockTensor::Key& key, std::span<const std::size_t> legs) {
  BlockTensor::Key s(legs.size());
  for (std::size_t k = 0; k < legs.size(); ++k) s[k] = key[legs[k]];
  return s;
}

inline std::size_t product_of_dims(const BlockTensor& t, const BlockTensor::Key& key,
                                   std::span<const std::size_t> legs) {
  std::size_t p = 1;
  for (auto l : legs) p *= t.leg(l).dim(static_cast<std::size_t>(key[l]));
  return p;
}

}  // namespace detail

/// Contract legs a[pairs[k].first] with b[pairs[k].second]. The result carries
/// a's free legs followed by b's free legs, and flux a.flux + b.flux.
inline BlockTensor contract(const BlockTensor& a, const BlockTensor& b,
                            std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  std::vector<std::size_t> a_pair, b_pair;
  for (const auto& [ia, ib] : pairs) {
    detail::require(ia < a.rank() && ib < b.rank(), "contracted leg out of range");
    detail::require(!a_used[ia] && !b_used[ib], "leg contracted twice");
    if (!a.leg(ia).same_sectors(b.leg(ib)))
      detail::fail("sector mismatch on contracted pair: " + a.leg(ia).str() + " vs " + b.leg(ib).str());
    detail::require(a.leg(ia).direction() != b.leg(ib).direction(),
                    "contracted legs must have opposite directions");
    a_used[ia] = b_used[ib] = true;
    a_pair.push_back(ia);
    b_pair.push_back(ib);
  }
  std::vector<std::size_t> a_free, b_free;
  for (std::size_t k = 0; k < a.rank(); ++k)
    if (!a_used[k]) a_free.push_back(k);
  for (std::size_t k = 0; k < b.rank(); ++k)
    if (!b_used[k]) b_free.push_back(k);

  std::vector<ChargedIndex> legs;
  for (auto k : a_free) legs.push_back(a.leg(k));
  for (auto k : b_free) legs.push_back(b.leg(k));
  BlockTensor out(std::move(legs), a.flux() + b.flux());

  std::vector<std::size_t> a_perm = a_free;
  a_perm.insert(a_perm.end(), a_pair.begin(), a_pair.end());
  std::vector<std::size_t> b_perm = b_pair;
  b_perm.insert(b_perm.end(), b_free.begin(), b_free.end());

  // b blocks grouped by their contracted sub-key.
  std::map<BlockTensor::Key, std::vector<const std::pair<const BlockTensor::Key, BlockTensor::Data>*>> b_by_pair;
  for (const auto& entry : b.blocks()) b_by_pair[detail::sub_key(entry.first, b_pair)].push_back(&entry);

  std::map<const BlockTensor::Key*, std::vector<double>> b_permuted;
  for (const auto& [akey, adata] : a.blocks()) {
    auto hit = b_by_pair.find(detail::sub_key(akey, a_pair));
    if (hit == b_by_pair.end()) continue;
    const std::size_t rows = detail::product_of_dims(a, akey, a_free);
    const std::size_t inner = detail::product_of_dims(a, akey, a_pair);
    const auto ap = dense::permute(adata, a.block_shape(akey), a_perm);
    Eigen::Map<const detail::RowMat> am(ap.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(inner));
    for (const auto* bentry : hit->second) {
      const auto& bkey = bentry->first;
      auto& bp = b_permuted[&bkey];
      if (bp.empty()) bp = dense::permute(bentry->second, b.block_shape(bkey), b_perm);
      const std::size_t cols = detail::product_of_dims(b, bkey, b_free);
      Eigen::Map<const detail::RowMat> bm(bp.data(), static_cast<Eigen::Index>(inner), static_cast<Eigen::Index>(cols));
      BlockTensor::Key okey = detail::sub_key(akey, a_free);
      const auto bf = detail::sub_key(bkey, b_free);
      okey.insert(okey.end(), bf.begin(), bf.end());
      auto& od = out.block(okey);
      Eigen::Map<detail::RowMat> om(od.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      om.noalias() += am * bm;
    }
  }
  return out;
}

inline BlockTensor contract(const BlockTensor& a, const BlockTensor& b,
                            std::initializer_list<std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<std::pair<std::size_t, std::size_t>> v(pairs);
  return contract(a, b, std::span<const std::pair<std::size_t, std::size_t>>(v));
}

/// Two MPS site tensors (left, site, right) -> (left, site_i, site_{i+1}, right).
inline BlockTensor merge_two_site(const BlockTensor& left, const BlockTensor& right) {
  detail::require(left.rank() == 3 && right.rank() == 3, "merge_two_site expects rank-3 site tensors");
  detail::require(left.leg(2).same_sectors(right.leg(0)) && left.leg(2).direction() != right.leg(0).direction(),
                  "shared link mismatch between neighbouring tensors");
  return contract(left, right, {{2, 0}});
}

// ---------------------------------------------------------------------------
// Blockwise SVD with global truncation

struct Truncation {
  std::size_t chi_max = std::numeric_limits<std::size_t>::max();
  /// Singular values <= cutoff * sigma_max are discarded.
  double cutoff = 0.0;
  /// Keep exactly-zero singular values (and their singular vectors).
  bool keep_null = false;
};

/// Which factor carries the flux after a split.
enum class FluxSide { Left, Right };

struct SvdSplit {
  BlockTensor u;   ///< left-group legs + bond; left isometry
  BlockTensor vh;  ///< bond + remaining legs; right isometry
  ChargedIndex bond;  ///< bond index as seen by u
  std::map<Charge, std::vector<double>> singular_values;  ///< kept values per bond charge
  double truncation_error = 0.0;  ///< sum of discarded sigma^2
  std::size_t discarded = 0;
};

/// Multiply a tensor along `leg` by per-sector diagonal weights (bond singular values).
inline void scale_leg(BlockTensor& t, std::size_t leg, const std::map<Charge, std::vector<double>>& w) {
  BlockTensor out = t.zeros_like();
  for (const auto& [key, data] : t.blocks()) {
    const auto& s = w.at(t.leg(leg).charge(static_cast<std::size_t>(key[leg])));
    const auto shape = t.block_shape(key);
    const auto st = dense::strides(shape);
    BlockTensor::Data d = data;
    for (std::size_t e = 0; e < d.size(); ++e) d[e] *= s[(e / st[leg]) % shape[leg]];
    out.set_block(key, std::move(d));
  }
  t = std::move(out);
}

/// Split `t` across the cut (left_legs | remaining legs). For each bond charge q
/// the sector matricization is decomposed with a dense SVD, then a single global
/// ranking over all sectors keeps at most chi_max values. Ties at the boundary
/// (within 1e-14) favour the lexicographically smaller bond charge.
///
/// The bond leg has direction `bond_on_u` on U and the opposite on Vh.
/// U never carries flux when flux_side == Right; Vh never does when Left.
inline SvdSplit svd_split(const BlockTensor& t, std::span<const std::size_t> left_legs,
                          const Truncation& trunc = {}, FluxSide flux_side = FluxSide::Right,
                          Direction bond_on_u = Direction::In) {
  detail::require(trunc.chi_max >= 1, "chi_max must be at least 1");
  detail::require(!left_legs.empty() && left_legs.size() < t.rank(),
                  "left group must be a proper nonempty subset of the legs");
  std::vector<bool> in_left(t.rank(), false);
  for (auto l : left_legs) {
    detail::require(l < t.rank() && !in_left[l], "invalid left group");
    in_left[l] = true;
  }
  std::vector<std::size_t> right_legs;
  for (std::size_t k = 0; k < t.rank(); ++k)
    if (!in_left[k]) right_legs.push_back(k);
  std::vector<std::size_t> perm(left_legs.begin(), left_legs.end());
  perm.insert(perm.end(), right_legs.begin(), right_legs.end());

  const std::size_t m = t.flux().size();
  const Charge u_flux = flux_side == FluxSide::Left ? t.flux() : Charge::zero(m);

  // Bond charge seen by U: u_flux = div(left legs) + sign(bond_on_u) * q.
  auto bond_charge = [&](const BlockTensor::Key& key) {
    Charge d = Charge::zero(m);
    for (auto l : left_legs) {
      const Charge& c = t.leg(l).charge(static_cast<std::size_t>(key[l]));
      d = t.leg(l).direction() == Direction::Out ? d + c : d - c;
    }
    return bond_on_u == Direction::Out ? u_flux - d : d - u_flux;
  };

  struct SectorMatrix {
    std::map<BlockTensor::Key, std::size_t> row_off, col_off;
    std::size_t rows = 0, cols = 0;
    std::vector<const std::pair<const BlockTensor::Key, BlockTensor::Data>*> blocks;
  };
  std::map<Charge, SectorMatrix> sectors;
  for (const auto& entry : t.blocks()) {
    const auto& key = entry.first;
    auto& sm = sectors[bond_charge(key)];
    const auto lk = detail::sub_key(key, left_legs);
    const auto rk = detail::sub_key(key, right_legs);
    if (!sm.row_off.count(lk)) sm.row_off[lk] = 0;
    if (!sm.col_off.count(rk)) sm.col_off[rk] = 0;
    sm.blocks.push_back(&entry);
  }
  detail::require(!sectors.empty(), "svd_split of an empty tensor");

  struct Decomp {
    Eigen::MatrixXd U, V;
    Eigen::VectorXd S;
  };
  std::map<Charge, Decomp> decomps;
  struct Candidate {
    double sigma;
    const Charge* q;
    std::size_t k;
  };
  std::vector<Candidate> cands;

  for (auto& [q, sm] : sectors) {
    // Offsets follow the lexicographic order of the sub-keys.
    for (auto& [lk, off] : sm.row_off) {
      BlockTensor::Key full(t.rank(), 0);
      for (std::size_t k = 0; k < left_legs.size(); ++k) full[left_legs[k]] = lk[k];
      off = sm.rows;
      sm.rows += detail::product_of_dims(t, full, left_legs);
    }
    for (auto& [rk, off] : sm.col_off) {
      BlockTensor::Key full(t.rank(), 0);
      for (std::size_t k = 0; k < right_legs.size(); ++k) full[right_legs[k]] = rk[k];
      off = sm.cols;
      sm.cols += detail::product_of_dims(t, full, right_legs);
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sm.rows), static_cast<Eigen::Index>(sm.cols));
    for (const auto* entry : sm.blocks) {
      const auto& key = entry->first;
      const auto p = dense::permute(entry->second, t.block_shape(key), perm);
      const std::size_t r0 = sm.row_off.at(detail::sub_key(key, left_legs));
      const std::size_t c0 = sm.col_off.at(detail::sub_key(key, right_legs));
      const std::size_t nr = detail::product_of_dims(t, key, left_legs);
      const std::size_t nc = detail::product_of_dims(t, key, right_legs);
      for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j)
          M(static_cast<Eigen::Index>(r0 + i), static_cast<Eigen::Index>(c0 + j)) = p[i * nc + j];
    }
    Decomp d;
    if (M.rows() <= 16 && M.cols() <= 16) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
      d.U = svd.matrixU();
      d.V = svd.matrixV();
      d.S = svd.singularValues();
    } else {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
      d.U = svd.matrixU();
      d.V = svd.matrixV();
      d.S = svd.singularValues();
    }
    auto [it, ok] = decomps.emplace(q, std::move(d));
    for (Eigen::Index k = 0; k < it->second.S.size(); ++k)
      cands.push_back({it->second.S(k), &it->first, static_cast<std::size_t>(k)});
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.sigma != b.sigma) return a.sigma > b.sigma;
    if (*a.q != *b.q) return *a.q < *b.q;
    return a.k < b.k;
  });
  const double smax = cands.empty() ? 0.0 : cands.front().sigma;
  std::vector<Candidate> admissible, dropped;
  for (const auto& c : cands) {
    const bool keep = trunc.keep_null ? (trunc.cutoff <= 0.0 || c.sigma > trunc.cutoff * smax)
                                      : (c.sigma > trunc.cutoff * smax && c.sigma > 0.0);
    (keep ? admissible : dropped).push_back(c);
  }
  std::vector<Candidate> kept;
  if (admissible.size() <= trunc.chi_max) {
    kept = admissible;
  } else {
    constexpr double kTieTol = 1e-14;
    const double boundary = admissible[trunc.chi_max - 1].sigma;
    std::vector<Candidate> group;
    for (const auto& c : admissible) {
      if (c.sigma > boundary + kTieTol) kept.push_back(c);
      else if (c.sigma >= boundary - kTieTol) group.push_back(c);
      else dropped.push_back(c);
    }
    std::sort(group.begin(), group.end(), [](const Candidate& a, const Candidate& b) {
      if (*a.q != *b.q) return *a.q < *b.q;
      return a.k < b.k;
    });
    const std::size_t take = trunc.chi_max - kept.size();
    for (std::size_t g = 0; g < group.size(); ++g) (g < take ? kept : dropped).push_back(group[g]);
  }
  if (kept.empty()) throw NumericalError("svd_split: every singular value was discarded (zero tensor)");

  SvdSplit out;
  for (const auto& c : dropped) out.truncation_error += c.sigma * c.sigma;
  out.discarded = dropped.size();

  std::map<Charge, std::size_t> kept_count;
  for (const auto& c : kept) kept_count[*c.q] = std::max(kept_count[*c.q], c.k + 1);
  std::vector<Sector> bond_sectors;
  for (const auto& [q, n] : kept_count) bond_sectors.push_back({q, n});
  out.bond = ChargedIndex(bond_sectors, bond_on_u);

  std::vector<ChargedIndex> u_legs;
  for (auto l : left_legs) u_legs.push_back(t.leg(l));
  u_legs.push_back(out.bond);
  std::vector<ChargedIndex> v_legs{out.bond.reversed()};
  for (auto l : right_legs) v_legs.push_back(t.leg(l));
  const Charge v_flux = flux_side == FluxSide::Right ? t.flux() : Charge::zero(m);
  out.u = BlockTensor(std::move(u_legs), u_flux);
  out.vh = BlockTensor(std::move(v_legs), v_flux);

  for (const auto& [q, n] : kept_count) {
    const auto& sm = sectors.at(q);
    const auto& d = decomps.at(q);
    const int bpos = static_cast<int>(*out.bond.find(q));
    auto& sv = out.singular_values[q];
    for (std::size_t k = 0; k < n; ++k) sv.push_back(d.S(static_cast<Eigen::Index>(k)));
    for (const auto& [lk, r0] : sm.row_off) {
      BlockTensor::Key key = lk;
      key.push_back(bpos);
      BlockTensor::Key full(t.rank(), 0);
      for (std::size_t k = 0; k < left_legs.size(); ++k) full[left_legs[k]] = lk[k];
      const std::size_t nr = detail::product_of_dims(t, full, left_legs);
      BlockTensor::Data data(nr * n);
      for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t k = 0; k < n; ++k)
          data[i * n + k] = d.U(static_cast<Eigen::Index>(r0 + i), static_cast<Eigen::Index>(k));
      out.u.set_block(key, std::move(data));
    }
    for (const auto& [rk, c0] : sm.col_off) {
      BlockTensor::Key key{bpos};
      key.insert(key.end(), rk.begin(), rk.end());
      BlockTensor::Key full(t.rank(), 0);
      for (std::size_t k = 0; k < right_legs.size(); ++k) full[right_legs[k]] = rk[k];
      const std::size_t nc = detail::product_of_dims(t, full, right_legs);
      BlockTensor::Data data(n * nc);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < nc; ++j)
          data[k * nc + j] = d.V(static_cast<Eigen::Index>(c0 + j), static_cast<Eigen::Index>(k));
      out.vh.set_block(key, std::move(data));
    }
  }
  return out;
}

inline SvdSplit svd_split(const BlockTensor& t, std::initializer_list<std::size_t> left_legs,
                          const Truncation& trunc = {}, FluxSide flux_side = FluxSide::Right,
                          Direction bond_on_u = Direction::In) {
  std::vector<std::size_t> v(left_legs);
  return svd_split(t, std::span<const std::size_t>(v), trunc, flux_side, bond_on_u);
}

// ---------------------------------------------------------------------------
// Direct sum

/// Block-diagonal embedding of a and b along `summed` legs; the other legs and
/// the flux must agree. Sectors of equal charge on a summed leg merge with
/// degeneracy d_a + d_b, a's states first.
inline BlockTensor direct_sum(const BlockTensor& a, const BlockTensor& b, std::span<const std::size_t> summed) {
  detail::require(a.rank() == b.rank(), "direct_sum rank mismatch");
  detail::require(a.flux() == b.flux(), "direct_sum flux mismatch");
  std::vector<bool> is_summed(a.rank(), false);
  for (auto k : summed) {
    detail::require(k < a.rank(), "summed leg out of range");
    is_summed[k] = true;
  }
  std::vector<ChargedIndex> legs;
  // For each leg: map from the operand's sector to (new sector, offset inside it).
  std::vector<std::vector<std::pair<int, std::size_t>>> amap(a.rank()), bmap(a.rank());
  for (std::size_t k = 0; k < a.rank(); ++k) {
    const auto& la = a.leg(k);
    const auto& lb = b.leg(k);
    detail::require(la.direction() == lb.direction(), "direct_sum direction mismatch on leg " + std::to_string(k));
    if (!is_summed[k]) {
      detail::require(la.same_sectors(lb), "direct_sum: non-summed leg " + std::to_string(k) + " differs");
      legs.push_back(la);
      for (std::size_t s = 0; s < la.num_sectors(); ++s) {
        amap[k].push_back({static_cast<int>(s), 0});
        bmap[k].push_back({static_cast<int>(s), 0});
      }
      continue;
    }
    std::map<Charge, std::pair<std::size_t, std::size_t>> dims;  // charge -> (d_a, d_b)
    for (const auto& s : la.sectors()) dims[s.charge].first = s.dim;
    for (const auto& s : lb.sectors()) dims[s.charge].second = s.dim;
    std::vector<Sector> secs;
    for (const auto& [c, d] : dims) secs.push_back({c, d.first + d.second});
    ChargedIndex merged(secs, la.direction());
    for (const auto& s : la.sectors()) amap[k].push_back({static_cast<int>(*merged.find(s.charge)), 0});
    for (const auto& s : lb.sectors())
      bmap[k].push_back({static_cast<int>(*merged.find(s.charge)), dims.at(s.charge).first});
    legs.push_back(std::move(merged));
  }
  BlockTensor out(std::move(legs), a.flux());
  auto place = [&](const BlockTensor& src, const std::vector<std::vector<std::pair<int, std::size_t>>>& map) {
    for (const auto& [key, data] : src.blocks()) {
      BlockTensor::Key nk(key.size());
      std::vector<std::size_t> off(key.size());
      for (std::size_t k = 0; k < key.size(); ++k) {
        nk[k] = map[k][static_cast<std::size_t>(key[k])].first;
        off[k] = map[k][static_cast<std::size_t>(key[k])].second;
      }
      auto& dst = out.block(nk);
      dense::embed(dst, out.block_shape(nk), data, src.block_shape(key), off);
    }
  };
  place(a, amap);
  place(b, bmap);
  return out;
}

inline BlockTensor direct_sum(const BlockTensor& a, const BlockTensor& b, std::initializer_list<std::size_t> summed) {
  std::vector<std::size_t> v(summed);
  return direct_sum(a, b, std::span<const std::size_t>(v));
}

}  // namespace stnbm
