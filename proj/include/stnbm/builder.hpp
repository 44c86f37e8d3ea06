#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/block_tensor.hpp"
#include "stnbm/charges.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/errors.hpp"
#include "stnbm/symmps.hpp"

namespace stnbm {

/// Partial sums n_{i,R} = sum_{j<=i} x_j A_j after sites 0..N-2 (N-1 charges).
/// The sum after the last site equals b because x is checked to be valid.
inline std::vector<Charge> link_charges_for_bitstring(const ConstraintSystem& cs, const Bitstring& x) {
  if (auto row = cs.violated_row(x))
    detail::fail("bitstring " + x.str() + " violates row " + std::to_string(*row) + " of A");
  std::vector<Charge> out;
  Charge c = Charge::zero(cs.num_constraints());
  for (std::size_t i = 0; i + 1 < cs.num_sites(); ++i) {
    if (x[i]) c += cs.column(i);
    out.push_back(c);
  }
  return out;
}

/// Charge structure of a model before any numbers are attached: the admitted
/// (left link charge, bit) pairs of each site, in the partial-sum frame.
/// links[j] is the set of charges after j sites, links[0] = {0}, links[N] = {b}.
struct Skeleton {
  std::vector<std::set<Charge>> links;
  std::vector<std::set<std::pair<Charge, int>>> steps;
};

namespace detail {

inline std::vector<Charge> columns(const ConstraintSystem& cs) {
  std::vector<Charge> c;
  for (std::size_t i = 0; i < cs.num_sites(); ++i) c.push_back(cs.column(i));
  return c;
}

inline Charge step_target(const Charge& l, int bit, const Charge& col) { return bit ? l + col : l; }

/// Keep only steps on some path from 0 at the left end to b at the right end.
inline Skeleton prune(const std::vector<Charge>& cols, const Charge& flux, Skeleton sk) {
  const std::size_t n = cols.size();
  std::vector<std::set<Charge>> fwd(n + 1), bwd(n + 1);
  fwd[0] = {Charge::zero(flux.size())};
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [l, bit] : sk.steps[i])
      if (fwd[i].count(l)) fwd[i + 1].insert(step_target(l, bit, cols[i]));
  bwd[n] = {flux};
  for (std::size_t i = n; i-- > 0;)
    for (const auto& [l, bit] : sk.steps[i])
      if (bwd[i + 1].count(step_target(l, bit, cols[i]))) bwd[i].insert(l);
  Skeleton out;
  out.links.resize(n + 1);
  out.steps.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [l, bit] : sk.steps[i]) {
      const Charge r = step_target(l, bit, cols[i]);
      if (fwd[i].count(l) && bwd[i + 1].count(r)) {
        out.steps[i].insert({l, bit});
        out.links[i].insert(l);
        out.links[i + 1].insert(r);
      }
    }
  if (out.links[n].empty()) fail("no bitstring is consistent with the admitted charge structure");
  return out;
}

/// Degeneracy-d blocks for every step of the skeleton with the center and flux
/// at the last site. `deg(j, q)` gives the degeneracy of charge q on link j;
/// `value()` fills every admitted entry.
inline SymMPS materialize(const std::vector<Charge>& cols, const Charge& flux, const Skeleton& sk,
                          const std::function<std::size_t(std::size_t, const Charge&)>& deg,
                          const std::function<double()>& value) {
  const std::size_t n = cols.size();
  const std::size_t m = flux.size();
  auto link_index = [&](std::size_t j, Direction d) {
    if (j == 0) return ChargedIndex::trivial(m, 1, d);
    if (j == n) return ChargedIndex::trivial(m, 1, d);
    std::vector<Sector> secs;
    for (const auto& q : sk.links[j]) secs.push_back({q, deg(j, q)});
    return ChargedIndex(std::move(secs), d);
  };
  std::vector<BlockTensor> ts;
  for (std::size_t i = 0; i < n; ++i) {
    const ChargedIndex left = link_index(i, Direction::Out);
    const ChargedIndex right = link_index(i + 1, Direction::In);
    const ChargedIndex site = site_index(cols[i]);
    BlockTensor t({left, site, right}, i + 1 == n ? flux : Charge::zero(m));
    for (const auto& [l, bit] : sk.steps[i]) {
      const Charge r = step_target(l, bit, cols[i]);
      const int lp = static_cast<int>(*left.find(i == 0 ? Charge::zero(m) : l));
      const int rp = static_cast<int>(*right.find(i + 1 == n ? Charge::zero(m) : r));
      const auto [sp, off] = bit_slot(site, cols[i], bit);
      auto& blk = t.block({lp, sp, rp});
      const std::size_t dl = left.dim(static_cast<std::size_t>(lp));
      const std::size_t ds = site.dim(static_cast<std::size_t>(sp));
      const std::size_t dr = right.dim(static_cast<std::size_t>(rp));
      for (std::size_t a = 0; a < dl; ++a)
        for (std::size_t c = 0; c < dr; ++c) blk[(a * ds + off) * dr + c] = value();
    }
    ts.push_back(std::move(t));
  }
  return SymMPS(cols, flux, std::move(ts), n - 1);
}

inline SymMPS uniform_from_skeleton(const ConstraintSystem& cs, const Skeleton& sk) {
  SymMPS m = materialize(columns(cs), cs.flux(), sk, [](std::size_t, const Charge&) { return std::size_t{1}; },
                         [] { return 1.0; });
  m.canonicalize();
  m.normalize();
  return m;
}

/// Skeleton admitting every step whose endpoints lie in the given link sets.
inline Skeleton skeleton_from_link_sets(const ConstraintSystem& cs, const std::vector<std::set<Charge>>& links) {
  const std::size_t n = cs.num_sites();
  Skeleton sk;
  sk.links = links;
  sk.steps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Charge col = cs.column(i);
    for (const auto& l : links[i])
      for (int bit = 0; bit < 2; ++bit)
        if (links[i + 1].count(step_target(l, bit, col))) sk.steps[i].insert({l, bit});
  }
  return prune(columns(cs), cs.flux(), std::move(sk));
}

inline void require_seeds(const SeedSet& seeds, const ConstraintSystem& cs) {
  require(!seeds.empty(), "empty seed set");
  for (const auto& x : seeds)
    require(x.size() == cs.num_sites(), "seed length does not match the constraint system");
}

}  // namespace detail

/// Steps observed along the charge paths of the seeds.
inline Skeleton skeleton_method1(const ConstraintSystem& cs, const SeedSet& seeds) {
  detail::require_seeds(seeds, cs);
  const std::size_t n = cs.num_sites();
  const auto cols = detail::columns(cs);
  Skeleton sk;
  sk.links.resize(n + 1);
  sk.steps.resize(n);
  for (const auto& x : seeds) {
    if (auto row = cs.violated_row(x))
      detail::fail("seed " + x.str() + " violates row " + std::to_string(*row) + " of A");
    Charge c = Charge::zero(cs.num_constraints());
    for (std::size_t i = 0; i < n; ++i) {
      sk.steps[i].insert({c, x[i]});
      if (x[i]) c += cols[i];
    }
  }
  return detail::prune(cols, cs.flux(), std::move(sk));
}

/// Link charge sets collected from the seeds; every step between them is admitted.
inline Skeleton skeleton_method2(const ConstraintSystem& cs, const SeedSet& seeds) {
  detail::require_seeds(seeds, cs);
  const std::size_t n = cs.num_sites();
  std::vector<std::set<Charge>> links(n + 1);
  links[0].insert(Charge::zero(cs.num_constraints()));
  links[n].insert(cs.flux());
  for (const auto& x : seeds) {
    const auto lc = link_charges_for_bitstring(cs, x);
    for (std::size_t j = 0; j < lc.size(); ++j) links[j + 1].insert(lc[j]);
  }
  return detail::skeleton_from_link_sets(cs, links);
}

/// Model supporting exactly the bitstrings whose charge paths only use observed
/// (link, bit, link) triples, filled uniformly.
inline SymMPS embed_method1(const ConstraintSystem& cs, const SeedSet& seeds) {
  return detail::uniform_from_skeleton(cs, skeleton_method1(cs, seeds));
}

/// Model supporting every valid bitstring whose link charges were all observed
/// in some seed, filled uniformly.
inline SymMPS embed_method2(const ConstraintSystem& cs, const SeedSet& seeds) {
  return detail::uniform_from_skeleton(cs, skeleton_method2(cs, seeds));
}

enum class EmbedMethod { Method1 = 1, Method2 = 2 };

inline SymMPS embed(const ConstraintSystem& cs, const SeedSet& seeds, EmbedMethod method = EmbedMethod::Method2) {
  return method == EmbedMethod::Method1 ? embed_method1(cs, seeds) : embed_method2(cs, seeds);
}

/// Link charges of the exact cardinality model: after j sites the count c of
/// ones satisfies max(0, kappa - (N - j)) <= c <= min(j, kappa).
inline std::vector<std::set<Charge>> cardinality_link_sets(std::size_t n, std::int64_t kappa) {
  std::vector<std::set<Charge>> links(n + 1);
  const auto nn = static_cast<std::int64_t>(n);
  for (std::int64_t j = 0; j <= nn; ++j)
    for (std::int64_t c = std::max<std::int64_t>(0, kappa - (nn - j)); c <= std::min(j, kappa); ++c)
      links[static_cast<std::size_t>(j)].insert(Charge{c});
  return links;
}

/// Exact valid-space model for sum_i x_i = kappa, uniform over all C(N, kappa) strings.
inline SymMPS build_cardinality_mps(std::size_t n, std::int64_t kappa) {
  detail::require(n >= 1, "N must be positive");
  if (kappa < 0 || kappa > static_cast<std::int64_t>(n))
    detail::fail("kappa = " + std::to_string(kappa) + " out of range [0, " + std::to_string(n) + "]");
  const auto cs = ConstraintSystem::cardinality(n, kappa);
  return detail::uniform_from_skeleton(cs, detail::skeleton_from_link_sets(cs, cardinality_link_sets(n, kappa)));
}

/// One row per group (sum over the group = 1) plus, when some sites are in no
/// group, one extra row forcing those sites to 0.
inline ConstraintSystem assignment_constraints(std::size_t n, const std::vector<std::vector<std::size_t>>& groups) {
  detail::require(n >= 1, "N must be positive");
  detail::require(!groups.empty(), "at least one group is required");
  std::vector<int> owner(n, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    detail::require(!groups[g].empty(), "group " + std::to_string(g) + " is empty");
    for (auto i : groups[g]) {
      detail::require(i < n, "site " + std::to_string(i) + " out of range");
      if (owner[i] >= 0)
        detail::fail("site " + std::to_string(i) + " belongs to groups " + std::to_string(owner[i]) + " and " +
                     std::to_string(g));
      owner[i] = static_cast<int>(g);
    }
  }
  const bool extra = std::count(owner.begin(), owner.end(), -1) > 0;
  const std::size_t m = groups.size() + (extra ? 1 : 0);
  std::vector<std::vector<std::int64_t>> A(m, std::vector<std::int64_t>(n, 0));
  std::vector<std::int64_t> b(m, 1);
  for (std::size_t i = 0; i < n; ++i) A[owner[i] >= 0 ? static_cast<std::size_t>(owner[i]) : m - 1][i] = 1;
  if (extra) b[m - 1] = 0;
  return ConstraintSystem(std::move(A), std::move(b));
}

/// Exact model for "exactly one 1 per group, 0 elsewhere". Link j carries, per
/// group, 0 before the group starts, 1 after it ends, and {0, 1} in between.
inline SymMPS build_assignment_mps(std::size_t n, const std::vector<std::vector<std::size_t>>& groups) {
  const auto cs = assignment_constraints(n, groups);
  const std::size_t m = cs.num_constraints();
  std::vector<std::set<Charge>> links(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    std::vector<std::vector<std::int64_t>> choices(m);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto [lo, hi] = std::minmax_element(groups[g].begin(), groups[g].end());
      if (j <= *lo) choices[g] = {0};
      else if (j > *hi) choices[g] = {1};
      else choices[g] = {0, 1};
    }
    if (m > groups.size()) choices[m - 1] = {0};
    std::vector<std::int64_t> cur(m);
    std::function<void(std::size_t)> rec = [&](std::size_t g) {
      if (g == m) {
        links[j].insert(Charge(cur));
        return;
      }
      for (auto v : choices[g]) {
        cur[g] = v;
        rec(g + 1);
      }
    };
    rec(0);
  }
  return detail::uniform_from_skeleton(cs, detail::skeleton_from_link_sets(cs, links));
}

/// Skeleton of an existing model: its link charges and nonzero (link, bit) slices.
inline Skeleton skeleton_of(const SymMPS& model) {
  SymMPS mps = model;
  mps.shift_center(mps.size() - 1);
  const std::size_t n = mps.size();
  Skeleton sk;
  sk.links.resize(n + 1);
  sk.steps.resize(n);
  const Charge zero = Charge::zero(mps.num_constraints());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = mps.tensor(i);
    for (std::size_t l = 0; l < t.leg(0).num_sectors(); ++l)
      for (int bit = 0; bit < 2; ++bit) {
        auto st = mps.transition(i, static_cast<int>(l), bit);
        if (!st) continue;
        bool nonzero = false;
        for (std::size_t a = 0; a < st->dl && !nonzero; ++a)
          for (std::size_t c = 0; c < st->dr && !nonzero; ++c)
            nonzero = st->data[(a * st->ds + st->offset) * st->dr + c] != 0.0;
        if (nonzero) sk.steps[i].insert({i == 0 ? zero : t.leg(0).charge(l), bit});
      }
  }
  return detail::prune(mps.site_columns(), mps.flux(), std::move(sk));
}

/// Reset a model to its degeneracy-1 skeleton with all blocks equal, then
/// canonicalize and normalize. Every supported bitstring has amplitude 1 before
/// normalization, so the result is uniform over the support.
inline SymMPS uniform_fill(const SymMPS& mps) {
  const auto sk = skeleton_of(mps);
  SymMPS m = detail::materialize(mps.site_columns(), mps.flux(), sk,
                                 [](std::size_t, const Charge&) { return std::size_t{1}; }, [] { return 1.0; });
  m.canonicalize();
  m.normalize();
  return m;
}

/// Raise every internal link sector to degeneracy min(d, capacity), where the
/// capacity is the largest rank the sector can carry given the structure on
/// either side. Existing entries are kept; new entries of existing blocks get
/// `noise` * N(0, 1). No block is added, so the support is unchanged for
/// noise = 0 and can only lose strings through exact cancellation otherwise.
template <class Rng>
SymMPS expand_degeneracy(const SymMPS& model, std::size_t d, double noise, Rng& rng) {
  detail::require(d >= 1, "degeneracy must be positive");
  detail::require(noise >= 0.0, "noise must be non-negative");
  SymMPS mps = model;
  mps.shift_center(mps.size() - 1);
  const std::size_t n = mps.size();

  // Left and right capacities per link sector (saturating path-space dimensions).
  std::vector<std::vector<std::size_t>> lcap(n + 1), rcap(n + 1);
  lcap[0] = {1};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = mps.tensor(i);
    lcap[i + 1].assign(t.leg(2).num_sectors(), 0);
    for (const auto& [key, data] : t.blocks()) {
      auto& c = lcap[i + 1][static_cast<std::size_t>(key[2])];
      c = std::min(d, c + lcap[i][static_cast<std::size_t>(key[0])] * t.leg(1).dim(static_cast<std::size_t>(key[1])));
    }
  }
  rcap[n] = {1};
  for (std::size_t i = n; i-- > 0;) {
    const auto& t = mps.tensor(i);
    rcap[i].assign(t.leg(0).num_sectors(), 0);
    for (const auto& [key, data] : t.blocks()) {
      auto& c = rcap[i][static_cast<std::size_t>(key[0])];
      c = std::min(d, c + rcap[i + 1][static_cast<std::size_t>(key[2])] * t.leg(1).dim(static_cast<std::size_t>(key[1])));
    }
  }
  auto widen = [&](const ChargedIndex& idx, std::size_t j) {
    if (j == 0 || j == n) return idx;
    std::vector<Sector> secs;
    for (std::size_t s = 0; s < idx.num_sectors(); ++s)
      secs.push_back({idx.charge(s), std::max(idx.dim(s), std::min({d, lcap[j][s], rcap[j][s]}))});
    return ChargedIndex(std::move(secs), idx.direction());
  };
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<BlockTensor> ts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = mps.tensor(i);
    BlockTensor w({widen(t.leg(0), i), t.leg(1), widen(t.leg(2), i + 1)}, t.flux());
    for (const auto& [key, data] : t.blocks()) {
      const auto old_shape = t.block_shape(key);
      const auto new_shape = w.block_shape(key);
      BlockTensor::Data nd(DenseTensor::element_count(new_shape));
      for (double& v : nd) v = noise > 0.0 ? noise * g(rng) : 0.0;
      const std::vector<std::size_t> zero_off(3, 0);
      dense::embed(nd, new_shape, data, old_shape, zero_off);
      w.set_block(key, std::move(nd));
    }
    ts.push_back(std::move(w));
  }
  SymMPS out(mps.site_columns(), mps.flux(), std::move(ts), n - 1);
  Truncation keep;
  keep.keep_null = true;
  out.canonicalize(keep);
  return out;
}

/// All partial-sum charges that lie on some path from 0 to b. The sets are
/// bounded by the range of partial sums, so this is only meant for small
/// coefficient ranges (tests and random instances).
inline std::vector<std::set<Charge>> reachable_link_sets(const ConstraintSystem& cs) {
  const std::size_t n = cs.num_sites();
  std::vector<std::set<Charge>> fwd(n + 1), bwd(n + 1), out(n + 1);
  fwd[0] = {Charge::zero(cs.num_constraints())};
  for (std::size_t i = 0; i < n; ++i) {
    const Charge col = cs.column(i);
    for (const auto& c : fwd[i]) {
      fwd[i + 1].insert(c);
      fwd[i + 1].insert(c + col);
    }
  }
  bwd[n] = {cs.flux()};
  for (std::size_t i = n; i-- > 0;) {
    const Charge col = cs.column(i);
    for (const auto& c : bwd[i + 1]) {
      bwd[i].insert(c);
      bwd[i].insert(c - col);
    }
  }
  for (std::size_t j = 0; j <= n; ++j)
    std::set_intersection(fwd[j].begin(), fwd[j].end(), bwd[j].begin(), bwd[j].end(),
                          std::inserter(out[j], out[j].begin()));
  return out;
}

/// Uniform model over every solution of A x = b, built from the reachable
/// partial sums. Same size caveat as reachable_link_sets.
inline SymMPS build_valid_space_mps(const ConstraintSystem& cs) {
  const auto sk = detail::skeleton_from_link_sets(cs, reachable_link_sets(cs));
  return detail::uniform_from_skeleton(cs, sk);
}

/// Random canonical, normalized model on the full valid space of `cs` with link
/// degeneracies drawn from [1, max_deg] and N(0, 1) entries.
template <class Rng>
SymMPS random_symmetric_mps(const ConstraintSystem& cs, std::size_t max_deg, Rng& rng) {
  detail::require(max_deg >= 1, "max_deg must be positive");
  const auto sk = detail::skeleton_from_link_sets(cs, reachable_link_sets(cs));
  std::uniform_int_distribution<std::size_t> dd(1, max_deg);
  std::map<std::pair<std::size_t, Charge>, std::size_t> degs;
  for (std::size_t j = 1; j < cs.num_sites(); ++j)
    for (const auto& q : sk.links[j]) degs[{j, q}] = dd(rng);
  std::normal_distribution<double> g(0.0, 1.0);
  SymMPS m = detail::materialize(
      detail::columns(cs), cs.flux(), sk, [&](std::size_t j, const Charge& q) { return degs.at({j, q}); },
      [&] { return g(rng); });
  m.canonicalize();
  m.normalize();
  return m;
}

}  // namespace stnbm
