#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/block_tensor.hpp"
#include "stnbm/errors.hpp"
#include "stnbm/symmps.hpp"

namespace stnbm {

/// w_k proportional to exp(-C_k / T), normalized, with a max shift.
inline std::vector<double> softmax_weights(const std::vector<double>& costs, double temperature) {
  if (!(temperature > 0.0)) detail::fail("temperature must be positive, got " + std::to_string(temperature));
  if (costs.empty()) return {};
  const double cmin = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double s = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) s += w[k] = std::exp(-(costs[k] - cmin) / temperature);
  for (double& v : w) v /= s;
  return w;
}

/// Empirical distribution over distinct bitstrings; weights sum to 1.
class WeightedTrainingSet {
 public:
  WeightedTrainingSet() = default;

  /// Duplicates are merged and their weights added; the total is normalized to 1.
  WeightedTrainingSet(const std::vector<Bitstring>& xs, const std::vector<double>& weights,
                      std::optional<double> temperature = std::nullopt)
      : temperature_(temperature) {
    detail::require(xs.size() == weights.size(), "bitstring and weight counts differ");
    detail::require(!xs.empty(), "training set is empty");
    std::map<Bitstring, double> acc;
    double total = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!(weights[k] > 0.0) || !std::isfinite(weights[k]))
        detail::fail("training weight " + std::to_string(k) + " must be positive and finite");
      if (k > 0 && xs[k].size() != xs[0].size()) detail::fail("training bitstrings differ in length");
      acc[xs[k]] += weights[k];
      total += weights[k];
    }
    for (const auto& [x, w] : acc) items_.emplace_back(x, w / total);
  }

  /// Every occurrence gets equal weight (so repeated strings count by frequency).
  static WeightedTrainingSet uniform(const std::vector<Bitstring>& xs) {
    return WeightedTrainingSet(xs, std::vector<double>(xs.size(), 1.0));
  }
  static WeightedTrainingSet from_costs(const std::vector<Bitstring>& xs, const std::vector<double>& costs,
                                        double temperature) {
    return WeightedTrainingSet(xs, softmax_weights(costs, temperature), temperature);
  }

  std::size_t size() const { return items_.size(); }
  const std::vector<std::pair<Bitstring, double>>& items() const { return items_; }
  std::optional<double> temperature() const { return temperature_; }

  /// Shannon entropy of the weights.
  double entropy() const {
    double h = 0.0;
    for (const auto& [x, w] : items_) h -= w * std::log(w);
    return h;
  }

 private:
  std::vector<std::pair<Bitstring, double>> items_;
  std::optional<double> temperature_;
};

struct TrainConfig {
  double learning_rate = 0.02;
  std::size_t chi_max = 32;
  std::size_t sweeps = 1;
  double cutoff = 0.0;
  std::size_t inner_steps = 1;

  void validate() const {
    detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning rate must be non-negative");
    detail::require(chi_max >= 1, "chi_max must be positive");
    detail::require(sweeps >= 1, "sweeps must be positive");
    detail::require(cutoff >= 0.0, "cutoff must be non-negative");
    detail::require(inner_steps >= 1, "inner_steps must be positive");
  }
};

/// -sum_x w(x) log(Psi(x)^2 / Z).
inline double nll(const SymMPS& mps, const WeightedTrainingSet& ts) {
  const double z = mps.contracted_norm_squared();
  if (!(z > 0.0)) throw NumericalError("model has zero norm");
  double l = 0.0;
  for (const auto& [x, w] : ts.items()) {
    const double a = mps.amplitude(x);
    if (a == 0.0) throw NumericalError("training bitstring " + x.str() + " has zero amplitude under the model");
    l -= w * std::log(a * a / z);
  }
  return l;
}

namespace detail {

/// NLL, or +infinity when some item has zero amplitude (e.g. after truncation).
inline double nll_or_inf(const SymMPS& mps, const WeightedTrainingSet& ts) {
  try {
    return nll(mps, ts);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Partial contraction of a chain with the bits of one item fixed: a sector
/// position on a link and a vector over that sector's degeneracy.
struct Env {
  int sector = -1;  ///< -1: the item has no path through this link
  std::vector<double> v;
  bool alive() const { return sector >= 0; }
};

/// Env after site i from the env before it.
inline Env extend_left(const SymMPS& mps, std::size_t i, const Env& e, int bit) {
  if (!e.alive()) return {};
  auto st = mps.transition(i, e.sector, bit);
  if (!st) return {};
  Env out{st->r, std::vector<double>(st->dr, 0.0)};
  for (std::size_t a = 0; a < st->dl; ++a) {
    if (e.v[a] == 0.0) continue;
    const double* row = st->data + (a * st->ds + st->offset) * st->dr;
    for (std::size_t c = 0; c < st->dr; ++c) out.v[c] += e.v[a] * row[c];
  }
  return out;
}

/// Env before site i (on its left link) from the env after it.
inline Env extend_right(const SymMPS& mps, std::size_t i, const Env& e, int bit) {
  if (!e.alive()) return {};
  const auto& t = mps.tensor(i);
  const auto [s, off] = bit_slot(t.leg(1), mps.site_column(i), bit);
  // l = r + flux - s
  const Charge need = t.leg(2).charge(static_cast<std::size_t>(e.sector)) + t.flux() -
                      t.leg(1).charge(static_cast<std::size_t>(s));
  const auto l = t.leg(0).find(need);
  if (!l) return {};
  const auto* d = t.find({static_cast<int>(*l), s, e.sector});
  if (!d) return {};
  const std::size_t dl = t.leg(0).dim(*l), ds = t.leg(1).dim(static_cast<std::size_t>(s)),
                    dr = t.leg(2).dim(static_cast<std::size_t>(e.sector));
  Env out{static_cast<int>(*l), std::vector<double>(dl, 0.0)};
  for (std::size_t a = 0; a < dl; ++a) {
    const double* row = d->data() + (a * ds + off) * dr;
    double acc = 0.0;
    for (std::size_t c = 0; c < dr; ++c) acc += row[c] * e.v[c];
    out.v[a] = acc;
  }
  return out;
}

/// Envs per link for every item: left[j][k] covers sites 0..j-1, right[j][k]
/// covers sites j..N-1 (so both live on link j).
struct EnvCache {
  std::vector<std::vector<Env>> left, right;

  EnvCache(const SymMPS& mps, const WeightedTrainingSet& ts)
      : left(mps.size() + 1, std::vector<Env>(ts.size())), right(mps.size() + 1, std::vector<Env>(ts.size())) {
    const std::size_t n = mps.size();
    for (std::size_t k = 0; k < ts.size(); ++k) {
      left[0][k] = Env{0, {1.0}};
      right[n][k] = Env{0, {1.0}};
    }
    for (std::size_t j = 0; j < n; ++j) update_left(mps, ts, j);
    for (std::size_t j = n; j-- > 0;) update_right(mps, ts, j);
  }
  /// Recompute left[j + 1] from left[j] and site j.
  void update_left(const SymMPS& mps, const WeightedTrainingSet& ts, std::size_t j) {
    for (std::size_t k = 0; k < ts.size(); ++k)
      left[j + 1][k] = extend_left(mps, j, left[j][k], ts.items()[k].first[j]);
  }
  /// Recompute right[j] from right[j + 1] and site j.
  void update_right(const SymMPS& mps, const WeightedTrainingSet& ts, std::size_t j) {
    for (std::size_t k = 0; k < ts.size(); ++k)
      right[j][k] = extend_right(mps, j, right[j + 1][k], ts.items()[k].first[j]);
  }
};

/// Block of the merged tensor that item x selects, with its site offsets.
inline std::optional<BlockTensor::Key> merged_key(const BlockTensor& theta, const SymMPS& mps, std::size_t i,
                                                  const Env& l, const Env& r, const Bitstring& x,
                                                  std::size_t& off_i, std::size_t& off_j) {
  if (!l.alive() || !r.alive()) return std::nullopt;
  const auto [si, oi] = bit_slot(theta.leg(1), mps.site_column(i), x[i]);
  const auto [sj, oj] = bit_slot(theta.leg(2), mps.site_column(i + 1), x[i + 1]);
  off_i = oi;
  off_j = oj;
  BlockTensor::Key key{l.sector, si, sj, r.sector};
  if (!theta.allowed(key) || !theta.find(key)) return std::nullopt;
  return key;
}

/// Psi(x) = L . Theta[., s_i, s_j, .] . R
inline double merged_amplitude(const BlockTensor& theta, const BlockTensor::Key& key, std::size_t oi,
                               std::size_t oj, const Env& l, const Env& r) {
  const auto& d = *theta.find(key);
  const auto sh = theta.block_shape(key);
  double psi = 0.0;
  for (std::size_t a = 0; a < sh[0]; ++a) {
    if (l.v[a] == 0.0) continue;
    const double* row = d.data() + ((a * sh[1] + oi) * sh[2] + oj) * sh[3];
    double acc = 0.0;
    for (std::size_t c = 0; c < sh[3]; ++c) acc += row[c] * r.v[c];
    psi += l.v[a] * acc;
  }
  return psi;
}

/// dNLL/dTheta = 2 Theta / Z - 2 sum_x w(x) (L_x (x) e_{x_i} (x) e_{x_j} (x) R_x) / Psi(x),
/// with Z = |Theta|^2 (canonical form, center on the pair). Items with zero
/// amplitude contribute nothing.
inline BlockTensor merged_gradient(const BlockTensor& theta, const SymMPS& mps, std::size_t i,
                                   const WeightedTrainingSet& ts, const std::vector<Env>& lenv,
                                   const std::vector<Env>& renv) {
  const double z = theta.norm_squared();
  if (!(z > 0.0)) throw NumericalError("merged tensor has zero norm");
  BlockTensor g = theta;
  g.scale(2.0 / z);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto& [x, w] = ts.items()[k];
    std::size_t oi = 0, oj = 0;
    auto key = merged_key(theta, mps, i, lenv[k], renv[k], x, oi, oj);
    if (!key) continue;
    const double psi = merged_amplitude(theta, *key, oi, oj, lenv[k], renv[k]);
    if (psi == 0.0) continue;
    const double f = 2.0 * w / psi;
    auto& gd = g.block(*key);
    const auto sh = g.block_shape(*key);
    const auto& L = lenv[k].v;
    const auto& R = renv[k].v;
    for (std::size_t a = 0; a < sh[0]; ++a) {
      if (L[a] == 0.0) continue;
      double* row = gd.data() + ((a * sh[1] + oi) * sh[2] + oj) * sh[3];
      for (std::size_t c = 0; c < sh[3]; ++c) row[c] -= f * L[a] * R[c];
    }
  }
  return g;
}

}  // namespace detail

/// Gradient of the NLL with respect to the merged tensor of sites (i, i+1).
/// The canonical center must be at i or i+1.
inline BlockTensor gradient_two_site(const SymMPS& mps, std::size_t i, const WeightedTrainingSet& ts) {
  detail::require(i + 1 < mps.size(), "pair (i, i+1) out of range");
  detail::require(mps.center() == i || mps.center() == i + 1, "canonical center must lie on the merged pair");
  const detail::EnvCache env(mps, ts);
  const BlockTensor theta = merge_two_site(mps.tensor(i), mps.tensor(i + 1));
  return detail::merged_gradient(theta, mps, i, ts, env.left[i], env.right[i + 2]);
}

struct SweepResult {
  double nll = 0.0;
  double truncation_error = 0.0;  ///< summed over all splits of the sweep
};

namespace detail {

/// Update the pair (i, i+1) and split it, leaving the center at i+1 when
/// `rightward`, else at i.
inline double update_pair(SymMPS& mps, std::size_t i, const WeightedTrainingSet& ts, const TrainConfig& cfg,
                          const EnvCache& env, bool rightward) {
  BlockTensor theta = merge_two_site(mps.tensor(i), mps.tensor(i + 1));
  for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
    if (cfg.learning_rate > 0.0) {
      const BlockTensor g = merged_gradient(theta, mps, i, ts, env.left[i], env.right[i + 2]);
      theta.axpy(-cfg.learning_rate, g);
    }
  }
  const double nrm = theta.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("two-site update produced a zero or non-finite tensor");
  theta.scale(1.0 / nrm);
  Truncation tr;
  tr.chi_max = cfg.chi_max;
  tr.cutoff = cfg.cutoff;
  auto sp = svd_split(theta, {0, 1}, tr, rightward ? FluxSide::Right : FluxSide::Left, Direction::In);
  if (rightward) scale_leg(sp.vh, 0, sp.singular_values);
  else scale_leg(sp.u, 2, sp.singular_values);
  // Renormalize after truncation so the center keeps unit norm.
  BlockTensor& c = rightward ? sp.vh : sp.u;
  const double cn = c.norm();
  c.scale(1.0 / cn);
  mps.set_pair(i, std::move(sp.u), std::move(sp.vh), rightward ? i + 1 : i);
  return sp.truncation_error;
}

}  // namespace detail

/// One sweep: a pass of two-site updates from the end nearest the center to the
/// other end and back. Returns the NLL after the sweep (+inf if truncation
/// removed a training item from the support).
inline SweepResult sweep(SymMPS& mps, const WeightedTrainingSet& ts, const TrainConfig& cfg) {
  cfg.validate();
  SweepResult res;
  const std::size_t n = mps.size();
  if (n < 2) {
    res.nll = detail::nll_or_inf(mps, ts);
    return res;
  }
  for (const auto& [x, w] : ts.items())
    if (x.size() != n) detail::fail("training bitstring length does not match the model");
  const bool start_right = mps.center() >= n / 2;
  mps.shift_center(start_right ? n - 1 : 0);
  detail::EnvCache env(mps, ts);
  auto right_to_left = [&] {
    for (std::size_t i = n - 1; i-- > 0;) {
      res.truncation_error += detail::update_pair(mps, i, ts, cfg, env, false);
      env.update_right(mps, ts, i + 1);
    }
  };
  auto left_to_right = [&] {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      res.truncation_error += detail::update_pair(mps, i, ts, cfg, env, true);
      env.update_left(mps, ts, i);
    }
  };
  if (start_right) {
    right_to_left();
    left_to_right();
  } else {
    left_to_right();
    right_to_left();
  }
  res.nll = detail::nll_or_inf(mps, ts);
  return res;
}

/// cfg.sweeps sweeps; returns the NLL after each one.
inline std::vector<double> train(SymMPS& mps, const WeightedTrainingSet& ts, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<double> trace;
  for (std::size_t s = 0; s < cfg.sweeps; ++s) trace.push_back(sweep(mps, ts, cfg).nll);
  return trace;
}

}  // namespace stnbm
