#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/builder.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/errors.hpp"
#include "stnbm/sampler.hpp"
#include "stnbm/symmps.hpp"
#include "stnbm/trainer.hpp"

namespace stnbm {

/// Black-box cost over a batch: one value per bitstring, same order.
using CostFunction = std::function<std::vector<double>(const std::vector<Bitstring>&)>;

inline CostFunction pointwise(std::function<double(const Bitstring&)> f) {
  return [f = std::move(f)](const std::vector<Bitstring>& xs) {
    std::vector<double> c(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) c[k] = f(xs[k]);
    return c;
  };
}

/// Minus the largest distance j - i between two ones with only zeros between them.
inline double negative_separation_cost(const Bitstring& x) {
  std::ptrdiff_t last = -1, best = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    const auto ii = static_cast<std::ptrdiff_t>(i);
    if (last >= 0) best = std::max(best, ii - last);
    last = ii;
  }
  return -static_cast<double>(best);
}

/// Half the population standard deviation of the costs, floored at 1e-9.
inline double iteration_temperature(const std::vector<double>& costs) {
  detail::require(!costs.empty(), "temperature of an empty cost list");
  const double n = static_cast<double>(costs.size());
  const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / n;
  double var = 0.0;
  for (double c : costs) var += (c - mean) * (c - mean);
  return std::max(1e-9, 0.5 * std::sqrt(var / n));
}

struct Elites {
  std::vector<Bitstring> bitstrings;
  std::vector<double> costs;
};

/// The k lowest-cost entries (repeats allowed), ties broken by bitstring order.
inline Elites elite_select(const std::vector<Bitstring>& xs, const std::vector<double>& costs, std::size_t k) {
  detail::require(xs.size() == costs.size(), "bitstring and cost counts differ");
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    return xs[a] < xs[b];
  });
  Elites e;
  for (std::size_t j = 0; j < std::min(k, idx.size()); ++j) {
    e.bitstrings.push_back(xs[idx[j]]);
    e.costs.push_back(costs[idx[j]]);
  }
  return e;
}

struct GeoConfig {
  std::size_t queries = 10000;
  std::size_t elite_count = 100;
  std::size_t chi_max = 30;
  double learning_rate = 0.02;
  std::size_t sweeps_per_iter = 1;
  std::size_t max_iters = 10;
  /// Stop when |U_t - U_{t-1}| <= eps; eps defaults to eps_rel * |U_{t-1}|.
  double eps_rel = 1e-6;
  std::optional<double> eps_abs;
  /// Draw elites from the current batch together with the previous training set.
  bool merge_training = false;
  /// Train a dense (m = 0) model instead; invalid samples then score 0.
  bool vanilla = false;
  double utility_fraction = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const {
    detail::require(queries >= 1, "queries must be positive");
    detail::require(elite_count >= 1 && elite_count <= queries, "elite count must lie in [1, queries]");
    detail::require(chi_max >= 1, "chi_max must be positive");
    detail::require(learning_rate >= 0.0, "learning rate must be non-negative");
    detail::require(sweeps_per_iter >= 1, "sweeps per iteration must be positive");
    detail::require(eps_rel >= 0.0 && (!eps_abs || *eps_abs >= 0.0), "eps must be non-negative");
    detail::require(utility_fraction > 0.0 && utility_fraction <= 1.0, "utility fraction must lie in (0, 1]");
  }
};

struct GeoIteration {
  std::size_t t = 0;
  bool embedded = false;  ///< odd step: re-embedded from elites
  double temperature = 0.0;
  double nll = 0.0;
  double utility = 0.0;
  double batch_min = 0.0;
  double best_cost = 0.0;
  double validity = 1.0;
  std::vector<std::size_t> bond_dims;
};

struct GeoResult {
  Bitstring best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<GeoIteration> iterations;  ///< t = 0 is the initial uniform model
  bool converged = false;
  std::size_t evaluations = 0;

  std::vector<double> utility_trace() const {
    std::vector<double> u;
    for (const auto& it : iterations) u.push_back(it.utility);
    return u;
  }
};

/// Starting point of a run: an exact valid-space model, or seeds for the
/// path where the valid space is only known through samples.
struct GeoStart {
  std::optional<SymMPS> valid_space;
  std::optional<SeedSet> seeds;
};

/// Constrained generator-enhanced optimization. Odd iterations re-embed the
/// model from the current elites and train on softmax weights; even
/// iterations rebuild the uniform model and train on the same elites with
/// uniform weights.
inline GeoResult geo_run(const ConstraintSystem& cs, const CostFunction& cost, const GeoConfig& cfg,
                         const GeoStart& start) {
  cfg.validate();
  detail::require(start.valid_space.has_value() || (start.seeds.has_value() && !start.seeds->empty()),
                  "geo needs a valid-space model or a nonempty seed set");
  std::set<Bitstring> pool;  // cumulative seeds for the seeds-only rebuild
  if (start.seeds)
    for (const auto& x : *start.seeds) pool.insert(x);

  auto uniform_model = [&]() -> SymMPS {
    SymMPS base = start.valid_space ? uniform_fill(*start.valid_space)
                                    : embed_method2(cs, SeedSet(cs, {pool.begin(), pool.end()}));
    return cfg.vanilla ? to_vanilla(base) : base;
  };

  GeoResult res;
  std::uint64_t stream = cfg.seed;
  auto evaluate = [&](const SymMPS& model, GeoIteration& rec, std::vector<Bitstring>& xs, std::vector<double>& cs_out) {
    const auto batch = sample_batch(model, cfg.queries, splitmix64(stream++), cfg.threads);
    xs = batch.bitstrings;
    std::vector<Bitstring> valid;
    std::vector<std::size_t> where;
    for (std::size_t k = 0; k < xs.size(); ++k)
      if (cs.satisfied_by(xs[k])) {
        valid.push_back(xs[k]);
        where.push_back(k);
      }
    cs_out.assign(xs.size(), 0.0);  // invalid samples score 0
    if (!valid.empty()) {
      const auto c = cost(valid);
      if (c.size() != valid.size()) throw NumericalError("cost function returned the wrong number of values");
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (!std::isfinite(c[j])) throw NumericalError("cost function returned a non-finite value");
        cs_out[where[j]] = c[j];
      }
    }
    res.evaluations += valid.size();
    rec.validity = static_cast<double>(valid.size()) / static_cast<double>(xs.size());
    rec.utility = utility(cs_out, cfg.utility_fraction);
    rec.batch_min = *std::min_element(cs_out.begin(), cs_out.end());
    for (std::size_t k = 0; k < xs.size(); ++k)
      if (cs_out[k] < res.best_cost || (cs_out[k] == res.best_cost && xs[k] < res.best)) {
        if (!cs.satisfied_by(xs[k])) continue;
        res.best_cost = cs_out[k];
        res.best = xs[k];
      }
    rec.best_cost = res.best_cost;
    rec.bond_dims = model.bond_dims();
  };

  SymMPS model = uniform_model();
  std::vector<Bitstring> xs;
  std::vector<double> costs;
  GeoIteration rec0;
  evaluate(model, rec0, xs, costs);
  res.iterations.push_back(rec0);

  Elites train_prev;
  TrainConfig tc;
  tc.learning_rate = cfg.learning_rate;
  tc.chi_max = cfg.chi_max;
  tc.sweeps = cfg.sweeps_per_iter;

  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    std::vector<Bitstring> cand_x = xs;
    std::vector<double> cand_c = costs;
    if (cfg.merge_training) {
      cand_x.insert(cand_x.end(), train_prev.bitstrings.begin(), train_prev.bitstrings.end());
      cand_c.insert(cand_c.end(), train_prev.costs.begin(), train_prev.costs.end());
    }
    // Only valid strings can train a symmetric model; the dense baseline keeps
    // invalid ones (scored 0) as Algorithm 1 does.
    if (!cfg.vanilla) {
      std::vector<Bitstring> vx;
      std::vector<double> vc;
      for (std::size_t k = 0; k < cand_x.size(); ++k)
        if (cs.satisfied_by(cand_x[k])) {
          vx.push_back(cand_x[k]);
          vc.push_back(cand_c[k]);
        }
      cand_x = std::move(vx);
      cand_c = std::move(vc);
    }
    if (cand_x.empty()) throw NumericalError("no valid samples to train on at iteration " + std::to_string(t));
    const Elites el = elite_select(cand_x, cand_c, cfg.elite_count);
    for (const auto& x : el.bitstrings)
      if (cs.satisfied_by(x)) pool.insert(x);

    GeoIteration rec;
    rec.t = t;
    rec.embedded = t % 2 == 1;
    WeightedTrainingSet ts;
    if (rec.embedded) {
      rec.temperature = iteration_temperature(el.costs);
      ts = WeightedTrainingSet::from_costs(el.bitstrings, el.costs, rec.temperature);
      if (cfg.vanilla) {
        // No structure to re-embed: continue from the current dense model.
      } else {
        std::vector<Bitstring> seeds_v;
        for (const auto& x : el.bitstrings) seeds_v.push_back(x);
        model = embed_method2(cs, SeedSet(cs, seeds_v));
      }
    } else {
      rec.temperature = std::numeric_limits<double>::infinity();
      ts = WeightedTrainingSet::uniform(el.bitstrings);
      model = uniform_model();
    }
    const auto trace = train(model, ts, tc);
    rec.nll = trace.back();
    train_prev = el;
    evaluate(model, rec, xs, costs);
    const double prev_u = res.iterations.back().utility;
    res.iterations.push_back(rec);
    const double eps = cfg.eps_abs ? *cfg.eps_abs : cfg.eps_rel * std::abs(prev_u);
    if (std::abs(rec.utility - prev_u) <= eps) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace stnbm
