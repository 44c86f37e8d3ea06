#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "stnbm/bitstring.hpp"
#include "stnbm/constraints.hpp"
#include "stnbm/errors.hpp"
#include "stnbm/symmps.hpp"

namespace stnbm {

/// splitmix64 finalizer; used to derive one independent stream per sample.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Sequential sampler over sites 0..N-1. Precomputes, for every site, the
/// slice selected by each (left sector, bit) and the Gram matrices of the
/// chain to the right of each link, so one draw costs O(N chi^2).
class Sampler {
 public:
  explicit Sampler(const SymMPS& mps) : n_(mps.size()) {
    using Mat = Eigen::MatrixXd;
    steps_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& t = mps.tensor(i);
      steps_[i].resize(t.leg(0).num_sectors());
      for (std::size_t l = 0; l < t.leg(0).num_sectors(); ++l)
        for (int bit = 0; bit < 2; ++bit) {
          auto st = mps.transition(i, static_cast<int>(l), bit);
          if (!st) continue;
          Mat a(static_cast<Eigen::Index>(st->dl), static_cast<Eigen::Index>(st->dr));
          for (std::size_t p = 0; p < st->dl; ++p)
            for (std::size_t c = 0; c < st->dr; ++c)
              a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) =
                  st->data[(p * st->ds + st->offset) * st->dr + c];
          steps_[i][l][bit] = Slice{st->r, std::move(a)};
        }
    }
    // gram_[j][s]: sum over completions of sites j..N-1 of the right vectors' outer products.
    gram_.resize(n_ + 1);
    gram_[n_] = {Mat::Ones(1, 1)};
    for (std::size_t i = n_; i-- > 0;) {
      const auto& t = mps.tensor(i);
      gram_[i].assign(t.leg(0).num_sectors(), Mat());
      for (std::size_t l = 0; l < t.leg(0).num_sectors(); ++l) {
        const auto d = static_cast<Eigen::Index>(t.leg(0).dim(l));
        Mat g = Mat::Zero(d, d);
        for (int bit = 0; bit < 2; ++bit)
          if (const auto& s = steps_[i][l][bit]) g.noalias() += s->a * gram_[i + 1][static_cast<std::size_t>(s->r)] * s->a.transpose();
        gram_[i][l] = std::move(g);
      }
    }
    z_ = gram_[0][0](0, 0);
    if (!(z_ > 0.0) || !std::isfinite(z_)) throw NumericalError("cannot sample from a model with Z = 0");
  }

  double partition_function() const { return z_; }

  template <class Rng>
  Bitstring operator()(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Bitstring x(n_);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    std::size_t l = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      Eigen::RowVectorXd w[2];
      double p[2] = {0.0, 0.0};
      for (int bit = 0; bit < 2; ++bit) {
        const auto& s = steps_[i][l][bit];
        if (!s) continue;
        w[bit] = v * s->a;
        p[bit] = std::max(0.0, (w[bit] * gram_[i + 1][static_cast<std::size_t>(s->r)] * w[bit].transpose())(0, 0));
      }
      const double tot = p[0] + p[1];
      if (!(tot > 0.0)) throw NumericalError("conditional probabilities vanish at site " + std::to_string(i));
      const int bit = u(rng) * tot < p[0] ? 0 : 1;
      x.set(i, static_cast<std::uint8_t>(bit));
      l = static_cast<std::size_t>(steps_[i][l][bit]->r);
      v = w[bit] / w[bit].norm();
    }
    return x;
  }

 private:
  struct Slice {
    int r;
    Eigen::MatrixXd a;
  };
  std::size_t n_;
  std::vector<std::vector<std::array<std::optional<Slice>, 2>>> steps_;
  std::vector<std::vector<Eigen::MatrixXd>> gram_;
  double z_ = 0.0;
};

/// One draw from P(x) = Psi(x)^2 / Z.
template <class Rng>
Bitstring sample(const SymMPS& mps, Rng& rng) {
  return Sampler(mps)(rng);
}

struct SampleBatch {
  std::vector<Bitstring> bitstrings;  ///< in draw order
  std::map<Bitstring, std::size_t> counts;
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return bitstrings.size(); }
};

/// Q independent draws. Draw k uses its own mt19937_64 seeded with
/// splitmix64(seed ^ splitmix64(k)), so the batch does not depend on `threads`.
inline SampleBatch sample_batch(const SymMPS& mps, std::size_t q, std::uint64_t seed, unsigned threads = 1) {
  SampleBatch b;
  b.rng_seed = seed;
  if (q == 0) return b;
  const Sampler s(mps);
  b.bitstrings.resize(q);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(k)));
      b.bitstrings[k] = s(rng);
    }
  };
  const std::size_t nt = std::max<std::size_t>(1, std::min<std::size_t>(threads, q));
  if (nt == 1) {
    work(0, q);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (q + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
      const std::size_t begin = t * chunk, end = std::min(q, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& x : b.bitstrings) ++b.counts[x];
  return b;
}

// ---------------------------------------------------------------------------
// Metrics

/// Distinct sampled strings that satisfy the constraints and are not seeds.
inline std::size_t g_sol(const SampleBatch& batch, const SeedSet& seeds, const ConstraintSystem& cs) {
  std::size_t n = 0;
  for (const auto& [x, c] : batch.counts)
    if (cs.satisfied_by(x) && !seeds.contains(x)) ++n;
  return n;
}

/// |g_sol| / (|S| - |T|).
inline double coverage(std::size_t gsol, std::size_t s_size, std::size_t t_size) {
  if (s_size <= t_size)
    detail::fail("coverage needs |S| > |T| (got " + std::to_string(s_size) + " and " + std::to_string(t_size) + ")");
  return static_cast<double>(gsol) / static_cast<double>(s_size - t_size);
}

/// Mean of the lowest ceil(0.05 n) costs (at least one).
inline double utility(std::vector<double> costs, double fraction = 0.05) {
  detail::require(!costs.empty(), "utility of an empty cost list");
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(costs.size()) - 1e-12)));
  std::partial_sort(costs.begin(), costs.begin() + static_cast<std::ptrdiff_t>(k), costs.end());
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += costs[j];
  return s / static_cast<double>(k);
}

/// sum_x target(x) log(target(x) / P(x)). Target weights are normalized first.
inline double kl_divergence(const SymMPS& mps, const std::map<Bitstring, double>& target) {
  detail::require(!target.empty(), "target distribution is empty");
  double tot = 0.0;
  for (const auto& [x, p] : target) {
    detail::require(p >= 0.0 && std::isfinite(p), "target probabilities must be non-negative");
    tot += p;
  }
  detail::require(tot > 0.0, "target distribution has zero mass");
  const double z = mps.contracted_norm_squared();
  if (!(z > 0.0)) throw NumericalError("model has zero norm");
  double kl = 0.0;
  for (const auto& [x, p] : target) {
    if (p == 0.0) continue;
    const double q = mps.probability(x, z);
    if (q == 0.0) detail::fail("target string " + x.str() + " lies outside the model support");
    const double pt = p / tot;
    kl += pt * std::log(pt / q);
  }
  return kl;
}

}  // namespace stnbm
