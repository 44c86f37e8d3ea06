// Acceptance checks. One PASS/FAIL line per criterion; exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "degeneracy_oracle.hpp"
#include "random_tensors.hpp"
#include "stats.hpp"
#include "stnbm/stnbm.hpp"
#include "test_util.hpp"
#include "trainer_oracles.hpp"

using namespace stnbm;
using namespace stnbm::testing;

namespace {

// Time budgets in seconds.
constexpr double kBudgetC1 = 1.0;
constexpr double kBudgetC2 = 1.0;
constexpr double kBudgetC3 = 5.0;
constexpr double kBudgetC4 = 60.0;
constexpr double kBudgetC5 = 30.0;
constexpr double kBudgetC6 = 60.0;
constexpr double kBudgetC7 = 60.0;
constexpr double kBudgetC8 = 120.0;
constexpr double kBudgetC9PerRun = 300.0;
constexpr double kBudgetC10 = 900.0;
constexpr double kBudgetC11 = 600.0;

constexpr double kGradientTol = 1e-6;
constexpr double kChiSquareMinP = 1e-3;
constexpr double kDenseTol = 1e-10;
constexpr double kGeoTargetCost = -18.0;
constexpr int kGeoMinSuccesses = 4;
constexpr int kCoverageMinWins = 8;
constexpr double kSymmetricGrowthMax = 2.0;
// "Superlinear" over a 5x range of chi_max.
constexpr double kVanillaGrowthMin = 5.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool run_criterion(const std::string& id, const std::string& title, double budget, const std::function<Outcome()>& f) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = seconds_since(t0);
  const bool in_time = dt < budget;
  const bool pass = o.pass && in_time;
  std::ostringstream line;
  line << (pass ? "PASS " : "FAIL ") << id << " " << title << " [" << std::fixed << std::setprecision(2) << dt
       << " s / " << budget << " s]";
  if (!in_time) line << " over budget;";
  if (!o.detail.empty()) line << " " << o.detail;
  std::cout << line.str() << std::endl;
  return pass;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::uint64_t mask_of(const Bitstring& x) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m |= std::uint64_t{x[i]} << i;
  return m;
}

std::vector<Bitstring> as_vector(const std::set<Bitstring>& s) { return {s.begin(), s.end()}; }

Outcome c1() {
  const auto cs = ConstraintSystem::cardinality(6, 3);
  const auto m = build_cardinality_mps(6, 3);
  const auto s = nonzero_support(m);
  const bool ok = s == brute_solutions(cs) && s.size() == 20 && m.max_bond_dim() == 4;
  return {ok, "support=" + std::to_string(s.size()) + " max_bond=" + std::to_string(m.max_bond_dim())};
}

Outcome c2() {
  const auto cs = ConstraintSystem::cardinality(6, 3);
  const SeedSet seeds(cs, {Bitstring::parse("111000"), Bitstring::parse("101010"), Bitstring::parse("010101"),
                           Bitstring::parse("000111")});
  const auto s1 = nonzero_support(embed_method1(cs, seeds));
  const auto s2 = nonzero_support(embed_method2(cs, seeds));
  const auto valid = brute_solutions(cs);
  bool ok = s1.size() == 10 && s2 == valid;
  for (const auto& x : s1) ok = ok && valid.count(x);
  return {ok, "method1=" + std::to_string(s1.size()) + " method2=" + std::to_string(s2.size())};
}

Outcome c3() {
  Outcome o;
  const std::size_t n = 10;
  for (std::int64_t kappa = 1; kappa <= 5; ++kappa) {
    const auto cs = ConstraintSystem::cardinality(n, kappa);
    const auto sol = as_vector(brute_solutions(cs));
    const std::size_t bound = static_cast<std::size_t>(std::min<std::int64_t>(kappa, static_cast<std::int64_t>(n) - kappa)) + 1;
    auto seeds = greedy_link_cover(cs, sol);
    const std::size_t greedy = seeds.size();
    for (std::size_t k = 0; k < sol.size() && seeds.size() < bound; ++k)
      if (std::find(seeds.begin(), seeds.end(), sol[k]) == seeds.end()) seeds.push_back(sol[k]);
    const auto s = nonzero_support(embed_method2(cs, SeedSet(cs, seeds)));
    const bool ok = greedy <= bound && seeds.size() == bound && s.size() == sol.size() &&
                    sol.size() == static_cast<std::size_t>(binomial(10, kappa));
    o.pass = o.pass && ok;
    o.detail += "k=" + std::to_string(kappa) + ":" + std::to_string(seeds.size()) + " seeds->" +
                std::to_string(s.size()) + " ";
  }
  return o;
}

Outcome c4() {
  std::mt19937_64 rng(404);
  std::size_t total = 0, invalid = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 10 + static_cast<std::size_t>(inst) % 11;
    const std::size_t m = 1 + static_cast<std::size_t>(inst) % 3;
    ConstraintSystem cs = random_system(n, m, -2, 2, rng);
    auto sol = enumerate_solutions(cs).bitstrings;
    while (sol.size() < 10) {
      cs = random_system(n, m, -2, 2, rng);
      sol = enumerate_solutions(cs).bitstrings;
    }
    std::shuffle(sol.begin(), sol.end(), rng);
    const std::size_t k = std::min<std::size_t>(sol.size(), 10 + static_cast<std::size_t>(inst) % 11);
    const std::vector<Bitstring> seeds(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(k));
    SymMPS model = expand_degeneracy(embed_method2(cs, SeedSet(cs, seeds)), 2, 0.5, rng);
    TrainConfig tc;
    tc.chi_max = 16;
    train(model, WeightedTrainingSet::uniform(seeds), tc);
    const auto batch = sample_batch(model, 10000, 1000 + static_cast<std::uint64_t>(inst), threads());
    for (const auto& [x, c] : batch.counts) {
      total += c;
      if (!satisfies(cs.A(), cs.b(), x)) invalid += c;
    }
  }
  return {invalid == 0 && total == 200000, std::to_string(invalid) + " invalid of " + std::to_string(total)};
}

Outcome c5() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> wdist(0.5, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    SymMPS m;
    std::vector<Bitstring> pool;
    if (k < 5) {
      m = random_vanilla_mps(8, 4, rng);
      pool = all_bitstrings(8);
    } else {
      ConstraintSystem cs = random_system(8, 2, -2, 2, rng);
      while (brute_solutions(cs).size() < 4) cs = random_system(8, 2, -2, 2, rng);
      m = random_symmetric_mps(cs, 2, rng);
      pool = as_vector(brute_solutions(cs));
    }
    const auto good = well_conditioned(m, pool);
    std::vector<Bitstring> xs;
    std::vector<double> w;
    std::uniform_int_distribution<std::size_t> pick(0, good.size() - 1);
    for (int j = 0; j < 10; ++j) {
      xs.push_back(good[pick(rng)]);
      w.push_back(wdist(rng));
    }
    const WeightedTrainingSet ts(xs, w);
    for (std::size_t i = 0; i + 1 < m.size(); ++i) worst = std::max(worst, fd_gradient_relative_error(m, i, ts));
  }
  return {worst < kGradientTol, "max relative error " + fmt(worst)};
}

Outcome c6() {
  std::mt19937_64 rng(606);
  const std::size_t q = 100000;
  Outcome o;
  for (int k = 0; k < 5; ++k) {
    SymMPS m;
    if (k % 2 == 0) {
      ConstraintSystem cs = random_system(10, 1 + static_cast<std::size_t>(k) % 3, -2, 2, rng);
      while (brute_solutions(cs).size() < 20) cs = random_system(10, 2, -2, 2, rng);
      m = random_symmetric_mps(cs, 3, rng);
    } else {
      m = random_vanilla_mps(10, 6, rng);
    }
    const auto p = born_probabilities(m);
    std::vector<std::size_t> h(p.size(), 0);
    for (const auto& [x, c] : sample_batch(m, q, 6000 + static_cast<std::uint64_t>(k), threads()).counts)
      h[mask_of(x)] += c;
    const double pv = chi_square_test(h, p, q).p_value;
    o.pass = o.pass && pv > kChiSquareMinP;
    o.detail += "p=" + fmt(pv) + " ";
  }
  return o;
}

Outcome c7() {
  std::mt19937_64 rng(707);
  double worst = 0.0;
  for (int k = 0; k < 25; ++k) {
    const std::size_t m = static_cast<std::size_t>(k) % 3;
    worst = std::max({worst, check_contract(rng, m), check_merge(rng, m), check_svd(rng, m), check_direct_sum(rng, m)});
  }
  return {worst < kDenseTol, "100 cases, max deviation " + fmt(worst)};
}

Outcome c8() {
  Outcome o;
  std::size_t checked = 0;
  for (int n : {10, 12, 14, 16}) {
    const auto buckets = separation_buckets(n);
    for (int kappa = 0; kappa <= n; ++kappa)
      for (int a = 0; 2 * a < n - kappa; ++a) {
        const auto& b = buckets[static_cast<std::size_t>(kappa)];
        const auto it = b.find(n - kappa - a + 1);
        const std::uint64_t want = it == b.end() ? 0 : it->second;
        ++checked;
        if (degeneracy_count(a, kappa, n) != BigInt(want)) {
          o.pass = false;
          o.detail += "mismatch N=" + std::to_string(n) + " a=" + std::to_string(a) + " k=" + std::to_string(kappa) + "; ";
        }
      }
  }
  for (int kappa = 1; kappa <= 25; ++kappa) o.pass = o.pass && degeneracy_count(0, kappa, 50) == BigInt(kappa - 1);
  // N = 50, kappa = 25: the cost -20 level (a = 6) against the full valid space.
  for (int a = 0; a <= 6; ++a) {
    const int sep = 50 - 25 - a + 1;
    const auto dp = count_separation_at_most(50, 25, sep) - count_separation_at_most(50, 25, sep - 1);
    o.pass = o.pass && degeneracy_count(a, 25, 50) == BigInt(dp.convert_to<std::uint64_t>());
  }
  const double ratio = static_cast<double>(degeneracy_count(6, 25, 50)) / static_cast<double>(binomial(50, 25));
  const bool order = std::lround(std::floor(std::log10(ratio))) == -7;
  o.pass = o.pass && order;
  o.detail += std::to_string(checked) + " (N,a,kappa) exhaustive; ratio(a=6)=" + fmt(ratio);
  return o;
}

Outcome c9() {
  const auto cs = ConstraintSystem::cardinality(50, 25);
  const auto start = build_valid_space_mps(cs);
  int reached = 0, beat_uniform = 0;
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeoConfig cfg;
    cfg.queries = 10000;
    cfg.elite_count = 100;
    cfg.chi_max = 30;
    cfg.learning_rate = 0.02;
    cfg.max_iters = 10;
    cfg.seed = seed;
    cfg.threads = threads();
    const auto t0 = Clock::now();
    const auto r = geo_run(cs, pointwise(negative_separation_cost), cfg, {start, std::nullopt});
    const double dt = seconds_since(t0);
    const bool hit = r.best_cost <= kGeoTargetCost && r.iterations.size() <= 11 && dt <= kBudgetC9PerRun;
    const bool beat = r.iterations.size() > 1 && r.iterations[1].utility < r.iterations[0].utility;
    reached += hit;
    beat_uniform += beat;
    o.detail += "[seed " + std::to_string(seed) + ": best " + fmt(r.best_cost) + ", U0 " + fmt(r.iterations[0].utility, 4) +
                ", U1 " + fmt(r.iterations.size() > 1 ? r.iterations[1].utility : NAN, 4) + ", " + fmt(dt) + " s] ";
  }
  o.pass = reached >= kGeoMinSuccesses && beat_uniform >= kGeoMinSuccesses;
  o.detail = "target " + std::to_string(reached) + "/5, U1<U0 " + std::to_string(beat_uniform) + "/5 " + o.detail;
  return o;
}

Outcome c10() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> coef(-2, 2);
  int wins = 0;
  Outcome o;
  for (int inst = 0; inst < 10; ++inst) {
    ConstraintSystem cs = ConstraintSystem::cardinality(2, 1);
    std::vector<Bitstring> sol;
    do {
      std::vector<std::vector<std::int64_t>> A(2, std::vector<std::int64_t>(14));
      for (auto& row : A)
        for (auto& v : row) v = coef(rng);
      std::vector<std::int64_t> b{coef(rng), coef(rng)};
      cs = ConstraintSystem(A, b);
      sol = enumerate_solutions(cs).bitstrings;
    } while (sol.size() < 2);
    std::shuffle(sol.begin(), sol.end(), rng);
    const auto t = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(sol.size())));
    const std::vector<Bitstring> train_set(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(t));
    const SeedSet seeds(cs, train_set);
    const auto q = static_cast<std::uint64_t>(inst);
    const auto sym_batch = sample_batch(embed_method2(cs, seeds), 10000, q, threads());
    const double sym = coverage(g_sol(sym_batch, seeds, cs), sol.size(), t);
    double van = 0.0;
    for (std::size_t chi : {8, 16, 32}) {
      auto v = random_vanilla_mps(14, chi, rng);
      TrainConfig tc;
      tc.learning_rate = 0.02;
      tc.chi_max = chi;
      tc.sweeps = 20;
      train(v, WeightedTrainingSet::uniform(train_set), tc);
      van = std::max(van, coverage(g_sol(sample_batch(v, 10000, 100 + q, threads()), seeds, cs), sol.size(), t));
    }
    wins += sym > van;
    o.detail += "[|S|=" + std::to_string(sol.size()) + " |T|=" + std::to_string(t) + " sym " + fmt(sym) + " van " +
                fmt(van) + "] ";
  }
  o.pass = wins >= kCoverageMinWins;
  o.detail = "symmetric wins " + std::to_string(wins) + "/10 " + o.detail;
  return o;
}

struct Profile {
  double seconds = 0.0;
  double parameters = 0.0;
};

// Per-sweep wall time and stored parameters, averaged over 3 sweeps.
Profile profile_training(SymMPS model, const WeightedTrainingSet& ts, std::size_t chi) {
  TrainConfig tc;
  tc.chi_max = chi;
  tc.learning_rate = 0.02;
  Profile p;
  for (int s = 0; s < 3; ++s) {
    const auto t0 = Clock::now();
    sweep(model, ts, tc);
    p.seconds += seconds_since(t0) / 3.0;
    p.parameters += static_cast<double>(model.num_parameters()) / 3.0;
  }
  return p;
}

Outcome c11() {
  const auto uniform = uniform_fill(build_cardinality_mps(50, 25));
  const auto ts = WeightedTrainingSet::uniform(sample_batch(uniform, 1000, 7).bitstrings);
  const auto dense = to_vanilla(uniform);
  const auto s10 = profile_training(uniform, ts, 10), s50 = profile_training(uniform, ts, 50);
  const auto v10 = profile_training(dense, ts, 10), v50 = profile_training(dense, ts, 50);
  const double st = s50.seconds / s10.seconds, sp = s50.parameters / s10.parameters;
  const double vt = v50.seconds / v10.seconds, vp = v50.parameters / v10.parameters;
  const bool ok = st < kSymmetricGrowthMax && sp < kSymmetricGrowthMax && vt > kVanillaGrowthMin && vp > kVanillaGrowthMin;
  return {ok, "chi 10->50: symmetric time x" + fmt(st) + " storage x" + fmt(sp) + " (" + fmt(s10.parameters, 6) + "->" +
                  fmt(s50.parameters, 6) + "); vanilla time x" + fmt(vt) + " storage x" + fmt(vp) + " (" +
                  fmt(v10.parameters, 6) + "->" + fmt(v50.parameters, 6) + ")"};
}

}  // namespace

int main() {
  int failed = 0;
  const auto run = [&](const char* id, const char* title, double budget, Outcome (*f)()) {
    failed += !run_criterion(id, title, budget, f);
  };
  run("C1", "cardinality construction", kBudgetC1, c1);
  run("C2", "embedding fidelity", kBudgetC2, c2);
  run("C3", "seed-count bound", kBudgetC3, c3);
  run("C4", "structural validity", kBudgetC4, c4);
  run("C5", "gradient vs finite differences", kBudgetC5, c5);
  run("C6", "sampler chi-square", kBudgetC6, c6);
  run("C7", "block-sparse vs dense", kBudgetC7, c7);
  run("C8", "degeneracy formula", kBudgetC8, c8);
  run("C9", "constrained GEO at N=50", 5 * kBudgetC9PerRun, c9);
  run("C10", "symmetric vs vanilla coverage", kBudgetC10, c10);
  run("C11", "training resource scaling", kBudgetC11, c11);
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
