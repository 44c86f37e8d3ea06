// Minimizes the negative separation cost over N=50 strings with 25 ones.
// Usage: example_separation_geo [seed]

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "stnbm/stnbm.hpp"

using namespace stnbm;

int main(int argc, char** argv) {
  const auto cs = ConstraintSystem::cardinality(50, 25);
  GeoConfig cfg;
  cfg.queries = 10000;
  cfg.elite_count = 100;
  cfg.chi_max = 30;
  cfg.learning_rate = 0.02;
  cfg.max_iters = 10;
  cfg.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());

  const auto r = geo_run(cs, pointwise(negative_separation_cost), cfg, {build_valid_space_mps(cs), std::nullopt});
  std::cout << "t  utility   best\n";
  for (const auto& it : r.iterations) std::cout << it.t << "  " << it.utility << "  " << it.best_cost << '\n';
  std::cout << "best " << r.best.str() << " cost " << r.best_cost << " (optimum " << -(50 - 25 + 1) << ")\n";
}
