// Builds the N=6, kappa=3 cardinality model, embeds four seeds both ways and
// prints the strings each model can emit.

#include <iostream>

#include "stnbm/stnbm.hpp"

using namespace stnbm;

namespace {

void show(const char* name, const SymMPS& m) {
  const auto s = support(m);
  std::cout << name << ": " << s.size() << " strings, bonds";
  for (auto d : m.bond_dims()) std::cout << ' ' << d;
  std::cout << '\n';
  for (const auto& x : s) std::cout << "  " << x.str() << '\n';
}

}  // namespace

int main() {
  const auto cs = ConstraintSystem::cardinality(6, 3);
  show("cardinality", build_cardinality_mps(6, 3));

  const SeedSet seeds(cs, {Bitstring::parse("111000"), Bitstring::parse("101010"), Bitstring::parse("010101"),
                           Bitstring::parse("000111")});
  show("method 1", embed_method1(cs, seeds));
  show("method 2", embed_method2(cs, seeds));
}
