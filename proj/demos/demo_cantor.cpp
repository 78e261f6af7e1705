// Build the middle-thirds set and one constructed family, print a few rows.

#include <cstdio>

#include "ifskit/cantor.hpp"
#include "ifskit/epsilon.hpp"
#include "ifskit/proportions.hpp"

int main() {
  using namespace ifskit;

  GapTable thirds = realize(ProportionPair::constant(1.0 / 3.0), 4, 1e-12);
  std::printf("middle thirds, depth 4 (L = %.6f):\n", thirds.L());
  for (const auto& r : thirds.rows())
    if (r.word.size() <= 1)
      std::printf("  I_%-3s = (%.6f, %.6f)  length %.6f\n",
                  r.word.str().c_str(), r.a, r.b, r.length);

  auto pair = as_proportions(gen_case_b(0.3, 2.0, 0.2), 'b');
  GapTable table = realize(pair, 6, 1e-10);
  std::printf("\ncase (b) s=2, lambda=0.3, eps0=0.2:\n");
  std::printf("  top-gap proportions %.4f / %.4f (branch 0 / 1)\n",
              proportions_of(table, 0, Word()), proportions_of(table, 1, Word()));
  std::printf("  embedding of (01)^inf at %.8f\n",
              theta_embed(pair, Coding::parse("(01)^inf"), 1e-10));
  return 0;
}
