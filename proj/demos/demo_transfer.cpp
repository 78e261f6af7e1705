// Pressure and conjugating map for a one-digit potential on angle tripling.

#include <cmath>
#include <cstdio>

#include "ifskit/transfer.hpp"

int main() {
  using namespace ifskit;

  auto phi = Potential::digit({0.1, 0.0, -0.1});
  for (int depth : {4, 6, 8}) {
    auto sys = build_system(phi, depth);
    auto maps = conjugating_map(sys);
    auto rep = verify_derivative_identity(sys, maps, phi, 400);
    std::printf("depth %2d  pressure %.12f  identity dev %.3e\n", depth,
                sys.pressure(), rep.max_rel_dev);
  }
  auto sums = periodic_sum_check(Potential::coboundary({0.3, -0.2, 0.1}), 8);
  std::printf("coboundary orbit sums up to period 8: max %.3e\n",
              sums.max_abs_sum);
  return 0;
}
