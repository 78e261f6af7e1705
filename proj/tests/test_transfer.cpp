#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ifskit/transfer.hpp"

using namespace ifskit;

namespace {

// Independent dense oracle at depth 2: the literal 9x9 operator matrix,
// power-iterated with plain loops.
double dense_depth2_eigenvalue(const Potential& phi) {
  const int n = 9;
  double M[9][9] = {};
  for (int c = 0; c < n; ++c)
    for (int j = 0; j < 3; ++j) {
      int y = j * 3 + c / 3;
      double mid = (y + 0.5) / 9.0;
      M[c][y] += std::exp(phi(mid));
    }
  std::vector<double> v(n, 1.0);
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    std::vector<double> w(n, 0.0);
    for (int c = 0; c < n; ++c)
      for (int y = 0; y < n; ++y) w[c] += M[c][y] * v[y];
    double norm = 0.0;
    for (double x : w) norm += x;
    lam = norm / std::accumulate(v.begin(), v.end(), 0.0);
    for (int c = 0; c < n; ++c) v[c] = w[c] * (n / norm);
  }
  return lam;
}

}  // namespace

TEST_CASE("tripling with branch bookkeeping") {
  auto a = tripling(0.2);
  CHECK(a.image == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a.branch == 0);
  auto b = tripling(0.5);
  CHECK(b.image == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b.branch == 1);
  auto c = tripling(7.0 / 9.0);
  CHECK(c.image == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(c.branch == 2);
  CHECK_THROWS_AS(tripling(1.0), domain_error);
}

TEST_CASE("zero potential: pressure log 3, flat eigendata") {
  auto sys = build_system(Potential::constant(0.0), 5);
  CHECK(sys.pressure() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  double expected_mass = std::pow(3.0, -5.0);
  for (double m : sys.eigenmeasure())
    CHECK(m == doctest::Approx(expected_mass).epsilon(1e-11));
  for (double p : sys.right_eigenvector())
    CHECK(p == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("constant potential shifts the pressure") {
  auto sys = build_system(Potential::constant(0.1), 4);
  CHECK(sys.pressure() == doctest::Approx(std::log(3.0) + 0.1).epsilon(1e-12));
}

TEST_CASE("coboundary potential keeps pressure log 3") {
  auto phi = Potential::coboundary({0.2, -0.1, 0.05});
  auto sys = build_system(phi, 6);
  CHECK(sys.pressure() == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  // dense oracle at depth 2 agrees
  double lam = dense_depth2_eigenvalue(phi);
  CHECK(std::log(lam) == doctest::Approx(sys.pressure()).epsilon(1e-9));
}

TEST_CASE("one-digit potential: eigenmeasure is the Gibbs product measure") {
  auto phi = Potential::digit({0.1, 0.0, -0.1});
  auto sys = build_system(phi, 6);
  double z = std::exp(0.1) + 1.0 + std::exp(-0.1);
  CHECK(sys.pressure() == doctest::Approx(std::log(z)).epsilon(1e-11));

  // depth-1 cylinder masses are e^{phi(d)} / z
  const auto& mu = sys.eigenmeasure();
  std::size_t third = mu.size() / 3;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < third; ++k) {
    m0 += mu[k];
    m1 += mu[third + k];
    m2 += mu[2 * third + k];
  }
  CHECK(m0 == doctest::Approx(std::exp(0.1) / z).epsilon(1e-11));
  CHECK(m1 == doctest::Approx(1.0 / z).epsilon(1e-11));
  CHECK(m2 == doctest::Approx(std::exp(-0.1) / z).epsilon(1e-11));
}

TEST_CASE("eigen residual after build") {
  for (auto phi : {Potential::digit({0.1, 0.0, -0.1}),
                   Potential::coboundary({0.15, 0.0, -0.2})}) {
    auto sys = build_system(phi, 6);
    auto check = sys.apply(sys.right_eigenvector());
    double lam = std::exp(sys.pressure());
    double worst = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < check.size(); ++k) {
      worst = std::max(worst,
                       std::abs(check[k] - lam * sys.right_eigenvector()[k]));
      sup = std::max(sup, std::abs(sys.right_eigenvector()[k]));
    }
    CHECK(worst <= 1e-10 * sup);
    CHECK(sys.eigen_residual() <= 1e-10);
  }
}

TEST_CASE("measure transfer law at one depth down") {
  auto phi = Potential::digit({0.1, 0.0, -0.1});
  int depth = 5;
  auto sys = build_system(phi, depth);
  const auto& mu = sys.eigenmeasure();
  std::size_t n = mu.size(), third = n / 3;
  double p = std::exp(sys.pressure());
  // mu([y1..yn]) = e^{phi(y)-P} * sum_d mu([y2..yn d])
  for (std::size_t y = 0; y < n; ++y) {
    double coarse = 0.0;
    std::size_t rest = (y % third) * 3;
    for (std::size_t d = 0; d < 3; ++d) coarse += mu[rest + d];
    double expect = sys.weight(y) / p * coarse;
    CHECK(mu[y] == doctest::Approx(expect).epsilon(1e-11));
  }
}

TEST_CASE("pressure is monotone in the potential") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  for (int trial = 0; trial < 6; ++trial) {
    std::array<double, 3> lo{U(rng), U(rng), U(rng)};
    std::array<double, 3> hi = lo;
    for (double& x : hi) x += 0.05 + 0.1 * std::abs(U(rng));
    auto a = build_system(Potential::digit(lo), 4);
    auto b = build_system(Potential::digit(hi), 4);
    CHECK(a.pressure() <= b.pressure() + 1e-12);
  }
}

TEST_CASE("conjugating map: identity for constant potentials") {
  for (double c : {0.0, 0.1}) {
    auto sys = build_system(Potential::constant(c), 5);
    auto maps = conjugating_map(sys);
    const auto& knots = maps.h_inverse_knots();
    for (std::size_t k = 0; k < knots.size(); ++k) {
      double z = static_cast<double>(k) / static_cast<double>(knots.size() - 1);
      CHECK(knots[k] == doctest::Approx(z).epsilon(1e-11));
    }
  }
}

TEST_CASE("conjugating map: first-cylinder mass for the one-digit potential") {
  auto sys = build_system(Potential::digit({0.1, 0.0, -0.1}), 6);
  auto maps = conjugating_map(sys);
  double z = std::exp(0.1) + 1.0 + std::exp(-0.1);
  CHECK(maps.h_inverse(1.0 / 3.0) ==
        doctest::Approx(std::exp(0.1) / z).epsilon(1e-10));
  // h o h_inverse is the identity at the knots
  const auto& knots = maps.h_inverse_knots();
  for (std::size_t k = 0; k < knots.size(); k += 7) {
    double z_k = static_cast<double>(k) / static_cast<double>(knots.size() - 1);
    CHECK(maps.h(maps.h_inverse(z_k)) == doctest::Approx(z_k).epsilon(1e-12));
  }
  for (std::size_t k = 0; k + 1 < knots.size(); ++k)
    CHECK(knots[k] < knots[k + 1]);
}

TEST_CASE("conjugating map rejects unsupported measures") {
  std::vector<double> w(9, 1.0), psi(9, 1.0), mu(9, 1.0 / 8.0);
  mu[4] = 0.0;
  TransferSystem broken(2, std::log(3.0), w, psi, mu, 0.0, true);
  CHECK_THROWS_AS(conjugating_map(broken), domain_error);
}

TEST_CASE("derivative identity: exact cases") {
  auto zero = build_system(Potential::constant(0.0), 6);
  auto mz = conjugating_map(zero);
  auto rz = verify_derivative_identity(zero, mz, Potential::constant(0.0), 200);
  CHECK(rz.max_rel_dev <= 1e-9);

  auto c = build_system(Potential::constant(0.1), 6);
  auto mc = conjugating_map(c);
  auto rc = verify_derivative_identity(c, mc, Potential::constant(0.1), 200);
  CHECK(rc.max_rel_dev <= 1e-9);
}

TEST_CASE("derivative identity: one-digit potential sharpens with depth") {
  auto phi = Potential::digit({0.1, 0.0, -0.1});
  auto s8 = build_system(phi, 8);
  auto r8 = verify_derivative_identity(s8, conjugating_map(s8), phi, 1000);
  CHECK(r8.max_rel_dev <= 1e-2);
  auto s10 = build_system(phi, 10);
  auto r10 = verify_derivative_identity(s10, conjugating_map(s10), phi, 1000);
  CHECK(r10.max_rel_dev < r8.max_rel_dev);
}

TEST_CASE("periodic orbit sums") {
  auto zero = periodic_sum_check(Potential::constant(0.0), 6);
  CHECK(zero.max_abs_sum == 0.0);

  auto cob = periodic_sum_check(Potential::coboundary({0.3, -0.2, 0.1}), 8);
  CHECK(cob.max_abs_sum <= 1e-12);

  auto cst = periodic_sum_check(Potential::constant(0.1), 6);
  CHECK(cst.max_abs_sum == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cst.worst_period == 6);
}

TEST_CASE("infinite-range potentials build as flagged approximations") {
  const double pi = 3.14159265358979323846;
  auto phi = Potential::continuous(
      [pi](double x) { return 0.1 * std::cos(2.0 * pi * x); },
      [pi](double h) { return 0.2 * pi * h; }, 0.1);
  CHECK(!phi.finite_range());
  CHECK(phi.modulus(1e-3) == doctest::Approx(0.2 * pi * 1e-3));
  auto sys = build_system(phi, 6);
  CHECK(!sys.exact_discretization());
  // pressure sits within ||phi||_inf of log 3
  CHECK(sys.pressure() >= std::log(3.0) - 0.1 - 1e-9);
  CHECK(sys.pressure() <= std::log(3.0) + 0.1 + 1e-9);
  auto maps = conjugating_map(sys);
  CHECK(maps.h_inverse(1.0) == 1.0);
}

TEST_CASE("pressure of a finite-range potential is depth independent") {
  auto phi = Potential::digit({0.1, 0.0, -0.1});
  double p6 = build_system(phi, 6).pressure();
  double p11 = build_system(phi, 11).pressure();
  CHECK(p11 == doctest::Approx(p6).epsilon(1e-11));
}

TEST_CASE("build_system validation") {
  CHECK_THROWS_AS(build_system(Potential::constant(0.0), 0), capacity_error);
  CHECK_THROWS_AS(build_system(Potential::two_digit({}), 1), domain_error);
}
