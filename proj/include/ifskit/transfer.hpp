#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ifskit/errors.hpp"
#include "ifskit/numerics.hpp"

#include "json.hpp"

namespace ifskit {

struct TriplingResult {
  double image;
  int branch;  // which third of [0,1) the argument came from
};

// Angle tripling x -> 3x mod 1 with branch bookkeeping.
inline TriplingResult tripling(double x) {
  if (!(x >= 0.0 && x < 1.0))
    throw domain_error("tripling: argument must lie in [0,1)");
  int branch = std::min(2, static_cast<int>(x * 3.0));
  return TriplingResult{3.0 * x - static_cast<double>(branch), branch};
}

// Potential for the transfer operator. Finite-range potentials are constant
// on ternary cylinders of their range depth (range 0 = constant); anything
// else carries a modulus of continuity and is discretized approximately.
class Potential {
public:
  static Potential constant(double c) {
    return Potential([c](double) { return c; }, 0, std::abs(c), nullptr);
  }

  static Potential digit(std::array<double, 3> v) {
    double sup = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
    return Potential(
        [v](double x) {
          return v[static_cast<std::size_t>(std::min(2.0, x * 3.0))];
        },
        1, sup, nullptr);
  }

  static Potential two_digit(std::array<double, 9> v) {
    double sup = 0.0;
    for (double t : v) sup = std::max(sup, std::abs(t));
    return Potential(
        [v](double x) {
          int d1 = std::min(2, static_cast<int>(x * 3.0));
          int d2 = std::min(2, static_cast<int>(x * 9.0) % 3);
          return v[static_cast<std::size_t>(3 * d1 + d2)];
        },
        2, sup, nullptr);
  }

  // u - u o T for a one-digit u; a two-digit potential with zero pressure
  // shift and vanishing periodic sums.
  static Potential coboundary(std::array<double, 3> u) {
    std::array<double, 9> v{};
    for (int d1 = 0; d1 < 3; ++d1)
      for (int d2 = 0; d2 < 3; ++d2)
        v[static_cast<std::size_t>(3 * d1 + d2)] =
            u[static_cast<std::size_t>(d1)] - u[static_cast<std::size_t>(d2)];
    return two_digit(v);
  }

  static Potential continuous(std::function<double(double)> f,
                              std::function<double(double)> modulus,
                              double sup) {
    return Potential(std::move(f), -1, sup, std::move(modulus));
  }

  double operator()(double x) const { return f_(x); }
  bool finite_range() const { return range_ >= 0; }
  int range_depth() const {
    if (range_ < 0)
      throw capability_error("Potential: infinite range has no depth");
    return range_;
  }
  double modulus(double h) const {
    if (range_ >= 0) return 0.0;
    return modulus_ ? modulus_(h) : sup_;
  }
  double sup_bound() const { return sup_; }
  bool within_quarter() const { return sup_ <= 0.25; }

private:
  Potential(std::function<double(double)> f, int range, double sup,
            std::function<double(double)> modulus)
      : f_(std::move(f)), range_(range), sup_(sup), modulus_(std::move(modulus)) {}

  std::function<double(double)> f_;
  int range_;
  double sup_;
  std::function<double(double)> modulus_;
};

// Depth-n cylinder discretization of the Ruelle operator
//   (L_phi f)(x) = sum_{Ty = x} e^{phi(y)} f(y)
// on the tripling map. States are ternary cylinders indexed most significant
// digit first, so index order is spatial order. The operator never
// materializes as a matrix: each application visits the three preimage
// cylinders y = j . c_1 ... c_{n-1} of a state c.
class TransferSystem {
public:
  TransferSystem(int depth, double pressure, std::vector<double> weights,
                 std::vector<double> psi, std::vector<double> mu,
                 double residual, bool exact)
      : depth_(depth),
        pressure_(pressure),
        weights_(std::move(weights)),
        psi_(std::move(psi)),
        mu_(std::move(mu)),
        residual_(residual),
        exact_(exact) {}

  int depth() const { return depth_; }
  std::size_t states() const { return mu_.size(); }
  double pressure() const { return pressure_; }
  double eigen_residual() const { return residual_; }
  bool exact_discretization() const { return exact_; }
  const std::vector<double>& right_eigenvector() const { return psi_; }
  const std::vector<double>& eigenmeasure() const { return mu_; }
  double weight(std::size_t cyl) const { return weights_[cyl]; }

  // One application of the discretized operator.
  std::vector<double> apply(const std::vector<double>& f) const {
    std::size_t n = f.size();
    std::size_t third = n / 3;
    std::vector<double> out(n);
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      std::size_t base = c / 3;
      for (std::size_t j = 0; j < 3; ++j) {
        std::size_t y = j * third + base;
        acc += weights_[y] * f[y];
      }
      out[c] = acc;
    }
    return out;
  }

  std::vector<double> apply_adjoint(const std::vector<double>& g) const {
    std::size_t n = g.size();
    std::size_t third = n / 3;
    std::vector<double> out(n);
    for (std::size_t y = 0; y < n; ++y) {
      std::size_t rest = (y % third) * 3;
      double acc = 0.0;
      for (std::size_t d = 0; d < 3; ++d) acc += g[rest + d];
      out[y] = weights_[y] * acc;
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["depth"] = depth_;
    j["states"] = states();
    j["pressure"] = pressure_;
    j["eigen_residual"] = residual_;
    j["exact_discretization"] = exact_;
    return j;
  }

private:
  int depth_;
  double pressure_;
  std::vector<double> weights_;
  std::vector<double> psi_, mu_;
  double residual_;
  bool exact_;
};

namespace detail {

struct PowerResult {
  std::vector<double> vec;
  double value;
  double spread;
};

template <class Apply>
inline PowerResult power_iterate(std::size_t n, const Apply& apply,
                                 int max_iter, double rel_tol) {
  std::vector<double> v(n, 1.0);
  double value = 0.0, spread = 1e300;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> w = apply(v);
    double lo = 1e300, hi = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double r = w[k] / v[k];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    value = 0.5 * (lo + hi);
    spread = hi - lo;
    double norm = 0.0;
    for (double x : w) norm += x;
    norm /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = w[k] / norm;
    if (spread <= rel_tol * value) return PowerResult{std::move(v), value, spread};
  }
  throw capacity_error("transfer: power iteration stagnated, ratio spread " +
                           std::to_string(spread),
                       spread);
}

}  // namespace detail

// Build the depth-n system: weights from the potential on cylinder
// midpoints (exact when the range fits the depth), pressure and both
// eigenvectors by power iteration, psi normalized against the eigenmeasure.
inline TransferSystem build_system(const Potential& phi, int depth) {
  if (depth < 1 || depth > 12)
    throw capacity_error("build_system: depth must be in [1,12]");
  if (phi.finite_range() && phi.range_depth() > depth)
    throw domain_error("build_system: depth below the potential's range");
  std::size_t n = 1;
  for (int k = 0; k < depth; ++k) n *= 3;

  std::vector<double> weights(n);
  double scale = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < n; ++c) {
    double mid = (static_cast<double>(c) + 0.5) * scale;
    weights[c] = std::exp(phi(mid));
  }

  auto fwd = [&](const std::vector<double>& f) {
    std::size_t third = n / 3;
    std::vector<double> out(n);
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t base = c / 3;
      double acc = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        std::size_t y = j * third + base;
        acc += weights[y] * f[y];
      }
      out[c] = acc;
    }
    return out;
  };
  auto adj = [&](const std::vector<double>& g) {
    std::size_t third = n / 3;
    std::vector<double> out(n);
    for (std::size_t y = 0; y < n; ++y) {
      std::size_t rest = (y % third) * 3;
      double acc = 0.0;
      for (std::size_t d = 0; d < 3; ++d) acc += g[rest + d];
      out[y] = weights[y] * acc;
    }
    return out;
  };

  int budget = 3 * depth + 300;
  auto right = detail::power_iterate(n, fwd, budget, 1e-13);
  auto left = detail::power_iterate(n, adj, budget, 1e-13);
  if (std::abs(std::log(right.value) - std::log(left.value)) > 1e-11)
    throw capacity_error("build_system: eigenvalue mismatch between sides");

  // mu sums to one; psi normalized so that sum mu_c psi_c = 1
  double mass = 0.0;
  for (double x : left.vec) mass += x;
  for (double& x : left.vec) x /= mass;
  double pairing = 0.0;
  for (std::size_t k = 0; k < n; ++k) pairing += left.vec[k] * right.vec[k];
  for (double& x : right.vec) x /= pairing;

  double lambda_hat = 0.5 * (right.value + left.value);
  // certified residual under the final normalization
  std::vector<double> check = fwd(right.vec);
  double resid = 0.0, sup = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    resid = std::max(resid, std::abs(check[k] - lambda_hat * right.vec[k]));
    sup = std::max(sup, std::abs(right.vec[k]));
  }
  return TransferSystem(depth, std::log(lambda_hat), std::move(weights),
                        std::move(right.vec), std::move(left.vec),
                        resid / sup, phi.finite_range());
}

// The conjugating homeomorphism pair: h^{-1}(z) = mu([0,z]) tabulated at the
// 3^n + 1 cylinder endpoints, h by monotone inversion with linear
// interpolation between knots.
class ConjugacyMaps {
public:
  explicit ConjugacyMaps(const TransferSystem& sys) : depth_(sys.depth()) {
    const auto& mu = sys.eigenmeasure();
    knots_.resize(mu.size() + 1);
    knots_[0] = 0.0;
    KahanSum cum;
    for (std::size_t c = 0; c < mu.size(); ++c) {
      if (!(mu[c] > 0.0))
        throw domain_error("conjugating_map: eigenmeasure not fully supported");
      cum.add(mu[c]);
      knots_[c + 1] = std::min(1.0, cum.value());
    }
    knots_.back() = 1.0;
    for (std::size_t c = 0; c + 1 < knots_.size(); ++c)
      if (!(knots_[c] < knots_[c + 1]))
        throw domain_error("conjugating_map: h inverse not strictly increasing");
  }

  int depth() const { return depth_; }
  const std::vector<double>& h_inverse_knots() const { return knots_; }

  // h^{-1}(z): measure of [0,z], piecewise linear between cylinder endpoints.
  double h_inverse(double z) const {
    if (z <= 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    double scaled = z * static_cast<double>(knots_.size() - 1);
    std::size_t cell = std::min(knots_.size() - 2,
                                static_cast<std::size_t>(scaled));
    double frac = scaled - static_cast<double>(cell);
    return knots_[cell] + frac * (knots_[cell + 1] - knots_[cell]);
  }

  // h(x): inverse of the above.
  double h(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t cell = static_cast<std::size_t>(it - knots_.begin()) - 1;
    cell = std::min(cell, knots_.size() - 2);
    double width = knots_[cell + 1] - knots_[cell];
    double frac = (x - knots_[cell]) / width;
    return (static_cast<double>(cell) + frac) /
           static_cast<double>(knots_.size() - 1);
  }

private:
  int depth_;
  std::vector<double> knots_;
};

inline ConjugacyMaps conjugating_map(const TransferSystem& sys) {
  return ConjugacyMaps(sys);
}

struct DerivativeIdentityReport {
  double max_rel_dev;
  int samples_used;
};

// Checks log T_hat' = P(phi) - phi o h for T_hat = h^{-1} o T o h by finite
// differences: each sample is slid to a window inside one cylinder of the
// potential's range (and one branch of T), the slope of T_hat across the
// window is measured through the tabulated maps, and compared against
// exp(P - phi). Finite-range potentials drive the deviation to zero as the
// depth grows.
inline DerivativeIdentityReport verify_derivative_identity(
    const TransferSystem& sys, const ConjugacyMaps& maps, const Potential& phi,
    int samples) {
  if (samples < 1)
    throw domain_error("verify_derivative_identity: need samples >= 1");
  int guard_depth = 1;
  if (phi.finite_range())
    guard_depth = std::max(1, phi.range_depth());
  else
    guard_depth = std::max(1, sys.depth() - 2);
  double guard_cells = std::pow(3.0, static_cast<double>(guard_depth));
  double cell = std::pow(3.0, -static_cast<double>(sys.depth()));

  double max_dev = 0.0;
  int used = 0;
  for (int s = 0; s < samples; ++s) {
    double z = (static_cast<double>(s) + 0.5) / static_cast<double>(samples);
    double lo = std::floor(z * guard_cells) / guard_cells;
    double hi = lo + 1.0 / guard_cells;
    double dz = 0.5 * std::min(z - lo, hi - z);
    if (dz < cell) continue;  // too close to a boundary knot of the window
    double z0 = z - dz, z1 = z + dz;
    int branch = tripling(z).branch;
    double x1 = maps.h_inverse(z1), x0 = maps.h_inverse(z0);
    double tz1 = 3.0 * z1 - branch, tz0 = 3.0 * z0 - branch;
    double slope = (maps.h_inverse(tz1) - maps.h_inverse(tz0)) / (x1 - x0);
    double expect = std::exp(sys.pressure() - phi(z));
    max_dev = std::max(max_dev, std::abs(slope / expect - 1.0));
    ++used;
  }
  if (used == 0)
    throw domain_error("verify_derivative_identity: every sample fell on a cut");
  return DerivativeIdentityReport{max_dev, used};
}

struct PeriodicSumReport {
  double max_abs_sum;
  int worst_period;
  std::int64_t worst_numerator;  // orbit representative p / (3^n - 1)
};

// Orbit sums of the potential over every periodic point of period up to
// period_max, in exact rational arithmetic p / (3^n - 1). Zero sums are
// necessary for phi to be a coboundary.
inline PeriodicSumReport periodic_sum_check(const Potential& phi,
                                            int period_max) {
  if (period_max < 1 || period_max > 12)
    throw domain_error("periodic_sum_check: period_max must be in [1,12]");
  PeriodicSumReport rep{0.0, 0, 0};
  for (int n = 1; n <= period_max; ++n) {
    std::int64_t den = 1;
    for (int k = 0; k < n; ++k) den *= 3;
    den -= 1;  // 3^n - 1
    for (std::int64_t p = 0; p < den; ++p) {
      double sum = 0.0;
      std::int64_t q = p;
      for (int k = 0; k < n; ++k) {
        sum += phi(static_cast<double>(q) / static_cast<double>(den));
        q = (3 * q) % den;
      }
      if (std::abs(sum) > rep.max_abs_sum) {
        rep.max_abs_sum = std::abs(sum);
        rep.worst_period = n;
        rep.worst_numerator = p;
      }
    }
  }
  return rep;
}

// CSV of (z, h_inverse(z)) plus the conjugated map samples.
inline void sample_conjugacy_csv(const ConjugacyMaps& maps, std::ostream& os,
                                 std::size_t samples) {
  os << "z,h_inverse,t_hat\n";
  char buf[120];
  for (std::size_t k = 0; k <= samples; ++k) {
    double x = static_cast<double>(k) / static_cast<double>(samples);
    double z = maps.h(x);
    double that = z < 1.0 ? maps.h_inverse(tripling(z).image) : 1.0;
    std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g\n", x, maps.h_inverse(x),
                  that);
    os << buf;
  }
}

}  // namespace ifskit
