#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ifskit/cantor.hpp"
#include "ifskit/errors.hpp"
#include "ifskit/ifs.hpp"
#include "ifskit/proportions.hpp"
#include "ifskit/words.hpp"

#include "json.hpp"

namespace ifskit {

// A branch pair under test: either adapted from a constructed IfsBranchPair
// or supplied externally as callables with derivatives.
struct ContractionPair {
  std::function<double(double)> f0, f1;
  std::function<double(double)> df0, df1;

  double apply(int i, double t) const { return i == 0 ? f0(t) : f1(t); }
  double slope(int i, double t) const { return i == 0 ? df0(t) : df1(t); }
};

inline ContractionPair adapt(const IfsBranchPair& br, double eval_tol = 1e-10) {
  return ContractionPair{
      [&br, eval_tol](double t) { return br.eval(0, t, eval_tol); },
      [&br, eval_tol](double t) { return br.eval(1, t, eval_tol); },
      [&br](double t) { return br.eval_derivative(0, t); },
      [&br](double t) { return br.eval_derivative(1, t); }};
}

struct PeriodicPoint {
  Word word;
  double point;
  double derivative_product;
};

// Unique fixed point of the cylinder map F_w = f_{w_1} o ... o f_{w_n},
// found by iteration from 1/2; the derivative product runs over the
// periodic orbit by the chain rule.
inline PeriodicPoint fixed_point(const ContractionPair& pair, const Word& w,
                                 double tol) {
  if (w.empty()) throw domain_error("fixed_point: word must be nonempty");
  if (!(tol > 0.0)) throw domain_error("fixed_point: tol must be > 0");
  auto cylinder = [&](double x) {
    for (std::size_t i = w.size(); i-- > 0;) x = pair.apply(w.letter(i), x);
    return x;
  };
  double x = 0.5;
  double delta_prev = 0.0;
  double mu_hat = 0.5;
  int budget = 80;
  for (int it = 0; it < budget; ++it) {
    double next = cylinder(x);
    if (!(next >= -0.5 && next <= 1.5))
      throw domain_error("fixed_point: iterates escaped [0,1]");
    double delta = std::abs(next - x);
    if (delta_prev > 0.0 && delta > 0.0) {
      mu_hat = std::clamp(delta / delta_prev, 1e-6, 0.999);
      budget = std::max(budget,
                        it + 10 + static_cast<int>(std::ceil(
                                      std::log(tol) / std::log(mu_hat))));
      budget = std::min(budget, 100000);
    }
    x = next;
    if (delta < tol * (1.0 - mu_hat)) break;
    if (it + 1 == budget)
      throw domain_error("fixed_point: no convergence within budget");
    delta_prev = delta;
  }
  // chain rule along the orbit, letters applied right to left
  double u = x;
  double product = 1.0;
  for (std::size_t i = w.size(); i-- > 0;) {
    double d = pair.slope(w.letter(i), u);
    if (!(d > 0.0))
      throw domain_error("fixed_point: nonpositive branch derivative");
    if (d >= 1.0)
      throw domain_error("fixed_point: branch derivative >= 1 on the orbit");
    product *= d;
    u = pair.apply(w.letter(i), u);
  }
  return PeriodicPoint{w, x, product};
}

struct LivsicReport {
  double lambda_hat;
  Word worst_word;
  double worst_dev;  // largest |product - lambda_hat^|w||
  bool pass;         // relative criterion at every word
  int max_len;
  double rel_tol;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["lambda_hat"] = lambda_hat;
    j["max_len"] = max_len;
    j["rel_tol"] = rel_tol;
    j["worst_word"] = worst_word.str();
    j["worst_dev"] = worst_dev;
    j["pass"] = pass;
    return j;
  }
};

// Periodic-data matching: every cylinder fixed point must carry derivative
// lambda_hat^|w|, with lambda_hat read off the first branch.
inline LivsicReport livsic_check(const ContractionPair& pair, int max_len,
                                 double rel_tol, double fp_tol = 1e-13) {
  if (max_len < 1) throw domain_error("livsic_check: max_len must be >= 1");
  PeriodicPoint base = fixed_point(pair, Word("0"), fp_tol);
  double lambda_hat = pair.slope(0, base.point);
  LivsicReport rep{lambda_hat, Word("0"), 0.0, true, max_len, rel_tol};
  for (const Word& w : enumerate_words(max_len)) {
    if (w.empty()) continue;
    PeriodicPoint p = fixed_point(pair, w, fp_tol);
    double expect = std::pow(lambda_hat, static_cast<double>(w.size()));
    double dev = std::abs(p.derivative_product - expect);
    if (dev > rel_tol * expect) rep.pass = false;
    if (dev > rep.worst_dev) {
      rep.worst_dev = dev;
      rep.worst_word = w;
    }
  }
  return rep;
}

inline LivsicReport livsic_check(const IfsBranchPair& br, int max_len,
                                 double rel_tol, double eval_tol = 1e-10) {
  ContractionPair pair = adapt(br, eval_tol);
  return livsic_check(pair, max_len, rel_tol);
}

struct PseudoAffinityReport {
  double max_dev;
  std::vector<double> per_level;  // max_i ||I_iw|/|I_w| - lambda| by |w|
  double endpoint_dev;            // max |f_i' - lambda| at realized endpoints
};

// Deviation of the realized proportions from the constant slope, level by
// level; pseudo-affine inputs decay to zero.
inline PseudoAffinityReport pseudo_affinity_report(const IfsBranchPair& br,
                                                   const GapTable& table,
                                                   int max_len) {
  if (max_len + 1 > table.depth())
    throw domain_error("pseudo_affinity_report: table depth too small");
  PseudoAffinityReport rep{0.0,
                           std::vector<double>(
                               static_cast<std::size_t>(max_len) + 1, 0.0),
                           0.0};
  for (const auto& r : table.rows()) {
    if (static_cast<int>(r.word.size()) > max_len) continue;
    for (int i = 0; i < 2; ++i) {
      double dev = std::abs(proportions_of(table, i, r.word) - table.lambda());
      rep.per_level[r.word.size()] = std::max(rep.per_level[r.word.size()], dev);
      rep.max_dev = std::max(rep.max_dev, dev);
    }
    if (r.word.size() <= 4) {
      for (int i = 0; i < 2; ++i) {
        rep.endpoint_dev =
            std::max(rep.endpoint_dev,
                     std::abs(br.eval_derivative(i, r.a) - br.lambda()));
        rep.endpoint_dev =
            std::max(rep.endpoint_dev,
                     std::abs(br.eval_derivative(i, r.b) - br.lambda()));
      }
    }
  }
  return rep;
}

struct ChiTrace {
  Coding coding;
  std::vector<std::pair<int, double>> values;  // (n, chi_n)
};

// chi_n = Psi_theta(a_1..a_n) / Psi_eta(a_1..a_n), accumulated factor by
// factor so deep prefixes never divide two underflowing products. The first
// argument's cocycle sits in the numerator.
inline ChiTrace chi_trace(const ProportionPair& theta,
                          const ProportionPair& eta, const Coding& a,
                          int n_max) {
  if (n_max < 1) throw domain_error("chi_trace: n_max must be >= 1");
  ChiTrace trace{a, {}};
  trace.values.reserve(static_cast<std::size_t>(n_max));
  std::string prefix;
  for (int n = 1; n <= n_max; ++n) {
    prefix += static_cast<char>('0' + a.letter(static_cast<std::size_t>(n - 1)));
    Word w(prefix);
    double chi = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      double num = theta.factor_suffix(w.letter(i), w, i + 1);
      double den = eta.factor_suffix(w.letter(i), w, i + 1);
      chi *= num / den;
    }
    trace.values.emplace_back(n, chi);
  }
  return trace;
}

enum class ChiVerdict { converges, oscillates, inconclusive };

inline const char* to_string(ChiVerdict v) {
  switch (v) {
    case ChiVerdict::converges: return "converges";
    case ChiVerdict::oscillates: return "oscillates";
    case ChiVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct TraceEvidence {
  std::string coding;
  double last_half_min;
  double last_half_max;
  double final_value;
  int alternations;
};

struct VerdictReport {
  ChiVerdict verdict;
  double max_gap;     // largest last-half spread across traces
  double spread;      // cross-coding spread of final values
  std::vector<TraceEvidence> evidence;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["verdict"] = to_string(verdict);
    j["max_gap"] = max_gap;
    j["spread"] = spread;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : evidence) {
      nlohmann::ordered_json t;
      t["coding"] = e.coding;
      t["last_half_min"] = e.last_half_min;
      t["last_half_max"] = e.last_half_max;
      t["final"] = e.final_value;
      t["alternations"] = e.alternations;
      arr.push_back(t);
    }
    j["traces"] = arr;
    return j;
  }
};

// Finite-depth verdict on the chi limit: oscillation needs both a last-half
// spread past osc_tol and genuine up-down alternation; a wide but monotone
// last half stays inconclusive. Not a proof either way.
inline VerdictReport conjugacy_verdict(const std::vector<ChiTrace>& traces,
                                       double osc_tol) {
  if (traces.empty()) throw domain_error("conjugacy_verdict: no traces");
  VerdictReport rep{ChiVerdict::converges, 0.0, 0.0, {}};
  double final_min = 1e300, final_max = -1e300;
  bool any_wide = false, any_alternating_wide = false;
  for (const auto& tr : traces) {
    if (tr.values.size() < 4)
      throw domain_error("conjugacy_verdict: traces too short");
    std::size_t half = tr.values.size() / 2;
    double lo = 1e300, hi = -1e300;
    int alternations = 0;
    int last_sign = 0;
    for (std::size_t k = half; k < tr.values.size(); ++k) {
      double v = tr.values[k].second;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (k > half) {
        double diff = v - tr.values[k - 1].second;
        int sign = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
        if (sign != 0 && last_sign != 0 && sign != last_sign) ++alternations;
        if (sign != 0) last_sign = sign;
      }
    }
    double gap = hi - lo;
    rep.max_gap = std::max(rep.max_gap, gap);
    double fin = tr.values.back().second;
    final_min = std::min(final_min, fin);
    final_max = std::max(final_max, fin);
    if (gap >= osc_tol) {
      any_wide = true;
      if (alternations >= 2) any_alternating_wide = true;
    }
    rep.evidence.push_back(
        TraceEvidence{tr.coding.str(), lo, hi, fin, alternations});
  }
  rep.spread = final_max - final_min;
  if (any_alternating_wide)
    rep.verdict = ChiVerdict::oscillates;
  else if (any_wide)
    rep.verdict = ChiVerdict::inconclusive;
  else
    rep.verdict = ChiVerdict::converges;
  return rep;
}

struct Linearization {
  std::vector<double> grid;
  std::vector<double> h;              // h on the grid, h(0)=0, h'(0)=1
  std::vector<double> conjugated_g1;  // h o g1 o h^{-1} samples, if g1 given
  double residual;
  int iterations;
};

// Koenigs iteration h(t) = lim lambda^-n g^n(t), sampled on the grid. The
// limit exists under any Hoelder control of g' at 0; plain C^1 branches may
// legitimately fail, which surfaces as a capacity error carrying the last
// residual.
inline Linearization linearize_branch(
    const std::function<double(double)>& g, double lambda,
    std::vector<double> grid, double tol, int max_iter = 400,
    const std::function<double(double)>& g1 = nullptr) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw domain_error("linearize_branch: lambda must be in (0,1)");
  if (!(std::abs(g(0.0)) <= 1e-12))
    throw domain_error("linearize_branch: fixed point must be 0");
  if (grid.size() < 2) throw domain_error("linearize_branch: grid too small");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    if (!(grid[k] < grid[k + 1]))
      throw domain_error("linearize_branch: grid must increase");

  std::vector<double> cur = grid;
  std::vector<double> h_prev = grid;
  std::vector<double> h_now(grid.size());
  double scale = 1.0;
  double residual = 1e300;
  int used = 0;
  for (int it = 1; it <= max_iter; ++it) {
    scale /= lambda;
    for (double& x : cur) x = g(x);
    residual = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      h_now[k] = cur[k] * scale;
      residual = std::max(residual, std::abs(h_now[k] - h_prev[k]));
    }
    used = it;
    std::swap(h_now, h_prev);
    if (residual < tol) break;
    if (it == max_iter)
      throw capacity_error("linearize_branch: no convergence in " +
                               std::to_string(max_iter) +
                               " iterations, residual " +
                               std::to_string(residual),
                           residual);
  }

  Linearization out{std::move(grid), std::move(h_prev), {}, residual, used};
  for (std::size_t k = 0; k + 1 < out.grid.size(); ++k)
    if (!(out.h[k] < out.h[k + 1]))
      throw domain_error("linearize_branch: limit not strictly increasing");

  if (g1) {
    auto interp = [](const std::vector<double>& xs, const std::vector<double>& ys,
                     double x) {
      if (x <= xs.front()) return ys.front();
      if (x >= xs.back()) return ys.back();
      auto it = std::upper_bound(xs.begin(), xs.end(), x);
      std::size_t j = static_cast<std::size_t>(it - xs.begin());
      double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
      return ys[j - 1] + t * (ys[j] - ys[j - 1]);
    };
    out.conjugated_g1.resize(out.grid.size());
    for (std::size_t k = 0; k < out.grid.size(); ++k) {
      double x = interp(out.h, out.grid, out.grid[k]);  // h^{-1}
      out.conjugated_g1[k] = interp(out.grid, out.h, g1(x));
    }
  }
  return out;
}

}  // namespace ifskit
