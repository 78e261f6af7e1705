#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ifskit/cantor.hpp"
#include "ifskit/errors.hpp"
#include "ifskit/numerics.hpp"
#include "ifskit/proportions.hpp"
#include "ifskit/words.hpp"

namespace ifskit {

// The smooth profile shaping every gap bump: the normalized flat-ended
// exponential exp(-1/(t(1-t))), all one-sided derivatives zero at 0 and 1,
// scaled to unit integral. The cumulative R is tabulated on 4097
// Chebyshev-spaced nodes with monotone cubic interpolation; the
// interpolation error is measured against refined quadrature at build time.
class BumpProfile {
public:
  static const BumpProfile& standard() {
    static const BumpProfile instance;
    return instance;
  }

  double density(double t) const { return norm_ * raw(t); }

  double density_derivative(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double u = t * (1.0 - t);
    double sigma_prime = (1.0 - 2.0 * t) / (u * u);
    return density(t) * sigma_prime;
  }

  // R(s) = integral of the density over [0, s]; monotone, R(0)=0, R(1)=1.
  double cumulative(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return std::clamp(R_(s), 0.0, 1.0);
  }

  double interp_error() const { return interp_err_; }
  double sup_norm(std::size_t k) const {
    if (k > 2) throw domain_error("BumpProfile: sup norms stored up to order 2");
    return sup_[k];
  }

private:
  static double raw(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(-1.0 / (t * (1.0 - t)));
  }

  BumpProfile() {
    double mass = adaptive_quadrature([](double t) { return raw(t); }, 0.0,
                                      1.0, 1e-15);
    norm_ = 1.0 / mass;

    std::vector<double> nodes = chebyshev_nodes(4097);
    std::vector<double> vals(nodes.size(), 0.0);
    KahanSum cum;
    for (std::size_t j = 1; j < nodes.size(); ++j) {
      double piece = adaptive_quadrature(
          [this](double t) { return density(t); }, nodes[j - 1], nodes[j],
          2e-17);
      cum.add(piece);
      vals[j] = cum.value();
    }
    double end = vals.back();
    for (double& v : vals) v /= end;  // R(1) = 1 exactly
    R_ = MonotoneCubic(nodes, vals);

    double worst = 0.0;
    for (std::size_t j = 1; j < nodes.size(); ++j) {
      double mid = 0.5 * (nodes[j - 1] + nodes[j]);
      double direct = vals[j - 1] + adaptive_quadrature(
                                        [this](double t) { return density(t); },
                                        nodes[j - 1], mid, 1e-17) / end;
      worst = std::max(worst, std::abs(R_(mid) - direct));
    }
    interp_err_ = 4.0 * worst + 1e-15;

    sup_[0] = density(0.5);
    sup_[1] = 0.0;
    sup_[2] = 0.0;
    for (int g = 1; g < 4096; ++g) {
      double t = static_cast<double>(g) / 4096.0;
      sup_[1] = std::max(sup_[1], std::abs(density_derivative(t)));
      double u = t * (1.0 - t);
      double sp = (1.0 - 2.0 * t) / (u * u);
      double spp = -2.0 / (u * u) - 2.0 * (1.0 - 2.0 * t) * (1.0 - 2.0 * t) /
                                        (u * u * u);
      sup_[2] = std::max(sup_[2], std::abs(density(t) * (sp * sp + spp)));
    }
  }

  double norm_ = 1.0;
  MonotoneCubic R_;
  double interp_err_ = 0.0;
  double sup_[3] = {0.0, 0.0, 0.0};
};

// The synthesized contraction pair: f_i' = lambda on the attractor and
// lambda + theta_i(w) * profile on gap I_w; f_0 anchored at 0, f_1 at 1 via
// the translation tau = 1 - integral of f_1'.
class IfsBranchPair {
public:
  double lambda() const { return theta_.lambda(); }
  double tau() const { return tau_; }
  double tau_error() const { return tau_err_; }
  const GapTable& table() const { return table_; }
  const ProportionPair& proportions() const { return theta_; }
  const BumpProfile& profile() const { return *profile_; }
  int depth() const { return table_.depth(); }

  // Bound on |f_i'(t) - reported| over unresolved residual intervals.
  double derivative_error() const {
    return decay_envelope(theta_, static_cast<std::size_t>(table_.depth())) *
           profile_->sup_norm(0);
  }

  // 1 - sup f_i': positive means the pair is a pointwise contraction. The
  // profile peaks above 1 (unit integral), so large theta values can push
  // the derivative past 1 inside wide gaps even though every proportion is
  // admissible; the attractor and cylinder contraction are unaffected.
  double contraction_margin() const {
    double sup_theta = std::max(
        {decay_envelope(theta_, 0), theta_.theta(0, Word()),
         theta_.theta(1, Word())});
    return 1.0 - theta_.lambda() - sup_theta * profile_->sup_norm(0);
  }

  // f_i(t) = lambda t (+tau) + sum of theta_i(u)|I_u| over gaps left of t,
  // plus the partial bump integral when t lies inside a gap. The left sum
  // is evaluated through the certified order-mass machinery, so the stored
  // depth only limits gap localization, not the tail.
  double eval(int i, double t, double tol) const {
    if (i != 0 && i != 1) throw domain_error("eval: branch index must be 0 or 1");
    if (!(t >= 0.0 && t <= 1.0))
      throw domain_error("eval: argument outside [0,1]");
    if (!(tol > 0.0)) throw domain_error("eval: tol must be > 0");
    // anchor identities hold exactly for the represented object
    if (t == 0.0) return i == 0 ? 0.0 : tau_;
    if (t == 1.0 && i == 1) return 1.0;
    const auto& rows = table_.rows();
    const double L = table_.L();
    double base = theta_.lambda() * t + (i == 1 ? tau_ : 0.0);
    double err = (i == 1 ? tau_err_ : 0.0) + 4e-16;

    std::size_t idx = table_.lower_bound_position(t);
    double value;
    if (idx < rows.size() && rows[idx].a <= t) {
      // inside (or touching) gap I_w
      const GapRow& r = rows[idx];
      MassResult left = weighted_left_mass(
          theta_, i, Coding(r.word.append(0), Word("1")), tol / (4.0 * L));
      double frac = r.length > 0.0 ? (t - r.a) / r.length : 0.0;
      double bump = theta_.theta(i, r.word) * r.length *
                    profile_->cumulative(std::clamp(frac, 0.0, 1.0));
      value = base + L * left.value + bump;
      err += L * left.error +
             std::abs(theta_.theta(i, r.word)) * r.length *
                 profile_->interp_error();
    } else {
      // in a residual interval: every stored gap left of t is accounted
      // for; deeper gaps in the bracketing interval carry at most the
      // envelope times its width
      double residual_lo = idx == 0 ? 0.0 : rows[idx - 1].b;
      double residual_hi = idx < rows.size() ? rows[idx].a : 1.0;
      MassResult left =
          idx == 0 ? MassResult{0.0, 0.0}
                   : weighted_left_mass(
                         theta_, i,
                         Coding(rows[idx - 1].word.append(1), Word("0")),
                         tol / (4.0 * L));
      double slack =
          decay_envelope(theta_, static_cast<std::size_t>(table_.depth())) *
          std::max(0.0, residual_hi - residual_lo);
      value = base + L * left.value + 0.5 * slack;
      err += L * left.error + 0.5 * slack;
    }
    if (err > tol)
      throw capacity_error("eval: tolerance unreachable at stored depth", err);
    return std::clamp(value, 0.0, 1.0);
  }

  // Exact by representation on stored gaps and realized endpoints; lambda
  // with a certified envelope bound on unresolved residual intervals.
  double eval_derivative(int i, double t) const {
    if (i != 0 && i != 1)
      throw domain_error("eval_derivative: branch index must be 0 or 1");
    if (!(t >= 0.0 && t <= 1.0))
      throw domain_error("eval_derivative: argument outside [0,1]");
    const auto& rows = table_.rows();
    std::size_t idx = table_.lower_bound_position(t);
    if (idx < rows.size() && rows[idx].a < t && t < rows[idx].b) {
      const GapRow& r = rows[idx];
      double frac = (t - r.a) / r.length;
      return theta_.lambda() +
             theta_.theta(i, r.word) * profile_->density(frac);
    }
    return theta_.lambda();
  }

  // Sampled graph (t, f0, f1, f0', f1') on a caller-specified grid.
  void sample_csv(std::ostream& os, const std::vector<double>& grid,
                  double tol) const {
    os << "t,f0,f1,df0,df1\n";
    char buf[160];
    for (double t : grid) {
      std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g,%.17g,%.17g\n", t,
                    eval(0, t, tol), eval(1, t, tol), eval_derivative(0, t),
                    eval_derivative(1, t));
      os << buf;
    }
  }

  void sample_csv(std::ostream& os, std::size_t samples, double tol) const {
    std::vector<double> grid(samples);
    for (std::size_t k = 0; k < samples; ++k)
      grid[k] = samples == 1 ? 0.0
                             : static_cast<double>(k) /
                                   static_cast<double>(samples - 1);
    sample_csv(os, grid, tol);
  }

private:
  friend IfsBranchPair build_branches(const ProportionPair&, int, double);

  IfsBranchPair(ProportionPair theta, GapTable table, double tau,
                double tau_err)
      : theta_(std::move(theta)),
        table_(std::move(table)),
        tau_(tau),
        tau_err_(tau_err),
        profile_(&BumpProfile::standard()) {}

  ProportionPair theta_;
  GapTable table_;
  double tau_, tau_err_;
  const BumpProfile* profile_;
};

inline IfsBranchPair build_branches(const ProportionPair& p, int depth,
                                    double tol) {
  GapTable table = realize(p, depth, tol);
  MassResult wt;  // tau wants near-machine accuracy whenever the kind allows
  try {
    wt = weighted_total_mass(p, 1, 1e-15);
  } catch (const capacity_error&) {
    wt = weighted_total_mass(p, 1, tol / (4.0 * table.L()));
  }
  double tau = 1.0 - p.lambda() - table.L() * wt.value;
  double tau_err = table.L() * wt.error + 4e-16;
  return IfsBranchPair(p, std::move(table), tau, tau_err);
}

struct RegularityReport {
  double ratio_sup;
  Word witness;
  std::vector<double> per_level;  // max ratio per word length
};

// Necessary-condition probe for membership in C^{r,alpha}: the sup over
// stored gaps of |theta_i(w)| / |I_w|^(r-1+alpha). Bounded sups across
// depths are consistent with that regularity; growth rules it out.
inline RegularityReport regularity_report(const IfsBranchPair& branches,
                                          int r, double alpha) {
  if (r < 1 || !(alpha > 0.0) || alpha > 1.0)
    throw domain_error("regularity_report: need r >= 1 and alpha in (0,1]");
  double expo = static_cast<double>(r) - 1.0 + alpha;
  RegularityReport rep{0.0, Word(),
                       std::vector<double>(
                           static_cast<std::size_t>(branches.depth()) + 1, 0.0)};
  for (const auto& row : branches.table().rows()) {
    for (int i = 0; i < 2; ++i) {
      double th = std::abs(branches.proportions().theta(i, row.word));
      if (th == 0.0) continue;
      double ratio = th / std::pow(row.length, expo);
      rep.per_level[row.word.size()] =
          std::max(rep.per_level[row.word.size()], ratio);
      if (ratio > rep.ratio_sup) {
        rep.ratio_sup = ratio;
        rep.witness = row.word;
      }
    }
  }
  return rep;
}

}  // namespace ifskit
