#pragma once

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ifskit/errors.hpp"
#include "ifskit/numerics.hpp"
#include "ifskit/proportions.hpp"
#include "ifskit/words.hpp"

#include "json.hpp"

namespace ifskit {

struct GapRow {
  Word word;
  double a;       // left endpoint of the gap
  double b;       // right endpoint
  double length;  // Psi(w) * L, stored as the product (not b - a)
};

struct ScalingRatios {
  Word word;
  double r0, rgap, r1;  // r0 + rgap + r1 = 1
};

// The realized Cantor set to a fixed depth: every gap with |w| <= depth and
// every cylinder hull with |w| <= depth+1. Immutable after realize().
class GapTable {
public:
  GapTable(int depth, double lambda, double big_l, double tail_bound,
           std::vector<GapRow> rows,
           std::unordered_map<std::string, std::pair<double, double>> cylinders)
      : depth_(depth),
        lambda_(lambda),
        L_(big_l),
        tail_bound_(tail_bound),
        rows_(std::move(rows)),
        cylinders_(std::move(cylinders)) {
    index_.reserve(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      index_.emplace(rows_[k].word.bits(), k);
  }

  int depth() const { return depth_; }
  double lambda() const { return lambda_; }
  double L() const { return L_; }
  double tail_bound() const { return tail_bound_; }
  const std::vector<GapRow>& rows() const { return rows_; }

  const GapRow& row(const Word& w) const {
    auto it = index_.find(w.bits());
    if (it == index_.end())
      throw domain_error("GapTable: word '" + w.str() + "' exceeds depth " +
                         std::to_string(depth_));
    return rows_[it->second];
  }

  bool has_row(const Word& w) const { return index_.count(w.bits()) != 0; }

  std::pair<double, double> cylinder(const Word& w) const {
    auto it = cylinders_.find(w.bits());
    if (it == cylinders_.end())
      throw domain_error("GapTable: cylinder '" + w.str() +
                         "' exceeds depth " + std::to_string(depth_ + 1));
    return it->second;
  }

  // Index of the first row whose gap is not left of t (rows are sorted by
  // position). rows()[i-1].b <= t when i > 0.
  std::size_t lower_bound_position(double t) const {
    auto it = std::lower_bound(
        rows_.begin(), rows_.end(), t,
        [](const GapRow& r, double x) { return r.b <= x; });
    return static_cast<std::size_t>(it - rows_.begin());
  }

  void to_csv(std::ostream& os) const {
    os << "word,a,b,length\n";
    char buf[96];
    for (const auto& r : rows_) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g\n",
                    r.word.str().c_str(), r.a, r.b, r.length);
      os << buf;
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["lambda"] = lambda_;
    j["L"] = L_;
    j["depth"] = depth_;
    j["tail_bound"] = tail_bound_;
    j["gap_count"] = rows_.size();
    return j;
  }

private:
  int depth_;
  double lambda_, L_, tail_bound_;
  std::vector<GapRow> rows_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::pair<double, double>> cylinders_;
};

namespace detail {

// In-order walk of the word tree down to leaf cylinders at depth N+1: every
// position is the running mass of all gaps and whole subtrees to its left,
// so endpoints come out exact (per-kind subtree masses) rather than
// truncated. Custom kinds have no closed subtree mass; their leaves
// contribute zero and the omitted mass is folded into the tail bound.
struct RealizeWalk {
  const ProportionPair& p;
  const SubtreeMass* leaf_mass;
  int leaf_depth;
  double L;
  KahanSum cum;
  KahanSum leaf_total;
  std::vector<GapRow> rows;
  std::unordered_map<std::string, std::pair<double, double>> cylinders;
  double last_pos = 0.0;

  double position() {
    last_pos = std::max(last_pos, L * cum.value());
    return last_pos;
  }

  void visit(const Word& v) {
    double entry = position();
    if (static_cast<int>(v.size()) == leaf_depth) {
      if (leaf_mass != nullptr) {
        double m = (*leaf_mass)(v);
        cum.add(m);
        leaf_total.add(m);
      }
      cylinders.emplace(v.bits(), std::make_pair(entry, position()));
      return;
    }
    visit(v.append(0));
    double a = position();
    double len = L * psi(p, v);
    cum.add(psi(p, v));
    rows.push_back(GapRow{v, a, a + len, len});
    visit(v.append(1));
    cylinders.emplace(v.bits(), std::make_pair(entry, position()));
  }
};

}  // namespace detail

// Realize the Cantor set of a proportion pair: gap endpoints are running
// prefix sums of Psi * L over the position-sorted tree at certified depth.
// For built-in kinds the boundary-cylinder masses close the sums, so
// endpoints are exact up to roundoff; for custom kinds the endpoints are
// truncated and tail_bound carries the omitted mass.
inline GapTable realize(const ProportionPair& p, int depth, double tail_tol) {
  if (depth < 0) throw domain_error("realize: depth must be >= 0");
  if (depth > 20) throw capacity_error("realize: depth capped at 20");
  PsiSum total = sum_psi(p, tail_tol);
  if (p.kind() != ProportionKind::custom) {
    // use the machine-precision total shared by the order-mass machinery,
    // so endpoints and embeddings agree to roundoff
    total.total = cached_total(p);
    total.tail_bound = 4e-15 * total.total;
  }
  const double L = 1.0 / total.total;

  SubtreeMass leaf_mass(p, static_cast<std::size_t>(depth) + 1);
  detail::RealizeWalk walk{p,
                           leaf_mass.available() ? &leaf_mass : nullptr,
                           depth + 1,
                           L,
                           {},
                           {},
                           {},
                           {},
                           0.0};
  walk.rows.reserve((std::size_t{2} << depth) - 1);
  walk.cylinders.reserve((std::size_t{4} << depth) - 1);
  walk.visit(Word());

  // tail_bound is the residual unassigned measure at this depth (the mass
  // of every gap deeper than the table), plus accumulated roundoff; the
  // endpoints themselves are good to roughly the roundoff part.
  double tail_bound;
  if (leaf_mass.available()) {
    double defect = std::abs(walk.position() - 1.0);
    double leaf_err =
        L * leaf_mass.per_leaf_error() * std::ldexp(1.0, depth + 1);
    tail_bound = L * walk.leaf_total.value() + 8.0 * defect + leaf_err +
                 2.0 * L * total.tail_bound + 1e-15;
  } else {
    // enumerated mass only: everything past the table depth is missing
    KahanSum partial;
    for (const auto& r : walk.rows) partial.add(r.length);
    tail_bound = std::max(0.0, 1.0 - partial.value()) + 2.0 * L * total.tail_bound;
  }

  // rows were emitted in position order already
  return GapTable(depth, p.lambda(), L, tail_bound, std::move(walk.rows),
                  std::move(walk.cylinders));
}

// Theta(a) = L * sum_{u < a} Psi(u), certified to tol. Order preserving by
// construction; the per-kind series/unroll machinery carries the tail.
inline double theta_embed(const ProportionPair& p, const Coding& a, double tol) {
  if (!(tol > 0.0)) throw domain_error("theta_embed: tol must be > 0");
  // the extreme codings have empty predecessor / full mass exactly
  bool any_one = false, any_zero = false;
  for (std::size_t k = 0; k < a.prefix().size() + a.block().size(); ++k) {
    if (a.letter(k) == 1) any_one = true;
    else any_zero = true;
  }
  if (!any_one) return 0.0;
  if (!any_zero) return 1.0;
  double total, total_err;
  if (p.kind() == ProportionKind::custom) {
    PsiSum s = sum_psi(p, tol / 4.0);  // machine-level totals need a closed form
    total = s.total;
    total_err = s.tail_bound;
  } else {
    total = cached_total(p);
    total_err = 4e-15 * total;
  }
  double L = 1.0 / total;
  MassResult left = left_mass(p, a, tol / (2.0 * L));
  double value = L * left.value;
  double err = L * left.error + L * total_err + 4e-15;
  if (err > tol)
    throw capacity_error("theta_embed: tolerance unreachable", err);
  return std::min(1.0, std::max(0.0, value));
}

// Realized proportion |I_{iw}| / |I_w| read back from the table.
inline double proportions_of(const GapTable& table, int i, const Word& w) {
  if (static_cast<int>(w.size()) + 1 > table.depth())
    throw domain_error("proportions_of: depth exceeded for word '" + w.str() +
                       "'");
  const GapRow& parent = table.row(w);
  const GapRow& child = table.row(w.prepend(i));
  return child.length / parent.length;
}

inline ScalingRatios scaling_ratios(const GapTable& table, const Word& w) {
  if (static_cast<int>(w.size()) + 1 > table.depth())
    throw domain_error("scaling_ratios: depth exceeded for word '" + w.str() +
                       "'");
  auto [l, r] = table.cylinder(w);
  auto [l0, r0] = table.cylinder(w.append(0));
  auto [l1, r1] = table.cylinder(w.append(1));
  double d = r - l;
  double rat0 = (r0 - l0) / d;
  double rat1 = (r1 - l1) / d;
  return ScalingRatios{w, rat0, 1.0 - rat0 - rat1, rat1};
}

// Ratio triples along left extension: entry n is r(y_{-n} ... y_{-1}) where
// reversed_tail lists y_{-1}, y_{-2}, .... No convergence is asserted; the
// caller inspects the sequence.
inline std::vector<ScalingRatios> scaling_limit(const GapTable& table,
                                                const Word& reversed_tail,
                                                const std::vector<int>& depths) {
  std::vector<ScalingRatios> out;
  out.reserve(depths.size());
  for (int n : depths) {
    if (n < 0 || static_cast<std::size_t>(n) > reversed_tail.size())
      throw domain_error("scaling_limit: schedule entry outside tail length");
    Word w = reversed_tail.prefix(static_cast<std::size_t>(n)).reversed();
    out.push_back(scaling_ratios(table, w));
  }
  return out;
}

}  // namespace ifskit
