#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ifskit/epsilon.hpp"
#include "ifskit/errors.hpp"
#include "ifskit/numerics.hpp"
#include "ifskit/words.hpp"

#include "json.hpp"

namespace ifskit {

enum class ProportionKind { constant_zero, length_only, case_b, custom };

inline const char* to_string(ProportionKind k) {
  switch (k) {
    case ProportionKind::constant_zero: return "constant-zero";
    case ProportionKind::length_only: return "length-only";
    case ProportionKind::case_b: return "case-b";
    case ProportionKind::custom: return "custom";
  }
  return "?";
}

namespace detail {

// k when w[from..] equals (01)^k, else -1. The empty suffix counts as k = 0.
inline long alternating01_power(const Word& w, std::size_t from) {
  std::size_t n = w.size();
  if ((n - from) % 2 != 0) return -1;
  for (std::size_t j = from; j < n; j += 2)
    if (w.letter(j) != 0 || w.letter(j + 1) != 1) return -1;
  return static_cast<long>((n - from) / 2);
}

}  // namespace detail

// Slope lambda plus the perturbation pair (theta_0, theta_1). The built-in
// kinds carry certified decay envelopes; a custom pair may supply one.
class ProportionPair {
public:
  using ThetaFn = std::function<double(int, const Word&)>;
  using EnvelopeFn = std::function<double(std::size_t)>;

  static ProportionPair constant(double lambda) {
    return ProportionPair(lambda, ProportionKind::constant_zero, {}, nullptr,
                          nullptr);
  }

  // theta_i(w) = eps_{|w|} for both branches (case (a) support pattern).
  static ProportionPair length_only(double lambda, EpsilonSequence seq) {
    return ProportionPair(lambda, ProportionKind::length_only, std::move(seq),
                          nullptr, nullptr);
  }

  // theta_1((01)^k) = eps_k and zero elsewhere (case (b) support pattern).
  static ProportionPair case_b(double lambda, EpsilonSequence seq) {
    return ProportionPair(lambda, ProportionKind::case_b, std::move(seq),
                          nullptr, nullptr);
  }

  static ProportionPair custom(double lambda, ThetaFn theta,
                               EnvelopeFn envelope = nullptr) {
    return ProportionPair(lambda, ProportionKind::custom, {},
                          std::move(theta), std::move(envelope));
  }

  double lambda() const { return impl_->lambda; }
  ProportionKind kind() const { return impl_->kind; }
  const EpsilonSequence& sequence() const {
    if (!impl_->seq) throw capability_error("ProportionPair: no sequence");
    return *impl_->seq;
  }
  bool has_envelope() const {
    return impl_->kind != ProportionKind::custom ||
           static_cast<bool>(impl_->envelope);
  }

  double theta(int i, const Word& w) const { return theta_suffix(i, w, 0); }

  // theta_i applied to the suffix w[from..]; avoids materializing suffixes
  // on the hot paths.
  double theta_suffix(int i, const Word& w, std::size_t from) const {
    switch (impl_->kind) {
      case ProportionKind::constant_zero:
        return 0.0;
      case ProportionKind::length_only:
        return impl_->seq->value(w.size() - from);
      case ProportionKind::case_b: {
        if (i != 1) return 0.0;
        long k = detail::alternating01_power(w, from);
        return k >= 0 ? impl_->seq->value(static_cast<std::size_t>(k)) : 0.0;
      }
      case ProportionKind::custom:
        return impl_->theta(i, w.suffix_from(from));
    }
    return 0.0;
  }

  // lambda + theta_i(w[from..]) with the admissibility check.
  double factor_suffix(int i, const Word& w, std::size_t from) const {
    double f = impl_->lambda + theta_suffix(i, w, from);
    if (!(f > 0.0 && f < 1.0))
      throw domain_error("proportions: lambda+theta outside (0,1) at suffix '" +
                         w.suffix_from(from).str() + "'");
    return f;
  }

  double factor(int i, const Word& w) const { return factor_suffix(i, w, 0); }

  double custom_envelope(std::size_t n) const {
    if (!impl_->envelope)
      throw capability_error(
          "proportions: custom kind carries no decay envelope");
    return impl_->envelope(n);
  }

  nlohmann::ordered_json to_json() const;
  template <class Json>
  static ProportionPair from_json(const Json& j);

  // Shared lazily computed cocycle total (see sum_psi below).
  struct SumCache {
    std::mutex mu;
    std::optional<std::pair<double, double>> total_and_tail;
    std::optional<double> weighted_total[2];
  };
  SumCache& sum_cache() const { return impl_->cache; }

private:
  struct Impl {
    double lambda;
    ProportionKind kind;
    std::optional<EpsilonSequence> seq;
    ThetaFn theta;
    EnvelopeFn envelope;
    mutable SumCache cache;
  };

  ProportionPair(double lambda, ProportionKind kind,
                 std::optional<EpsilonSequence> seq, ThetaFn theta,
                 EnvelopeFn envelope)
      : impl_(std::make_shared<Impl>()) {
    if (!(lambda > 0.0 && lambda < 0.5))
      throw domain_error("ProportionPair: lambda must be in (0, 1/2)");
    impl_->lambda = lambda;
    impl_->kind = kind;
    impl_->seq = std::move(seq);
    impl_->theta = std::move(theta);
    impl_->envelope = std::move(envelope);
    if (kind == ProportionKind::custom) {
      if (!impl_->theta)
        throw domain_error("ProportionPair: custom kind needs a theta function");
      // spot-check the caller's decay assertion at a few deep words
      for (const char* bits :
           {"01101001", "0110100110010110", "011010011001011010010110"}) {
        Word w(bits);
        for (int i = 0; i < 2; ++i) {
          double f = lambda + impl_->theta(i, w);
          if (!(f > 0.0 && f < 1.0))
            throw domain_error(
                "ProportionPair: custom theta inadmissible at spot check '" +
                w.str() + "'");
        }
      }
    }
  }

  std::shared_ptr<Impl> impl_;
};

// Case (a) sequences induce length-only proportions, case (b) the single
// (01)^k support chain.
inline ProportionPair as_proportions(const EpsilonSequence& seq, char kase) {
  if (kase == 'a') return ProportionPair::length_only(seq.lambda(), seq);
  if (kase == 'b') return ProportionPair::case_b(seq.lambda(), seq);
  throw domain_error("as_proportions: case must be 'a' or 'b'");
}

// Cocycle Psi(w_1..w_n) = prod_{i=1}^{n} (lambda + theta_{w_i}(w_{i+1}..w_n)),
// the last factor taken at the empty suffix; Psi(e) = 1.
inline double psi(const ProportionPair& p, const Word& w) {
  double prod = 1.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    prod *= p.factor_suffix(w.letter(i), w, i + 1);
  return prod;
}

// Certified bound for sup over both branches of |theta_i(w)| on |w| > N.
inline double decay_envelope(const ProportionPair& p, std::size_t N) {
  switch (p.kind()) {
    case ProportionKind::constant_zero:
      return 0.0;
    case ProportionKind::length_only:
      return p.sequence().value(N + 1);
    case ProportionKind::case_b:
      // support on (01)^k with 2k > N
      return p.sequence().value(N / 2 + 1);
    case ProportionKind::custom:
      return p.custom_envelope(N);
  }
  return 0.0;
}

struct PsiSum {
  double total;            // sum of Psi over all finite words (>= partial)
  int truncation_depth;    // levels 0..depth summed exactly
  double tail_bound;       // certified bound for the omitted mass
};

namespace detail {

// Exact per-level sums S_n = sum_{|w|=n} Psi(w) for the built-in kinds.
// Returns S_0..S_N. Derivations use S_{n+1} = sum_w (2*lambda +
// theta_0(w) + theta_1(w)) Psi(w) with the kind's support pattern.
class LevelSums {
public:
  explicit LevelSums(const ProportionPair& p) : p_(p) {
    s_.push_back(1.0);
    if (p.kind() == ProportionKind::case_b) chain_.push_back(1.0);
  }

  double operator[](std::size_t n) {
    extend(n);
    return s_[n];
  }

  // lambda^k * prod_{r<k} (lambda + eps_r): the cocycle along the support
  // chain (01)^k of case (b).
  double chain(std::size_t k) {
    if (p_.kind() != ProportionKind::case_b)
      throw domain_error("LevelSums::chain: case-b only");
    while (chain_.size() <= k) {
      std::size_t r = chain_.size() - 1;
      chain_.push_back(chain_.back() * p_.lambda() *
                       (p_.lambda() + p_.sequence().value(r)));
    }
    return chain_[k];
  }

  bool closed_form() const {
    return p_.kind() != ProportionKind::custom;
  }

private:
  void extend(std::size_t n) {
    while (s_.size() <= n) {
      std::size_t m = s_.size() - 1;  // extending from S_m
      double lam = p_.lambda();
      double next = 0.0;
      switch (p_.kind()) {
        case ProportionKind::constant_zero:
          next = 2.0 * lam * s_[m];
          break;
        case ProportionKind::length_only:
          next = 2.0 * (lam + p_.sequence().value(m)) * s_[m];
          break;
        case ProportionKind::case_b: {
          next = 2.0 * lam * s_[m];
          if (m % 2 == 0)
            next += p_.sequence().value(m / 2) * chain(m / 2);
          break;
        }
        case ProportionKind::custom:
          throw capability_error("LevelSums: no closed recursion for custom");
      }
      s_.push_back(next);
    }
  }

  const ProportionPair& p_;
  std::vector<double> s_;
  std::vector<double> chain_;
};

// Per-level sums for a custom pair by explicit level-by-level enumeration
// (words built by prepending letters, Psi(iw) = (lambda+theta_i(w)) Psi(w)).
struct EnumeratedLevels {
  std::vector<double> sums;                 // S_0..S_depth
  std::vector<std::pair<Word, double>> last_level;
};

inline EnumeratedLevels enumerate_levels(const ProportionPair& p, int depth,
                                         std::size_t word_cap = (1u << 21)) {
  EnumeratedLevels out;
  std::vector<std::pair<Word, double>> level{{Word(), 1.0}};
  out.sums.push_back(1.0);
  for (int n = 1; n <= depth; ++n) {
    if (level.size() * 2 > word_cap)
      throw capacity_error("proportions: enumeration exceeds word budget at depth " +
                           std::to_string(n));
    std::vector<std::pair<Word, double>> next;
    next.reserve(level.size() * 2);
    KahanSum sum;
    for (const auto& [w, val] : level) {
      for (int i = 0; i < 2; ++i) {
        double f = p.factor(i, w);
        next.emplace_back(w.prepend(i), f * val);
        sum.add(f * val);
      }
    }
    out.sums.push_back(sum.value());
    level = std::move(next);
  }
  out.last_level = std::move(level);
  return out;
}

}  // namespace detail

// Certified total of the cocycle over all finite words. Level sums are
// accumulated until the geometric tail estimate
//   tail(N) <= S_N * q / (1 - q),  q = 2 (lambda + envelope(N-1)),
// drops below tail_tol. Requires an envelope (capability error otherwise);
// if q never falls below 1 at an affordable depth the convergence cannot be
// certified (capacity error).
inline PsiSum sum_psi(const ProportionPair& p, double tail_tol) {
  if (!(tail_tol > 0.0)) throw domain_error("sum_psi: tail_tol must be > 0");
  if (!p.has_envelope())
    throw capability_error("sum_psi: custom kind carries no decay envelope");

  // level recursions are O(1) per level, so slopes near 1/2 may take
  // thousands of levels without real cost
  const int max_depth = p.kind() == ProportionKind::custom ? 20 : 8000;
  KahanSum partial;
  double tail = std::numeric_limits<double>::infinity();
  int depth = 0;

  if (p.kind() == ProportionKind::custom) {
    auto run = [&](int d) {
      auto lv = detail::enumerate_levels(p, d);
      KahanSum s;
      for (double x : lv.sums) s.add(x);
      double q = 2.0 * (p.lambda() + decay_envelope(p, d >= 1 ? d - 1 : 0));
      double t = q < 1.0 ? lv.sums.back() * q / (1.0 - q)
                         : std::numeric_limits<double>::infinity();
      return std::make_pair(s.value(), t);
    };
    for (int d = 6; d <= max_depth; d += 2) {
      auto [tot, t] = run(d);
      partial = KahanSum();
      partial.add(tot);
      tail = t;
      depth = d;
      if (tail <= tail_tol) break;
    }
  } else {
    detail::LevelSums levels(p);
    double s_n = 1.0;
    partial.add(s_n);
    for (int n = 1; n <= max_depth; ++n) {
      s_n = levels[static_cast<std::size_t>(n)];
      partial.add(s_n);
      depth = n;
      if (n >= 2) {
        double q = 2.0 * (p.lambda() + decay_envelope(p, static_cast<std::size_t>(n - 1)));
        if (q < 1.0) {
          tail = s_n * q / (1.0 - q);
          if (tail <= tail_tol) break;
        }
      }
      if (s_n == 0.0) {  // level mass vanished below double resolution
        tail = 0.0;
        break;
      }
    }
  }

  if (!(tail <= tail_tol))
    throw capacity_error(
        "sum_psi: convergence not certified (2(lambda+envelope) >= 1 or tail " +
            std::to_string(tail) + " > tol at depth " + std::to_string(depth) + ")",
        tail);
  double total = partial.value();
  if (!(total > 1.0))
    throw domain_error("sum_psi: total cocycle mass must exceed 1");
  return PsiSum{total, depth, tail};
}

// total with an internal near-machine tolerance, computed once per pair.
inline double cached_total(const ProportionPair& p) {
  auto& cache = p.sum_cache();
  std::lock_guard<std::mutex> lock(cache.mu);
  if (!cache.total_and_tail) {
    PsiSum s = sum_psi(p, 1e-15);
    cache.total_and_tail = {s.total, s.tail_bound};
  }
  return cache.total_and_tail->first;
}

struct MassResult {
  double value;
  double error;  // certified absolute bound
};

namespace detail {

// Count fraction c_n(a)/2^n of length-n words preceding the coding a:
// c_n(a) = sum_{j<=n} [a_j = 1] 2^(n-j) + [a_{n+1} = 1].
class LeftCountFractions {
public:
  explicit LeftCountFractions(const Coding& a) : a_(a) {}

  double operator()(std::size_t n) {
    while (dyadic_.size() <= n) {
      std::size_t m = dyadic_.size();  // computing b_m = sum_{j<=m}[a_j]2^-j
      double prev = m == 0 ? 0.0 : dyadic_.back();
      double add = (m >= 1 && a_.letter(m - 1) == 1) ? std::ldexp(1.0, -static_cast<int>(m)) : 0.0;
      dyadic_.push_back(prev + add);
    }
    double chat = dyadic_[n];
    if (a_.letter(n) == 1) chat += std::ldexp(1.0, -static_cast<int>(n));
    return chat;
  }

private:
  const Coding& a_;
  std::vector<double> dyadic_;
};

}  // namespace detail

// Sum of Psi over all words preceding the coding a in the gap order; the
// unnormalized embedding mass. Certified to tol.
inline MassResult left_mass(const ProportionPair& p, const Coding& a,
                            double tol);

// Sum of theta_i(u) Psi(u) over u preceding a.
inline MassResult weighted_left_mass(const ProportionPair& p, int i,
                                     const Coding& a, double tol);

// Sum of theta_i(u) Psi(u) over all finite words.
inline MassResult weighted_total_mass(const ProportionPair& p, int i,
                                      double tol);

namespace detail {

// Direct series for the constant / length-only kinds:
//   left = sum_n Q_n chat_n(a),  Q_n = 2^n prod_{m<n}(lambda+eps_m),
// optionally weighted by eps_n. Tail is geometric with ratio
// 2(lambda+envelope).
inline MassResult series_left_mass(const ProportionPair& p, const Coding& a,
                                   bool weighted, double tol) {
  detail::LeftCountFractions chat(a);
  KahanSum acc;
  double q_n = 1.0;  // Q_n
  const int cap = 20000;
  for (int n = 0; n <= cap; ++n) {
    double eps_n = p.kind() == ProportionKind::length_only
                       ? p.sequence().value(static_cast<std::size_t>(n))
                       : 0.0;
    double term = q_n * chat(static_cast<std::size_t>(n));
    if (weighted) term *= eps_n;
    acc.add(term);
    double env = n >= 1 ? decay_envelope(p, static_cast<std::size_t>(n)) : 1.0;
    double ratio = 2.0 * (p.lambda() + env);
    q_n *= 2.0 * (p.lambda() + eps_n);
    if (n >= 2 && ratio < 1.0) {
      double tail = q_n / (1.0 - ratio);
      if (weighted) tail *= env;
      if (tail <= tol || q_n == 0.0) return {acc.value(), tail};
    }
  }
  throw capacity_error("left_mass: series did not certify tolerance", tol);
}

// Case (b): theta_1 lives on the single chain (01)^k, so weighted masses are
// direct chain sums.
inline MassResult case_b_chain_sum(const ProportionPair& p, const Coding* a,
                                   bool left_of_a, double tol) {
  KahanSum acc;
  double chain = 1.0;  // lambda^k prod_{r<k}(lambda+eps_r)
  const double r_bound = p.lambda() * (p.lambda() + p.sequence().value(0));
  Word w01;
  const int cap = 600;
  for (int k = 0; k <= cap; ++k) {
    double term = p.sequence().value(static_cast<std::size_t>(k)) * chain;
    bool include = true;
    if (a != nullptr) {
      Ordering o = compare(w01, *a);
      include = left_of_a ? (o == Ordering::less) : (o == Ordering::greater);
    }
    if (include) acc.add(term);
    double tail = term * r_bound / (1.0 - r_bound);
    if (k >= 1 && tail <= tol) return {acc.value(), tail};
    chain *= p.lambda() * (p.lambda() + p.sequence().value(static_cast<std::size_t>(k)));
    w01 = w01.concat(Word("01"));
  }
  throw capacity_error("case-b chain sum did not certify tolerance", tol);
}

// Case (b) left mass by unrolling the shift relations
//   Left(0b) = lambda Left(b)
//   Left(1b) = Total - lambda (Total - Left(b)) - CB(b),
// where CB(b) sums eps_k Psi((01)^k) over chain words right of b.
inline MassResult case_b_left_mass(const ProportionPair& p, const Coding& a,
                                   double tol) {
  double total = cached_total(p);
  double lam = p.lambda();
  int M = static_cast<int>(std::ceil(std::log(std::max(tol, 1e-300) / (4.0 * total)) /
                                     std::log(lam))) + 2;
  M = std::max(M, 4);
  double cb_tol = tol * (1.0 - lam) / 4.0;
  double x = total / 2.0;
  double err = total / 2.0;
  for (int j = M - 1; j >= 0; --j) {
    Coding b = a.shifted(static_cast<std::size_t>(j) + 1);
    double cb_err = 0.0;
    if (a.letter(static_cast<std::size_t>(j)) == 0) {
      x = lam * x;
    } else {
      MassResult cb = case_b_chain_sum(p, &b, /*left_of_a=*/false, cb_tol);
      x = total - lam * (total - x) - cb.value;
      cb_err = cb.error;
    }
    err = lam * err + cb_err;
  }
  err += 4e-15 * total;  // cached-total truncation amplified through the unroll
  return {x, err};
}

// Custom kind fallback: in-order enumeration to an affordable depth with the
// envelope-certified tail.
inline MassResult enumerated_left_mass(const ProportionPair& p, const Coding& a,
                                       int i_weighted, double tol) {
  if (!p.has_envelope())
    throw capability_error("left_mass: custom kind carries no decay envelope");
  int depth = 16;
  auto lv = enumerate_levels(p, depth);
  // gather every word of length <= depth with its Psi by re-expansion
  KahanSum acc;
  std::function<void(const Word&, int)> walk = [&](const Word& w, int remaining) {
    if (remaining > 0) walk(w.append(0), remaining - 1);
    if (precedes(w, a)) {
      double val = psi(p, w);
      if (i_weighted >= 0) val *= p.theta(i_weighted, w);
      acc.add(val);
    }
    if (remaining > 0) walk(w.append(1), remaining - 1);
  };
  walk(Word(), depth);
  double q = 2.0 * (p.lambda() + decay_envelope(p, static_cast<std::size_t>(depth - 1)));
  double tail = q < 1.0 ? lv.sums.back() * q / (1.0 - q)
                        : std::numeric_limits<double>::infinity();
  if (i_weighted >= 0) tail *= decay_envelope(p, static_cast<std::size_t>(depth));
  if (!(tail <= tol))
    throw capacity_error("left_mass: tolerance unreachable at affordable depth",
                         tail);
  return {acc.value(), tail};
}

}  // namespace detail

inline MassResult left_mass(const ProportionPair& p, const Coding& a,
                            double tol) {
  switch (p.kind()) {
    case ProportionKind::constant_zero:
    case ProportionKind::length_only:
      return detail::series_left_mass(p, a, /*weighted=*/false, tol);
    case ProportionKind::case_b:
      return detail::case_b_left_mass(p, a, tol);
    case ProportionKind::custom:
      return detail::enumerated_left_mass(p, a, -1, tol);
  }
  throw domain_error("left_mass: unknown kind");
}

inline MassResult weighted_left_mass(const ProportionPair& p, int i,
                                     const Coding& a, double tol) {
  switch (p.kind()) {
    case ProportionKind::constant_zero:
      return {0.0, 0.0};
    case ProportionKind::length_only:
      return detail::series_left_mass(p, a, /*weighted=*/true, tol);
    case ProportionKind::case_b:
      if (i != 1) return {0.0, 0.0};
      return detail::case_b_chain_sum(p, &a, /*left_of_a=*/true, tol);
    case ProportionKind::custom:
      return detail::enumerated_left_mass(p, a, i, tol);
  }
  throw domain_error("weighted_left_mass: unknown kind");
}

inline MassResult weighted_total_mass(const ProportionPair& p, int i,
                                      double tol) {
  switch (p.kind()) {
    case ProportionKind::constant_zero:
      return {0.0, 0.0};
    case ProportionKind::length_only: {
      // all words precede 1^inf except none weighted... total = sum_n eps_n Q_n
      return detail::series_left_mass(p, ones_coding(), /*weighted=*/true, tol);
    }
    case ProportionKind::case_b:
      if (i != 1) return {0.0, 0.0};
      return detail::case_b_chain_sum(p, nullptr, false, tol);
    case ProportionKind::custom:
      return detail::enumerated_left_mass(p, ones_coding(), i, tol);
  }
  throw domain_error("weighted_total_mass: unknown kind");
}

// Total cocycle mass of the subtree rooted at a fixed-depth word: C(v) =
// sum over all u of Psi(v u). Closed forms exist for each built-in kind:
//   constant:     C(v) = lambda^D * Total
//   length-only:  C(v) = sum_m 2^m P(D+m), the same for every v of length D
//   case-b:       C(v) = lambda^D [ Total + sum_j Psi(u_j) (corr_j(v) - 1) ]
// where u_j runs over the alternating continuations of v (the only words
// whose prepended suffixes can complete some (01)^k).
class SubtreeMass {
public:
  SubtreeMass(const ProportionPair& p, std::size_t leaf_depth)
      : p_(p), depth_(leaf_depth) {
    switch (p.kind()) {
      case ProportionKind::constant_zero:
        level_mass_ = std::pow(p.lambda(), static_cast<double>(depth_)) *
                      cached_total(p);
        per_leaf_error_ = 1e-15 * level_mass_;
        break;
      case ProportionKind::length_only: {
        double prod = 1.0;  // P(depth)
        for (std::size_t j = 0; j < depth_; ++j)
          prod *= p.lambda() + p.sequence().value(j);
        KahanSum acc;
        double term = prod;
        double tail = 0.0;
        for (std::size_t m = 0; m < 2000; ++m) {
          acc.add(term);
          double eps = p.sequence().value(depth_ + m);
          term *= 2.0 * (p.lambda() + eps);
          double ratio = 2.0 * (p.lambda() + decay_envelope(p, depth_ + m));
          if (ratio < 1.0) {
            tail = term / (1.0 - ratio);
            if (tail <= 1e-16 * acc.value() || term == 0.0) break;
          }
        }
        level_mass_ = acc.value();
        per_leaf_error_ = tail + 1e-15 * level_mass_;
        break;
      }
      case ProportionKind::case_b: {
        total_ = cached_total(p);
        lam_pow_ = std::pow(p.lambda(), static_cast<double>(depth_));
        chain_psi_[0].resize(kChainLen);
        chain_psi_[1].resize(kChainLen);
        std::string alt0, alt1;
        for (std::size_t j = 0; j < kChainLen; ++j) {
          chain_psi_[0][j] = psi(p, Word(alt0));
          chain_psi_[1][j] = psi(p, Word(alt1));
          alt0 += (j % 2 == 0) ? '0' : '1';
          alt1 += (j % 2 == 0) ? '1' : '0';
        }
        per_leaf_error_ = lam_pow_ * total_ * 1e-13;
        break;
      }
      case ProportionKind::custom:
        available_ = false;
        break;
    }
  }

  bool available() const { return available_; }
  double per_leaf_error() const { return per_leaf_error_; }

  double operator()(const Word& v) const {
    if (!available_)
      throw capability_error("SubtreeMass: no closed form for custom kinds");
    if (v.size() != depth_)
      throw domain_error("SubtreeMass: word length must equal leaf depth");
    switch (p_.kind()) {
      case ProportionKind::constant_zero:
      case ProportionKind::length_only:
        return level_mass_;
      case ProportionKind::case_b:
        return case_b_mass(v);
      case ProportionKind::custom:
        break;
    }
    throw domain_error("SubtreeMass: unreachable");
  }

private:
  static constexpr std::size_t kChainLen = 80;

  double case_b_mass(const Word& v) const {
    const std::size_t T = v.size();
    const double lam = p_.lambda();
    // suffix lengths t whose suffix matches the alternating pattern 0101..
    // and whose preceding letter is 1; all valid t share one parity
    std::vector<std::size_t> valid_t;
    for (std::size_t t = 0; t < T; ++t) {
      if (v.letter(T - t - 1) != 1) continue;
      bool ok = true;
      for (std::size_t r = 0; r < t; ++r)
        if (v.letter(T - t + r) != static_cast<int>(r % 2)) {
          ok = false;
          break;
        }
      if (ok) valid_t.push_back(t);
    }
    if (valid_t.empty()) return lam_pow_ * total_;
    std::size_t parity = valid_t.front() % 2;
    // continuation parity: first letter of u is the opposite of v's last
    std::size_t chain_idx = v.letter(T - 1) == 1 ? 0 : 1;
    KahanSum corr;
    for (std::size_t j = parity; j < kChainLen; j += 2) {
      double prod = 1.0;
      for (std::size_t t : valid_t)
        prod *= 1.0 + p_.sequence().value((t + j) / 2) / lam;
      corr.add(chain_psi_[chain_idx][j] * (prod - 1.0));
    }
    return lam_pow_ * (total_ + corr.value());
  }

  const ProportionPair& p_;
  std::size_t depth_;
  bool available_ = true;
  double level_mass_ = 0.0;
  double total_ = 0.0;
  double lam_pow_ = 0.0;
  double per_leaf_error_ = 0.0;
  std::vector<double> chain_psi_[2];
};

inline nlohmann::ordered_json ProportionPair::to_json() const {
  nlohmann::ordered_json j;
  j["lambda"] = lambda();
  j["kind"] = to_string(kind());
  switch (kind()) {
    case ProportionKind::constant_zero:
      j["params"] = nlohmann::ordered_json::object();
      break;
    case ProportionKind::length_only:
    case ProportionKind::case_b: {
      nlohmann::ordered_json params;
      const EpsilonSequence& s = sequence();
      params["family"] = to_string(s.kind());
      switch (s.kind()) {
        case EpsilonKind::a_s1: params["gamma"] = s.gamma(); break;
        case EpsilonKind::a_finite: params["s"] = s.regularity(); break;
        case EpsilonKind::a_infty: break;
        case EpsilonKind::b_finite:
          params["s"] = s.regularity();
          params["eps0"] = s.eps0();
          break;
        case EpsilonKind::b_infty: params["eps0"] = s.eps0(); break;
      }
      j["params"] = params;
      break;
    }
    case ProportionKind::custom:
      throw capability_error("ProportionPair: custom kinds are not serializable");
  }
  return j;
}

template <class Json>
inline ProportionPair ProportionPair::from_json(const Json& j) {
  double lambda = j.at("lambda").template get<double>();
  std::string kind = j.at("kind").template get<std::string>();
  if (kind == "constant-zero") return ProportionPair::constant(lambda);
  const auto& params = j.at("params");
  std::string family = params.at("family").template get<std::string>();
  double inf = std::numeric_limits<double>::infinity();
  EpsilonSequence seq = [&]() {
    if (family == "a-s1")
      return gen_case_a(lambda, 1.0, params.at("gamma").template get<double>());
    if (family == "a-finite")
      return gen_case_a(lambda, params.at("s").template get<double>());
    if (family == "a-infty") return gen_case_a(lambda, inf);
    if (family == "b-finite")
      return gen_case_b(lambda, params.at("s").template get<double>(),
                        params.at("eps0").template get<double>());
    if (family == "b-infty")
      return gen_case_b(lambda, inf, params.at("eps0").template get<double>());
    throw domain_error("ProportionPair: unknown family '" + family + "'");
  }();
  if (kind == "length-only") return ProportionPair::length_only(lambda, seq);
  if (kind == "case-b") return ProportionPair::case_b(lambda, seq);
  throw domain_error("ProportionPair: unknown kind '" + kind + "'");
}

}  // namespace ifskit
