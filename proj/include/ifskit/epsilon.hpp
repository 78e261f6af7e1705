#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "ifskit/errors.hpp"

namespace ifskit {

enum class EpsilonKind {
  a_s1,      // eps_n = lambda * n^(-gamma), eps_0 = 0
  a_finite,  // eps_{n+1} = eps_n * (lambda+eps_n)^(s-1), eps_1 = lambda^(s-1)
  a_infty,   // eps_{n+1} = eps_n^((n+1)/n) * (lambda+eps_n)^(n+1), eps_1 = lambda
  b_finite,  // eps_{k+1} = lambda^(s-1) * eps_k * (lambda+eps_k)^(s-1)
  b_infty    // eps_{k+1} = lambda^(k+1) * eps_k^((k+1)/k) * (lambda+eps_k)^(k+1)
};

inline const char* to_string(EpsilonKind k) {
  switch (k) {
    case EpsilonKind::a_s1: return "a-s1";
    case EpsilonKind::a_finite: return "a-finite";
    case EpsilonKind::a_infty: return "a-infty";
    case EpsilonKind::b_finite: return "b-finite";
    case EpsilonKind::b_infty: return "b-infty";
  }
  return "?";
}

// One of the slope-perturbation sequences behind the constructed IFS
// families. Terms extend on demand behind a lock; copies share the cache.
// Values too small for double are still available as logs (the identity
// checks for the smooth families need n up to 20, where terms sit far
// below 1e-100).
class EpsilonSequence {
public:
  EpsilonSequence(EpsilonKind kind, double lambda, double s, double gamma,
                  double eps0)
      : st_(std::make_shared<State>()) {
    if (!(lambda > 0.0 && lambda < 0.5))
      throw domain_error("EpsilonSequence: lambda must be in (0, 1/2)");
    st_->kind = kind;
    st_->lambda = lambda;
    st_->s = s;
    st_->gamma = gamma;
    st_->eps0 = eps0;
  }

  EpsilonKind kind() const { return st_->kind; }
  double lambda() const { return st_->lambda; }
  double regularity() const { return st_->s; }
  double gamma() const { return st_->gamma; }
  double eps0() const { return st_->eps0; }

  double value(std::size_t n) const {
    std::lock_guard<std::mutex> lock(st_->mu);
    extend_locked(n);
    return st_->vals[n];
  }

  double log_value(std::size_t n) const {
    std::lock_guard<std::mutex> lock(st_->mu);
    extend_locked(n);
    return st_->logs[n];
  }

  bool underflowed(std::size_t n) const {
    std::lock_guard<std::mutex> lock(st_->mu);
    extend_locked(n);
    return st_->vals[n] == 0.0 && st_->logs[n] != -inf();
  }

private:
  static double inf() { return std::numeric_limits<double>::infinity(); }

  struct State {
    EpsilonKind kind{};
    double lambda = 0, s = 0, gamma = 0, eps0 = 0;
    std::mutex mu;
    std::vector<double> vals;
    std::vector<double> logs;
  };

  void extend_locked(std::size_t n) const {
    State& st = *st_;
    if (n < st.vals.size()) return;
    if (st.vals.empty()) {
      bool case_b = st.kind == EpsilonKind::b_finite ||
                    st.kind == EpsilonKind::b_infty;
      double e0 = case_b ? st.eps0 : 0.0;
      if (case_b && !(e0 > 0.0 && e0 < 0.5))
        throw domain_error("EpsilonSequence: eps0 must be in (0, 1/2)");
      st.vals.push_back(e0);
      st.logs.push_back(e0 > 0.0 ? std::log(e0) : -inf());
    }
    while (st.vals.size() <= n) {
      std::size_t m = st.vals.size();  // generating eps_m
      double prev = st.vals[m - 1];
      double lprev = st.logs[m - 1];
      double lv = -inf();
      switch (st.kind) {
        case EpsilonKind::a_s1:
          lv = std::log(st.lambda) - st.gamma * std::log(static_cast<double>(m));
          break;
        case EpsilonKind::a_finite:
          lv = (m == 1) ? (st.s - 1.0) * std::log(st.lambda)
                        : lprev + (st.s - 1.0) * std::log(st.lambda + prev);
          break;
        case EpsilonKind::a_infty:
          if (m == 1) {
            lv = std::log(st.lambda);
          } else {
            double k = static_cast<double>(m - 1);
            lv = (k + 1.0) / k * lprev +
                 (k + 1.0) * std::log(st.lambda + prev);
          }
          break;
        case EpsilonKind::b_finite:
          lv = (m == 1) ? (st.s - 1.0) * std::log(st.lambda * (st.lambda + st.eps0))
                        : (st.s - 1.0) * std::log(st.lambda) + lprev +
                              (st.s - 1.0) * std::log(st.lambda + prev);
          break;
        case EpsilonKind::b_infty:
          if (m == 1) {
            lv = std::log(st.lambda * (st.lambda + st.eps0));
          } else {
            double k = static_cast<double>(m - 1);
            lv = (k + 1.0) * std::log(st.lambda) + (k + 1.0) / k * lprev +
                 (k + 1.0) * std::log(st.lambda + prev);
          }
          break;
      }
      double v = std::exp(lv);
      if (!(st.lambda + v > 0.0 && st.lambda + v < 1.0))
        throw domain_error("EpsilonSequence: admissibility 0 < lambda+eps < 1 "
                           "violated at n=" + std::to_string(m));
      if (m >= 2 && st.kind != EpsilonKind::a_s1 && v > st.vals[m - 1])
        throw domain_error("EpsilonSequence: expected decrease failed at n=" +
                           std::to_string(m));
      st.vals.push_back(v);
      st.logs.push_back(lv);
    }
  }

  std::shared_ptr<State> st_;
};

// CSV dump (n, eps_n, log_eps_n); the log column keeps meaning after the
// value column underflows.
inline void dump_csv(const EpsilonSequence& seq, std::ostream& os,
                     std::size_t n_max) {
  os << "n,eps,log_eps\n";
  char buf[96];
  for (std::size_t n = 0; n <= n_max; ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", n, seq.value(n),
                  seq.log_value(n));
    os << buf;
  }
}

// Case (a) family: theta_i(w) = eps_{|w|} on both branches. s = 1 uses the
// polynomial sequence lambda * n^(-gamma); s = infinity is passed as
// std::numeric_limits<double>::infinity().
inline EpsilonSequence gen_case_a(double lambda, double s, double gamma = 2.0,
                                  std::size_t n_prefetch = 0) {
  if (!(lambda > 0.0 && lambda < 0.5))
    throw domain_error("gen_case_a: lambda must be in (0, 1/2)");
  if (!(s >= 1.0)) throw domain_error("gen_case_a: s must be >= 1");
  EpsilonKind kind = EpsilonKind::a_finite;
  if (s == 1.0) {
    if (!(gamma > 0.0)) throw domain_error("gen_case_a: gamma must be > 0");
    kind = EpsilonKind::a_s1;
  } else if (std::isinf(s)) {
    kind = EpsilonKind::a_infty;
  }
  EpsilonSequence seq(kind, lambda, s, gamma, 0.0);
  if (n_prefetch > 0) seq.value(n_prefetch);
  return seq;
}

// Case (b) family: theta_1((01)^k) = eps_k, every other theta value is zero.
inline EpsilonSequence gen_case_b(double lambda, double s, double eps0,
                                  std::size_t k_prefetch = 0) {
  if (!(lambda > 0.0 && lambda < 0.5))
    throw domain_error("gen_case_b: lambda must be in (0, 1/2)");
  if (!(eps0 > 0.0 && eps0 < 0.5))
    throw domain_error("gen_case_b: eps0 must be in (0, 1/2)");
  if (!(s > 1.0)) throw domain_error("gen_case_b: s must be > 1");
  EpsilonKind kind = std::isinf(s) ? EpsilonKind::b_infty : EpsilonKind::b_finite;
  EpsilonSequence seq(kind, lambda, s, 0.0, eps0);
  if (k_prefetch > 0) seq.value(k_prefetch);
  return seq;
}

}  // namespace ifskit
