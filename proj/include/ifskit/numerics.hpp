#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ifskit/errors.hpp"

namespace ifskit {

// Neumaier-compensated accumulator. Used wherever many small positive terms
// are summed (cocycle totals, prefix masses, quadrature).
class KahanSum {
public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline double simpson(double fa, double fm, double fb, double h) {
  return (h / 6.0) * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(fa, flm, fm, m - a);
  double right = simpson(fm, frm, fb, b - m);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with Richardson acceptance test.
inline double adaptive_quadrature(const std::function<double(double)>& f,
                                  double a, double b, double tol,
                                  int max_depth = 40) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = detail::simpson(fa, fm, fb, b - a);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol,
                                      max_depth);
}

// Monotone cubic interpolant (Fritsch-Carlson slope limiting) on a strictly
// increasing abscissa grid. Preserves monotonicity of the data.
class MonotoneCubic {
public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw domain_error("MonotoneCubic: need two matching nodes at least");
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double h = x_[i + 1] - x_[i];
      if (h <= 0.0) throw domain_error("MonotoneCubic: grid not increasing");
      d[i] = (y_[i + 1] - y_[i]) / h;
    }
    m_.assign(n, 0.0);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0)
        m_[i] = 0.0;
      else {
        double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
        m_[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
      }
    }
    // Fritsch-Carlson limiter
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (d[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
      } else {
        double a = m_[i] / d[i], b = m_[i + 1] / d[i];
        double s = a * a + b * b;
        if (s > 9.0) {
          double t = 3.0 / std::sqrt(s);
          m_[i] = t * a * d[i];
          m_[i + 1] = t * b * d[i];
        }
      }
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    std::size_t i =
        static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) -
                                 x_.begin()) -
        1;
    double h = x_[i + 1] - x_[i];
    double t = (x - x_[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * m_[i] + h01 * y_[i + 1] + h * h11 * m_[i + 1];
  }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }

private:
  std::vector<double> x_, y_, m_;
};

// Chebyshev-spaced nodes on [0,1] (endpoints included, increasing).
inline std::vector<double> chebyshev_nodes(std::size_t count) {
  std::vector<double> x(count);
  const double pi = 3.14159265358979323846;
  for (std::size_t j = 0; j < count; ++j)
    x[j] = 0.5 * (1.0 - std::cos(pi * static_cast<double>(j) /
                                 static_cast<double>(count - 1)));
  x.front() = 0.0;
  x.back() = 1.0;
  return x;
}

}  // namespace ifskit
