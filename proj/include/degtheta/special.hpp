#pragma once

// beta_{3/2} and a small adaptive quadrature used by the Eichler integral.

#include "degtheta/errors.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace degtheta {

// beta_{3/2}(t) = int_1^inf u^{-3/2} e^{-tu} du = 2 e^{-t} - 2 sqrt(pi t) erfc(sqrt t).
// beta_{3/2}(0) = 2 exactly; 0 <= beta_{3/2}(t) <= 2 e^{-t}.
inline double beta32(double t) {
  if (t < 0) throw negative_argument_error("beta32: negative argument");
  if (t == 0) return 2.0;
  double rt = std::sqrt(t);
  return 2.0 * std::exp(-t) - 2.0 * std::sqrt(std::numbers::pi * t) * std::erfc(rt);
}

namespace detail {

inline double simpson_rule(const std::function<double(double)>& f, double a, double fa,
                           double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double fa, double b, double fb, double m, double fm,
                                   double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson_rule(f, a, fa, m, fm, lm, flm);
  double right = simpson_rule(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0) throw truncation_error("adaptive_simpson: recursion limit reached");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_depth = 48) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  double whole = detail::simpson_rule(f, a, fa, b, fb, m, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace degtheta
