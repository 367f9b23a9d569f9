#pragma once

#include <cmath>
#include <span>

namespace netcox::quad {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson with Richardson correction; exact for quintics.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol = 1e-10,
                        int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

/// Integrates over [a, b] split at the given interior breakpoints, so that a
/// piecewise-smooth integrand is only ever sampled on smooth pieces.
template <class F>
double piecewise(const F& f, double a, double b, std::span<const double> breaks,
                 double abs_tol = 1e-10) {
  double total = 0.0;
  double lo = a;
  for (double x : breaks) {
    if (x <= lo || x >= b) continue;
    total += adaptive_simpson(f, lo, x, abs_tol);
    lo = x;
  }
  total += adaptive_simpson(f, lo, b, abs_tol);
  return total;
}

}  // namespace netcox::quad
