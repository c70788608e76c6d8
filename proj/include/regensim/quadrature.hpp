#pragma once

#include <cmath>
#include <functional>

#include "regensim/errors.hpp"

namespace regensim {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double m, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth, int max_depth, bool* converged) {
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double h6 = (b - a) / 12.0;
  double left = h6 * (fa + 4.0 * flm + fm);
  double right = h6 * (fm + 4.0 * frm + fb);
  double err = left + right - whole;
  // the relative floor stops the recursion once the correction is at the
  // rounding scale of the partial sums, where halving tol forever cannot help
  double floor = 4e-15 * (std::abs(left) + std::abs(right));
  if (std::abs(err) <= 15.0 * tol || std::abs(err) <= floor || depth >= max_depth) {
    if (depth >= max_depth && std::abs(err) > std::max(15.0 * tol, floor)) *converged = false;
    return left + right + err / 15.0;
  }
  return simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth, converged) +
         simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth, converged);
}

}  // namespace detail

// Adaptive Simpson with Richardson correction. `tol` is an absolute target
// for the whole interval. Throws quadrature_nonconvergence when the recursion
// bottoms out without meeting the local tolerance.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a);
  double fm = f(m);
  double fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  bool converged = true;
  double v = detail::simpson_step(f, a, m, b, fa, fm, fb, whole, tol, 0, max_depth, &converged);
  if (!converged) throw quadrature_nonconvergence("adaptive_simpson: max depth reached");
  return v;
}

// Monotone bisection inverse of an increasing function on [lo, hi].
template <class F>
double bisect_increasing(const F& f, double target, double lo, double hi, double xtol = 1e-13,
                         int max_iter = 200) {
  double flo = f(lo) - target;
  if (flo > 0.0) return lo;
  for (int i = 0; i < max_iter && hi - lo > xtol * (1.0 + std::abs(lo)); ++i) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) - target <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace regensim
