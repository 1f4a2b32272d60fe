#pragma once

#include <cmath>
#include <functional>

#include "thermobound/types.hpp"

namespace thermo {

// Composite Simpson weights on a uniform grid with spacing h.  Odd node
// counts use the classic rule; even counts finish with a 3/8 tail so the
// whole rule stays 4th order.  m >= 3.
inline Array simpson_weights(Index m, double h) {
  if (m < 3) throw std::domain_error("Simpson quadrature needs at least 3 nodes");
  Array w = Array::Zero(m);
  const Index third_end = (m % 2 == 1) ? m - 1 : m - 4;  // last node of the 1/3 section
  for (Index i = 0; i + 2 <= third_end; i += 2) {
    w[i] += h / 3;
    w[i + 1] += 4 * h / 3;
    w[i + 2] += h / 3;
  }
  if (m % 2 == 0) {
    const Index j = m - 4;  // 3/8 rule on the last three intervals
    w[j] += 3 * h / 8;
    w[j + 1] += 9 * h / 8;
    w[j + 2] += 9 * h / 8;
    w[j + 3] += 3 * h / 8;
  }
  return w;
}

// Integral of nodal values on a uniform grid.
inline double integrate_nodes(const Array& values, double h) {
  return (simpson_weights(values.size(), h) * values).sum();
}

namespace detail {
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol) {
    return left + right + delta / 15;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

// Adaptive Simpson integration; used for validating prior normalization,
// never as the oracle for bound values.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-11, int max_depth = 48) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace thermo
