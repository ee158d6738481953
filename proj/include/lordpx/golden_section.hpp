#pragma once

#include <cmath>
#include <utility>

namespace lordpx::optim {

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes a unimodal `f` over [lo, hi] until the bracket is narrower than
/// 2 * tol, so the returned point is within `tol` of the bracketed minimum.
/// One function evaluation per iteration after the first two.
template <class F>
GoldenResult golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iter = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  GoldenResult res;
  while (b - a > 2.0 * tol) {
    if (res.iterations >= max_iter) break;
    ++res.iterations;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  res.converged = b - a <= 2.0 * tol;
  res.x = 0.5 * (a + b);
  res.fx = f(res.x);
  // The midpoint is evaluated fresh; keep whichever interior point is best.
  if (fc < res.fx) {
    res.x = c;
    res.fx = fc;
  }
  if (fd < res.fx) {
    res.x = d;
    res.fx = fd;
  }
  return res;
}

}  // namespace lordpx::optim
