#pragma once

#include "genestim/core.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace genestim::roots {

// Bisection on [lo, hi] for a sign change of f. Stops when the bracket is
// narrower than tol or stops shrinking in floating point.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12, int max_iter = 400) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) fail(ErrorKind::Numeric, "bisection: no sign change on bracket");
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Bisection for the boundary between a region where pred holds and one where
// it fails. pred(lo) != pred(hi) is required; returns a point within tol of
// the switch.
template <class Pred>
double bisect_predicate(Pred&& pred, double lo, double hi, double tol = 1e-12,
                        int max_iter = 400) {
  bool plo = pred(lo);
  if (plo == pred(hi)) fail(ErrorKind::Numeric, "bisect_predicate: no switch on bracket");
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid) == plo)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Bisection to full floating-point resolution for a monotone increasing f
// and target value.
template <class F>
double bisect_increasing_to_resolution(F&& f, double target, double lo, double hi) {
  for (int it = 0; it < 2000; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

}  // namespace genestim::roots
