#pragma once

#include "genestim/core.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace genestim::numdiff {

// cbrt(machine epsilon), the usual central-difference step scale.
inline double central_step(double x) {
  static const double scale = std::cbrt(std::numeric_limits<double>::epsilon());
  return scale * std::max(1.0, std::abs(x));
}

// Central-difference gradient of a scalar function. Throws if a stencil
// point evaluates to a non-finite value.
template <class F>
Vec central_gradient(F&& f, const Vec& x) {
  Vec grad(x.size());
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double h = central_step(x(j));
    xp(j) = x(j) + h;
    double fp = f(xp);
    xp(j) = x(j) - h;
    double fm = f(xp);
    xp(j) = x(j);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      fail(ErrorKind::Numeric, "non-finite value in finite-difference stencil");
    grad(j) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Central-difference Jacobian of a vector function: row j holds d f / d x_j.
template <class F>
Mat central_jacobian_rows(F&& f, const Vec& x) {
  Mat jac;
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double h = central_step(x(j));
    xp(j) = x(j) + h;
    Vec fp = f(xp);
    xp(j) = x(j) - h;
    Vec fm = f(xp);
    xp(j) = x(j);
    if (!fp.allFinite() || !fm.allFinite())
      fail(ErrorKind::Numeric, "non-finite value in finite-difference stencil");
    if (jac.size() == 0) jac.resize(x.size(), fp.size());
    jac.row(j) = ((fp - fm) / (2.0 * h)).transpose();
  }
  return jac;
}

struct RiddersResult {
  Vec derivative;
  double error_estimate = 0.0;
};

// Ridders' extrapolated central difference of a vector-valued function of one
// variable. Successive step reductions by 1.4 with a Neville tableau; stops
// when the error estimate starts growing.
template <class F>
RiddersResult ridders(F&& f, double x, double h0) {
  constexpr int ntab = 12;
  constexpr double con = 1.4;
  constexpr double con2 = con * con;
  constexpr double safe = 2.0;

  std::vector<std::vector<Vec>> a(ntab, std::vector<Vec>(ntab));
  double h = h0;
  auto diff = [&](double step) {
    Vec fp = f(x + step);
    Vec fm = f(x - step);
    if (!fp.allFinite() || !fm.allFinite())
      fail(ErrorKind::Numeric, "non-finite value in Ridders stencil");
    return Vec((fp - fm) / (2.0 * step));
  };
  a[0][0] = diff(h);
  RiddersResult best{a[0][0], std::numeric_limits<double>::infinity()};
  for (int i = 1; i < ntab; ++i) {
    h /= con;
    a[0][i] = diff(h);
    double fac = con2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= con2;
      double errt = std::max((a[j][i] - a[j - 1][i]).cwiseAbs().maxCoeff(),
                             (a[j][i] - a[j - 1][i - 1]).cwiseAbs().maxCoeff());
      if (errt <= best.error_estimate) {
        best.error_estimate = errt;
        best.derivative = a[j][i];
      }
    }
    if ((a[i][i] - a[i - 1][i - 1]).cwiseAbs().maxCoeff() >= safe * best.error_estimate) break;
  }
  return best;
}

}  // namespace genestim::numdiff
