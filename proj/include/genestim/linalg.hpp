#pragma once

#include "genestim/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace genestim::linalg {

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

inline double min_eigenvalue(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline Vec eigenvalues(const Mat& a) {
  if (a.size() == 0) return Vec();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// PSD up to an absolute tolerance on the smallest eigenvalue.
inline bool is_psd(const Mat& a, double tol) { return min_eigenvalue(a) >= -tol; }

inline double condition_number(const Mat& a) {
  Vec ev = eigenvalues(a);
  double lo = ev.minCoeff();
  double hi = ev.cwiseAbs().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Floor relative to the largest eigenvalue below which a symmetric matrix is
// treated as singular. Eigenvalues under the floor raise, they are never clamped.
inline constexpr double kEigenFloor = 1e-12;

enum class Power { Half, InverseHalf, Inverse };

inline Mat spd_power(const Mat& a, Power power, const char* what = "matrix") {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
  const Vec& ev = es.eigenvalues();
  double largest = ev.cwiseAbs().maxCoeff();
  double floor = kEigenFloor * largest;
  if (!(largest > 0.0) || ev.minCoeff() <= floor) {
    std::ostringstream os;
    os << what << " is not positive definite (eigenvalues";
    for (Eigen::Index i = 0; i < ev.size(); ++i) os << ' ' << ev(i);
    os << ", condition number " << condition_number(a) << ')';
    fail(ErrorKind::Numeric, os.str());
  }
  Vec d(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    switch (power) {
      case Power::Half: d(i) = std::sqrt(ev(i)); break;
      case Power::InverseHalf: d(i) = 1.0 / std::sqrt(ev(i)); break;
      case Power::Inverse: d(i) = 1.0 / ev(i); break;
    }
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline Mat sqrt_spd(const Mat& a, const char* what = "matrix") {
  return spd_power(a, Power::Half, what);
}
inline Mat inv_sqrt_spd(const Mat& a, const char* what = "matrix") {
  return spd_power(a, Power::InverseHalf, what);
}
inline Mat inv_spd(const Mat& a, const char* what = "matrix") {
  return spd_power(a, Power::Inverse, what);
}

inline bool is_singular(const Mat& a) {
  if (a.size() == 0) return false;
  Vec ev = eigenvalues(a);
  double largest = ev.cwiseAbs().maxCoeff();
  return !(largest > 0.0) || ev.minCoeff() <= kEigenFloor * largest;
}

// Moore-Penrose inverse of a symmetric PSD matrix.
inline Mat pinv_sym(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
  const Vec& ev = es.eigenvalues();
  double largest = ev.cwiseAbs().maxCoeff();
  Vec d = Vec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > kEigenFloor * largest) d(i) = 1.0 / ev(i);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

// Column-major flattening, matches Eigen's storage.
inline Vec flatten(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace genestim::linalg
