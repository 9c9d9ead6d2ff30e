#pragma once

#include "genestim/core.hpp"
#include "genestim/expectation.hpp"
#include "genestim/family.hpp"
#include "genestim/linalg.hpp"
#include "genestim/numdiff.hpp"

#include <optional>
#include <string>

namespace genestim {

// Central-difference score of log_density, ignoring any analytic score.
inline Vec finite_difference_score(const ModelFamily& family, const Outcome& y, const Vec& param) {
  return numdiff::central_gradient([&](const Vec& p) { return family.log_density(y, p); }, param);
}

// Full score (interest block first, then nuisance block).
inline Vec score(const ModelFamily& family, const Outcome& y, const Vec& param) {
  if (family.has_analytic_score()) {
    Vec out(family.dim());
    out.head(family.dim_interest) = family.score_interest(y, param);
    if (family.dim_nuisance > 0) out.tail(family.dim_nuisance) = family.score_nuisance(y, param);
    return out;
  }
  return finite_difference_score(family, y, param);
}

inline Vec score_interest(const ModelFamily& family, const Outcome& y, const Vec& param) {
  if (family.score_interest) return family.score_interest(y, param);
  return score(family, y, param).head(family.dim_interest);
}

inline Vec score_nuisance(const ModelFamily& family, const Outcome& y, const Vec& param) {
  if (family.dim_nuisance == 0) return Vec();
  if (family.score_nuisance) return family.score_nuisance(y, param);
  return score(family, y, param).tail(family.dim_nuisance);
}

// Row a holds d score / d param_a.
inline Mat score_jacobian(const ModelFamily& family, const Outcome& y, const Vec& param) {
  if (family.score_jacobian) return family.score_jacobian(y, param);
  return numdiff::central_jacobian_rows([&](const Vec& p) { return score(family, y, p); }, param);
}

struct FisherInfo {
  Mat full;                    // E[score score^T], (k+k') x (k+k')
  Mat interest;                // I, k x k
  Mat cross;                   // I_cross, k x k'
  Mat nuisance;                // I_nuis, k' x k'
  std::optional<Mat> perp;     // I_perp; absent when I_nuis is singular
  bool nuisance_singular = false;
  Mat full_se;                 // Monte Carlo only

  // Coefficients B with (grad l)^perp = grad l - B * nuisance score.
  Mat projection_coefficients() const {
    if (nuisance.size() == 0) return Mat::Zero(interest.rows(), 0);
    return cross * linalg::inv_spd(nuisance, "nuisance information");
  }

  const Mat& bound() const {
    if (!perp) fail(ErrorKind::Numeric, "nuisance information is singular; I_perp unavailable");
    return *perp;
  }
};

inline FisherInfo make_fisher_info(const Mat& full, int k) {
  FisherInfo fi;
  fi.full = linalg::symmetrize(full);
  const int kp = static_cast<int>(full.rows()) - k;
  fi.interest = fi.full.topLeftCorner(k, k);
  fi.cross = fi.full.topRightCorner(k, kp);
  fi.nuisance = fi.full.bottomRightCorner(kp, kp);
  if (kp == 0) {
    fi.perp = fi.interest;
  } else if (linalg::is_singular(fi.nuisance)) {
    fi.nuisance_singular = true;
  } else {
    fi.perp = linalg::symmetrize(fi.interest - fi.cross * linalg::inv_spd(fi.nuisance) *
                                                   fi.cross.transpose());
  }
  return fi;
}

// I = E[s s^T] with its interest/nuisance blocks and the Schur complement I_perp.
inline FisherInfo fisher_info(const ExpectationEngine& engine, const ModelFamily& family,
                              const Vec& param) {
  const int d = family.dim();
  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    Vec s = score(family, y, param);
    return linalg::flatten(s * s.transpose());
  });
  FisherInfo fi = make_fisher_info(linalg::unflatten(e.value, d, d), family.dim_interest);
  if (e.se.size()) fi.full_se = linalg::unflatten(e.se, d, d);
  return fi;
}

// -E[d score / d param], the Hessian route to the same information matrix.
inline Mat expected_negative_hessian(const ExpectationEngine& engine, const ModelFamily& family,
                                     const Vec& param) {
  const int d = family.dim();
  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    return linalg::flatten(-score_jacobian(family, y, param));
  });
  return linalg::symmetrize(linalg::unflatten(e.value, d, d));
}

// Orthogonalized interest score (grad l)^perp at a fixed parameter, given the
// projection coefficients from fisher_info at that parameter.
inline Vec orthogonal_score(const ModelFamily& family, const Outcome& y, const Vec& param,
                            const Mat& coefficients) {
  Vec s = score(family, y, param);
  Vec out = s.head(family.dim_interest);
  if (family.dim_nuisance > 0) out -= coefficients * s.tail(family.dim_nuisance);
  return out;
}

}  // namespace genestim
