#pragma once

#include "genestim/core.hpp"
#include "genestim/expectation.hpp"
#include "genestim/family.hpp"
#include "genestim/fisher.hpp"
#include "genestim/linalg.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>

namespace genestim {

// g(., theta) at a fixed parameter: a function of the outcome only.
using EstimatorSlice = std::function<Vec(const Outcome&)>;

// Candidate estimating function f(y, theta). No mean-zero or orthogonality
// requirement; orthogonalize() turns it into a generalized estimator.
struct PreEstimator {
  std::string label;
  int dim = 1;
  std::function<Vec(const Outcome&, const Vec&)> f;

  // A point estimator t(y), constant on the parameter space.
  static PreEstimator point(std::string label, std::function<double(const Outcome&)> t) {
    return {std::move(label), 1, [t = std::move(t)](const Outcome& y, const Vec&) {
              return scalar_vec(t(y));
            }};
  }
};

// Generalized estimator g(y, theta) in R^k. Evaluation is staged: bind(theta)
// does any theta-dependent precomputation (centering, projections, variance
// scaling) once and returns the slice y -> g(y, theta).
class GeneralizedEstimator {
 public:
  using Binder = std::function<EstimatorSlice(const Vec& param)>;
  using Gradient = std::function<Mat(const Outcome&, const Vec&)>;

  GeneralizedEstimator() = default;
  GeneralizedEstimator(std::string label, int dim, Binder bind, Gradient gradient = {})
      : label_(std::move(label)), dim_(dim), bind_(std::move(bind)), gradient_(std::move(gradient)) {}

  // Wraps f directly, with no centering or projection. Used for functions
  // already known to satisfy the contract, and for deliberately invalid
  // estimators in diagnostics.
  static GeneralizedEstimator unchecked(const PreEstimator& pre, Gradient gradient = {}) {
    auto f = pre.f;
    return GeneralizedEstimator(
        pre.label, pre.dim,
        [f](const Vec& param) { return EstimatorSlice([f, param](const Outcome& y) { return f(y, param); }); },
        std::move(gradient));
  }

  const std::string& label() const { return label_; }
  int dim() const { return dim_; }
  EstimatorSlice bind(const Vec& param) const { return bind_(param); }
  Vec operator()(const Outcome& y, const Vec& param) const { return bind_(param)(y); }

  // Optional analytic d g_b / d theta^a (interest coordinates only).
  const Gradient& gradient_interest() const { return gradient_; }
  bool has_gradient() const { return static_cast<bool>(gradient_); }

  GeneralizedEstimator relabeled(std::string label) const {
    GeneralizedEstimator g = *this;
    g.label_ = std::move(label);
    return g;
  }

 private:
  std::string label_;
  int dim_ = 1;
  Binder bind_;
  Gradient gradient_;
};

// The orthogonalized score s = grad l - I_cross I_nuis^{-1} nuisance score.
// With no nuisance parameter it is the plain score.
inline GeneralizedEstimator score_estimator(const ExpectationEngine& engine, const ModelFamily& family) {
  auto fam = std::make_shared<const ModelFamily>(family);
  return GeneralizedEstimator(
      "score", family.dim_interest, [engine, fam](const Vec& param) {
        Mat coef = Mat::Zero(fam->dim_interest, fam->dim_nuisance);
        if (fam->dim_nuisance > 0) coef = fisher_info(engine, *fam, param).projection_coefficients();
        return EstimatorSlice([fam, param, coef](const Outcome& y) {
          return orthogonal_score(*fam, y, param, coef);
        });
      });
}

struct OrthogonalizationTerms {
  Vec mean;                 // E f
  Mat coefficients;         // f^T projection: B with P f = B * nuisance score
  bool gram_singular = false;  // pseudo-inverse used
};

inline OrthogonalizationTerms orthogonalization_terms(const ExpectationEngine& engine,
                                                      const ModelFamily& family,
                                                      const PreEstimator& pre, const Vec& param) {
  const int k = pre.dim;
  const int kp = family.dim_nuisance;
  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    Vec fy = pre.f(y, param);
    Vec out(k + k * kp + kp * kp);
    out.head(k) = fy;
    if (kp > 0) {
      Vec sn = score_nuisance(family, y, param);
      out.segment(k, k * kp) = linalg::flatten(fy * sn.transpose());
      out.tail(kp * kp) = linalg::flatten(sn * sn.transpose());
    }
    return out;
  });
  OrthogonalizationTerms t;
  t.mean = e.value.head(k);
  t.coefficients = Mat::Zero(k, kp);
  if (kp > 0) {
    Mat cross = linalg::unflatten(e.value.segment(k, k * kp), k, kp);
    Mat gram = linalg::unflatten(e.value.tail(kp * kp), kp, kp);
    if (linalg::is_singular(gram)) {
      t.gram_singular = true;
      t.coefficients = cross * linalg::pinv_sym(gram);
    } else {
      t.coefficients = cross * linalg::inv_spd(gram, "nuisance score Gram matrix");
    }
  }
  return t;
}

// f_perp = f - E f - P f, with P the projection onto the span of the
// nuisance score. Lazy: the subtraction is recomputed at each bound theta.
inline GeneralizedEstimator orthogonalize(const ExpectationEngine& engine, const ModelFamily& family,
                                          const PreEstimator& pre) {
  auto fam = std::make_shared<const ModelFamily>(family);
  auto f = std::make_shared<const PreEstimator>(pre);
  return GeneralizedEstimator(pre.label + "_perp", pre.dim, [engine, fam, f](const Vec& param) {
    OrthogonalizationTerms t = orthogonalization_terms(engine, *fam, *f, param);
    return EstimatorSlice([fam, f, param, t](const Outcome& y) {
      Vec out = f->f(y, param) - t.mean;
      if (fam->dim_nuisance > 0) out -= t.coefficients * score_nuisance(*fam, y, param);
      return out;
    });
  });
}

// V(g) = E[g g^T] at param.
inline Mat estimator_variance(const ExpectationEngine& engine, const ModelFamily& family,
                              const GeneralizedEstimator& g, const Vec& param) {
  EstimatorSlice slice = g.bind(param);
  const int k = g.dim();
  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    Vec v = slice(y);
    return linalg::flatten(v * v.transpose());
  });
  return linalg::symmetrize(linalg::unflatten(e.value, k, k));
}

// V(g)^{-1/2} via the symmetric eigendecomposition. Throws with diagnostics
// when V(g) is not positive definite.
inline Mat standardizing_matrix(const ExpectationEngine& engine, const ModelFamily& family,
                                const GeneralizedEstimator& g, const Vec& param) {
  Mat v = estimator_variance(engine, family, g, param);
  if (linalg::condition_number(v) > 1e12)
    fail(ErrorKind::Numeric, g.label() + ": V(g) is not positive definite (condition number " +
                                 std::to_string(linalg::condition_number(v)) + ")");
  return linalg::inv_sqrt_spd(v, "V(g)");
}

// g_bar = V(g)^{-1/2} g.
inline GeneralizedEstimator standardize(const ExpectationEngine& engine, const ModelFamily& family,
                                        const GeneralizedEstimator& g) {
  auto fam = std::make_shared<const ModelFamily>(family);
  return GeneralizedEstimator(g.label() + "_bar", g.dim(), [engine, fam, g](const Vec& param) {
    Mat w = standardizing_matrix(engine, *fam, g, param);
    EstimatorSlice slice = g.bind(param);
    return EstimatorSlice([w, slice](const Outcome& y) { return Vec(w * slice(y)); });
  });
}

inline EstimatorSlice standardize(const ExpectationEngine& engine, const ModelFamily& family,
                                  const GeneralizedEstimator& g, const Vec& param) {
  return standardize(engine, family, g).bind(param);
}

}  // namespace genestim
