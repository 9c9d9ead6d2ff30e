#pragma once

#include "genestim/core.hpp"
#include "genestim/estimator.hpp"
#include "genestim/expectation.hpp"
#include "genestim/family.hpp"
#include "genestim/fisher.hpp"
#include "genestim/linalg.hpp"
#include "genestim/numdiff.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace genestim {

struct InformationReport {
  std::string label;
  ParamPoint param;
  Mat lambda;            // (E grad g_bar^T)(E grad g_bar^T)^T, covariance route
  double lambda_scalar = 0.0;
  Mat fisher_bound;      // I, or I_perp with a nuisance parameter
  Mat efficiency;        // I_perp^{-1/2} Lambda I_perp^{-1/2}
  Mat correlation;       // R = E(s_bar g_bar^T)
  std::optional<Mat> lambda_direct;  // slope route, when a gradient is available
  double route_discrepancy = 0.0;    // max |lambda_direct - lambda|
  bool score_equation_ok = true;
  Mat lambda_se;         // Monte Carlo batch-means SE; empty in exact mode
  bool monte_carlo = false;
};

namespace detail {

// Interior step for a derivative along coordinate j that keeps param +- h
// inside the family's domain.
inline double domain_safe_step(const ModelFamily& family, const Vec& param, Eigen::Index j) {
  double h = 0.05 * std::max(1.0, std::abs(param(j)));
  for (int i = 0; i < 60; ++i) {
    Vec lo = param, hi = param;
    lo(j) -= h;
    hi(j) += h;
    bool ok = (!family.in_domain || (family.in_domain(lo) && family.in_domain(hi)));
    if (ok) return h;
    h *= 0.5;
  }
  fail(ErrorKind::Domain, family.name + ": no interior step for differentiation");
}

// D with D(a, b) = d/d param_{coord_a} E_{param}[g_b(Y, param')] at param' = param,
// the measure held fixed. Coordinates listed in `coords`.
inline Mat expected_slope(const ExpectationEngine& engine, const ModelFamily& family,
                          const GeneralizedEstimator& g, const Vec& param,
                          const std::vector<Eigen::Index>& coords) {
  const int k = g.dim();
  Mat d(static_cast<Eigen::Index>(coords.size()), k);
  if (g.has_gradient()) {
    Expectation e = expect(engine, family, param, [&](const Outcome& y) {
      return linalg::flatten(g.gradient_interest()(y, param));
    });
    Mat full = linalg::unflatten(e.value, family.dim_interest, k);
    for (std::size_t a = 0; a < coords.size(); ++a) {
      require(coords[a] < family.dim_interest, "analytic gradient covers interest coordinates only");
      d.row(static_cast<Eigen::Index>(a)) = full.row(coords[a]);
    }
    return d;
  }
  for (std::size_t a = 0; a < coords.size(); ++a) {
    const Eigen::Index j = coords[a];
    double h0 = domain_safe_step(family, param, j);
    auto mean_at = [&](double x) {
      Vec shifted = param;
      shifted(j) = x;
      EstimatorSlice slice = g.bind(shifted);
      return expect(engine, family, param, [&](const Outcome& y) { return slice(y); }).value;
    };
    d.row(static_cast<Eigen::Index>(a)) = numdiff::ridders(mean_at, param(j), h0).derivative.transpose();
  }
  return d;
}

inline std::vector<Eigen::Index> coordinate_range(Eigen::Index begin, Eigen::Index count) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < count; ++i) out.push_back(begin + i);
  return out;
}

inline Mat outer_from_batches(const std::vector<Vec>& batches, Eigen::Index rows, Eigen::Index cols,
                              const std::function<Mat(const Mat&)>& stat) {
  const std::size_t m = batches.size();
  std::vector<Mat> vals;
  for (const auto& b : batches) vals.push_back(stat(linalg::unflatten(b, rows, cols)));
  Mat se = Mat::Zero(vals.front().rows(), vals.front().cols());
  for (Eigen::Index i = 0; i < se.rows(); ++i)
    for (Eigen::Index j = 0; j < se.cols(); ++j) {
      std::vector<double> v;
      for (std::size_t t = 0; t < m; ++t) v.push_back(vals[t](i, j));
      se(i, j) = batch_standard_error(v);
    }
  return se;
}

}  // namespace detail

// Relative tolerance used to compare the slope and covariance routes.
inline double route_tolerance(const ExpectationEngine& engine) {
  return engine.is_exact() ? 1e-6 : 0.05;
}

// Lambda-information of g at param, computed through the score equation
// Lambda = E(s g_bar^T) E(g_bar s^T) with s the orthogonalized score, and
// cross-checked against the slope route (E grad g_bar^T)(E grad g_bar^T)^T.
// The slope route runs in exact mode, or in Monte Carlo mode when g has an
// analytic gradient.
inline InformationReport information(const ExpectationEngine& engine, const ModelFamily& family,
                                     const GeneralizedEstimator& g, const Vec& param) {
  family.require_in_domain(param);
  const int k = family.dim_interest;
  require(g.dim() == k, g.label() + ": estimator dimension must equal the interest dimension");

  FisherInfo fi = fisher_info(engine, family, param);
  const Mat& bound = fi.bound();
  const Mat coef = family.dim_nuisance > 0 ? fi.projection_coefficients() : Mat::Zero(k, 0);
  const Mat w = standardizing_matrix(engine, family, g, param);
  EstimatorSlice slice = g.bind(param);

  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    Vec s = orthogonal_score(family, y, param, coef);
    Vec gb = w * slice(y);
    return linalg::flatten(s * gb.transpose());
  });
  Mat c = linalg::unflatten(e.value, k, k);

  InformationReport r;
  r.label = g.label();
  r.param = ParamPoint::split(param, k);
  r.lambda = linalg::symmetrize(c * c.transpose());
  r.lambda_scalar = r.lambda.trace();
  r.fisher_bound = bound;
  Mat bi = linalg::inv_sqrt_spd(bound, "fisher bound");
  r.efficiency = linalg::symmetrize(bi * r.lambda * bi);
  r.correlation = bi * c;
  r.monte_carlo = !engine.is_exact();

  if (!engine.is_exact()) {
    r.lambda_se = detail::outer_from_batches(e.batch_means, k, k, [](const Mat& cb) {
      return Mat(cb * cb.transpose());
    });
  }

  if (engine.is_exact() || g.has_gradient()) {
    Mat d = detail::expected_slope(engine, family, g, param, detail::coordinate_range(0, k));
    Mat a = d * w;
    r.lambda_direct = linalg::symmetrize(a * a.transpose());
    r.route_discrepancy = linalg::max_abs(*r.lambda_direct - r.lambda);
    double scale = std::max(1.0, linalg::max_abs(r.lambda));
    r.score_equation_ok = r.route_discrepancy <= route_tolerance(engine) * scale;
  }
  return r;
}

// Nuisance-direction information: (E nabla~ g_bar^T)(E nabla~ g_bar^T)^T, by
// the slope route over nuisance coordinates and by E(s~ g_bar^T) E(g_bar s~^T).
struct NuisanceInformation {
  Mat covariance_route;
  std::optional<Mat> slope_route;
};

inline NuisanceInformation nuisance_information(const ExpectationEngine& engine,
                                                const ModelFamily& family,
                                                const GeneralizedEstimator& g, const Vec& param) {
  const int k = g.dim();
  const int kp = family.dim_nuisance;
  require(kp > 0, family.name + ": no nuisance parameter");
  const Mat w = standardizing_matrix(engine, family, g, param);
  EstimatorSlice slice = g.bind(param);
  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    Vec sn = score_nuisance(family, y, param);
    Vec gb = w * slice(y);
    return linalg::flatten(sn * gb.transpose());
  });
  Mat c = linalg::unflatten(e.value, kp, k);
  NuisanceInformation out;
  out.covariance_route = linalg::symmetrize(c * c.transpose());
  if (engine.is_exact()) {
    GeneralizedEstimator numeric(g.label(), g.dim(), [g](const Vec& p) { return g.bind(p); });
    Mat d = detail::expected_slope(engine, family, numeric, param,
                                   detail::coordinate_range(family.dim_interest, kp));
    Mat a = d * w;
    out.slope_route = linalg::symmetrize(a * a.transpose());
  }
  return out;
}

// Residual E(grad g^T) + E(s g^T) over the interest coordinates, with s the
// full interest score. Zero for a valid generalized estimator; for a biased
// pre-estimator it equals grad E f.
inline Mat check_score_equation(const ExpectationEngine& engine, const ModelFamily& family,
                                const GeneralizedEstimator& g, const Vec& param) {
  family.require_in_domain(param);
  const int k = family.dim_interest;
  Mat d = detail::expected_slope(engine, family, g, param, detail::coordinate_range(0, k));
  EstimatorSlice slice = g.bind(param);
  Expectation e = expect(engine, family, param, [&](const Outcome& y) {
    Vec s = score_interest(family, y, param);
    return linalg::flatten(s * slice(y).transpose());
  });
  return d + linalg::unflatten(e.value, k, g.dim());
}

inline Mat check_score_equation(const ExpectationEngine& engine, const ModelFamily& family,
                                const PreEstimator& f, const Vec& param) {
  return check_score_equation(engine, family, GeneralizedEstimator::unchecked(f), param);
}

// Tolerance below which a score-equation residual certifies the identity.
inline double score_equation_tolerance(const ExpectationEngine& engine) {
  return engine.is_exact() ? 1e-8 : 1e-2;
}

struct EfficiencyEstimate {
  Mat efficiency;   // R R^T
  Mat correlation;  // R = Sigma_ss^{-1/2} Sigma_sg Sigma_gg^{-1/2}
  Mat se;           // batch-means standard error of each efficiency entry
  double scalar() const { return efficiency(0, 0); }
  double scalar_se() const { return se(0, 0); }
};

namespace detail {

inline Mat correlation_from_moments(const Vec& mean_s, const Vec& mean_g, const Mat& sss,
                                    const Mat& ssg, const Mat& sgg) {
  Mat css = linalg::symmetrize(sss - mean_s * mean_s.transpose());
  Mat csg = ssg - mean_s * mean_g.transpose();
  Mat cgg = linalg::symmetrize(sgg - mean_g * mean_g.transpose());
  if (linalg::min_eigenvalue(cgg) <= linalg::kEigenFloor * std::max(1.0, cgg.cwiseAbs().maxCoeff()))
    fail(ErrorKind::Numeric, "efficiency: degenerate sample variance of the estimator");
  return linalg::inv_sqrt_spd(css, "score covariance") * csg * linalg::inv_sqrt_spd(cgg, "estimator covariance");
}

}  // namespace detail

// Monte Carlo Lambda-efficiency as the squared sample correlation between the
// orthogonalized score and g. Sample moments are centered, so a raw point
// estimator may be passed directly.
inline EfficiencyEstimate efficiency_from_pairs(const std::vector<Vec>& s_values,
                                                const std::vector<Vec>& g_values) {
  require(s_values.size() == g_values.size() && s_values.size() >= 2,
          "efficiency: need matching score and estimator samples");
  const std::size_t n = s_values.size();
  const Eigen::Index k = s_values.front().size();
  const Eigen::Index kg = g_values.front().size();
  const std::size_t batches = std::min<std::size_t>(ExpectationEngine::kBatches, n);

  struct Moments {
    Vec ms, mg;
    Mat sss, ssg, sgg;
    double count = 0;
    Moments(Eigen::Index k, Eigen::Index kg)
        : ms(Vec::Zero(k)), mg(Vec::Zero(kg)), sss(Mat::Zero(k, k)), ssg(Mat::Zero(k, kg)),
          sgg(Mat::Zero(kg, kg)) {}
    void add(const Vec& s, const Vec& g) {
      ms += s;
      mg += g;
      sss += s * s.transpose();
      ssg += s * g.transpose();
      sgg += g * g.transpose();
      count += 1;
    }
    Moments& operator+=(const Moments& o) {
      ms += o.ms;
      mg += o.mg;
      sss += o.sss;
      ssg += o.ssg;
      sgg += o.sgg;
      count += o.count;
      return *this;
    }
    Mat correlation() const {
      return detail::correlation_from_moments(ms / count, mg / count, sss / count, ssg / count,
                                              sgg / count);
    }
  };

  std::vector<Moments> per_batch(batches, Moments(k, kg));
  for (std::size_t i = 0; i < n; ++i) per_batch[(i * batches) / n].add(s_values[i], g_values[i]);
  Moments all(k, kg);
  for (const auto& m : per_batch) all += m;

  EfficiencyEstimate out;
  out.correlation = all.correlation();
  out.efficiency = out.correlation * out.correlation.transpose();
  std::vector<Mat> effs;
  for (const auto& m : per_batch) {
    Mat r = m.correlation();
    effs.push_back(r * r.transpose());
  }
  out.se = Mat::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      std::vector<double> v;
      for (const auto& e : effs) v.push_back(e(i, j));
      out.se(i, j) = batch_standard_error(v);
    }
  return out;
}

inline EfficiencyEstimate efficiency_mc(const ExpectationEngine& engine, const ModelFamily& family,
                                        const GeneralizedEstimator& g, const Vec& param) {
  require(!engine.is_exact(), "efficiency_mc needs a Monte Carlo engine");
  const int k = family.dim_interest;
  Mat coef = Mat::Zero(k, 0);
  if (family.dim_nuisance > 0) coef = fisher_info(engine, family, param).projection_coefficients();
  EstimatorSlice slice = g.bind(param);
  std::vector<Vec> both = monte_carlo_values(engine, family, param, [&](const Outcome& y) {
    Vec s = orthogonal_score(family, y, param, coef);
    Vec gv = slice(y);
    Vec out(s.size() + gv.size());
    out << s, gv;
    return out;
  });
  std::vector<Vec> sv, gv;
  sv.reserve(both.size());
  gv.reserve(both.size());
  for (const auto& v : both) {
    sv.push_back(v.head(k));
    gv.push_back(v.tail(v.size() - k));
  }
  return efficiency_from_pairs(sv, gv);
}

inline EfficiencyEstimate efficiency_mc(const ExpectationEngine& engine, const ModelFamily& family,
                                        const GeneralizedEstimator& g, const Vec& param,
                                        std::int64_t reps) {
  ExpectationEngine e = engine;
  if (e.is_exact()) e = ExpectationEngine::monte_carlo(reps, engine.seed, engine.stream);
  e.replications = reps;
  return efficiency_mc(e, family, g, param);
}

struct ScalingRow {
  int n = 0;
  Mat lambda;
  double ratio = 0.0;  // lambda_scalar(n) / (n * lambda_scalar(1))
};

// Lambda(g_(n)) against n * Lambda(g_(1)).
inline std::vector<ScalingRow> n_scaling_check(
    const ExpectationEngine& engine, const std::function<ModelFamily(int)>& family_builder,
    const std::function<GeneralizedEstimator(const ModelFamily&)>& g_builder,
    const std::vector<int>& n_list, const Vec& param) {
  auto lambda_at = [&](int n) {
    ModelFamily fam = family_builder(n);
    return information(engine, fam, g_builder(fam), param).lambda;
  };
  const double base = lambda_at(1).trace();
  std::vector<ScalingRow> rows;
  for (int n : n_list) {
    ScalingRow row;
    row.n = n;
    row.lambda = lambda_at(n);
    row.ratio = row.lambda.trace() / (n * base);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace genestim
