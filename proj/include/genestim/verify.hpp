#pragma once

#include "genestim/families.hpp"
#include "genestim/fisher.hpp"
#include "genestim/information.hpp"
#include "genestim/registry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace genestim::verify {

struct PropertyResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst deviation seen
  double tolerance = 0.0;
  std::string note;
};

namespace detail {

inline PropertyResult below(std::string name, double worst, double tol, std::string note = {}) {
  return {std::move(name), worst <= tol, worst, tol, std::move(note)};
}

inline std::vector<double> interior_grid(int count) {
  std::vector<double> g;
  for (int i = 1; i <= count; ++i) g.push_back(static_cast<double>(i) / (count + 1));
  return g;
}

}  // namespace detail

// Exact-mode identities for the Bernoulli-sum registered suite.
inline std::vector<PropertyResult> bernoulli_suite_properties(int n = 20) {
  const auto exact = ExpectationEngine::exact();
  auto fam = bernoulli_sum(n);
  auto suite = bernoulli_suite(n);
  double score_attain = 0, bound_excess = -INFINITY, corollary = 0, score_eq = 0, routes = 0;
  for (double p : detail::interior_grid(9)) {
    const double fisher = n / (p * (1 - p));
    for (const auto& reg : suite) {
      auto g = reg.make(exact, fam);
      auto r = information(exact, fam, g, scalar_vec(p));
      if (reg.label == "score") score_attain = std::max(score_attain, std::abs(r.lambda(0, 0) / fisher - 1.0));
      bound_excess = std::max(bound_excess, r.lambda(0, 0) - fisher);
      corollary = std::max(corollary, std::abs(r.efficiency(0, 0) - r.correlation(0, 0) * r.correlation(0, 0)));
      routes = std::max(routes, r.route_discrepancy);
      score_eq = std::max(score_eq, std::abs(check_score_equation(exact, fam, g, scalar_vec(p))(0, 0)));
    }
  }
  const std::string where = "bernoulli_sum(" + std::to_string(n) + "), p = 0.1..0.9";
  return {
      detail::below("score attains the Fisher bound", score_attain, 1e-10, where),
      detail::below("Lambda(g) <= I for the registered suite", std::max(0.0, bound_excess), 1e-8, where),
      detail::below("efficiency equals squared correlation", corollary, 1e-10, where),
      detail::below("covariance and slope routes agree", routes, 1e-6, where),
      detail::below("score-equation residual vanishes", score_eq, 1e-8, where),
  };
}

// The residual of an uncentered estimator must be flagged.
inline PropertyResult biased_estimator_flagged(int n = 20) {
  const auto exact = ExpectationEngine::exact();
  auto fam = bernoulli_sum(n);
  double smallest = INFINITY;
  for (double p : detail::interior_grid(9))
    smallest = std::min(smallest, std::abs(check_score_equation(exact, fam, biased_proportion(n), scalar_vec(p))(0, 0)));
  PropertyResult r{"uncentered y/n is flagged by the score equation", smallest > 1e-8, smallest, 1e-8,
                   "residual equals d/dp E(y/n) = 1"};
  return r;
}

inline PropertyResult n_scaling_property() {
  const auto exact = ExpectationEngine::exact();
  auto rows = n_scaling_check(
      exact, [](int n) { return bernoulli_sum(n); },
      [&](const ModelFamily& f) { return score_estimator(exact, f); }, {1, 5, 20}, scalar_vec(0.3));
  double worst = 0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.ratio - 1.0));
  return detail::below("Lambda(score_n) = n Lambda(score_1)", worst, 1e-10, "n = 1, 5, 20");
}

inline std::vector<PropertyResult> two_binomial_properties(int n1 = 20, int n2 = 30) {
  const auto exact = ExpectationEngine::exact();
  auto fam = two_binomial(n1, n2);
  TwoBinomialMap map(n1, n2);
  auto s = score_estimator(exact, fam);
  double cross = 0, attain = 0, roundtrip = 0;
  for (double p1 : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double p2 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      Vec param = map.to_interest_nuisance(p1, p2);
      FisherInfo fi = fisher_info(exact, fam, param);
      Mat coef = fi.projection_coefficients();
      Expectation e = expect(exact, fam, param, [&](const Outcome& y) {
        return scalar_vec(orthogonal_score(fam, y, param, coef)(0) * score_nuisance(fam, y, param)(0));
      });
      cross = std::max(cross, std::abs(e.value(0)));
      auto r = information(exact, fam, s, param);
      attain = std::max(attain, std::abs(r.lambda(0, 0) - r.fisher_bound(0, 0)));
      auto nat = map.to_natural(param(0), param(1));
      roundtrip = std::max({roundtrip, std::abs(nat.p1 - p1), std::abs(nat.p2 - p2)});
    }
  Vec half = map.to_interest_nuisance(0.5, 0.5);
  double perp = fisher_info(exact, fam, half).bound()(0, 0);
  const std::string where = "two_binomial(" + std::to_string(n1) + ", " + std::to_string(n2) + "), 5x5 grid";
  return {
      detail::below("orthogonalized score is uncorrelated with the nuisance score", cross, 1e-10, where),
      detail::below("Lambda(s) equals I_perp", attain, 1e-8, where),
      detail::below("(theta, nuisance) <-> (p1, p2) round trip", roundtrip, 1e-12, where),
      detail::below("I_perp at p1 = p2 = 0.5 against ab/(a+b)",
                    std::abs(perp - (n1 * 0.25) * (n2 * 0.25) / (n1 * 0.25 + n2 * 0.25)), 1e-10, where),
  };
}

inline PropertyResult parameterization_invariance(int n = 20, int grid = 64) {
  const auto exact = ExpectationEngine::exact();
  auto fp = bernoulli_sum(n);
  auto fe = bernoulli_sum_log_odds(n);
  auto sp = score_estimator(exact, fp);
  auto se = score_estimator(exact, fe);
  double worst = 0;
  for (double p : detail::interior_grid(grid)) {
    EstimatorSlice a = standardize(exact, fp, sp, scalar_vec(p));
    EstimatorSlice b = standardize(exact, fe, se, scalar_vec(logit(p)));
    for (int y = 0; y <= n; ++y) worst = std::max(worst, std::abs(a(scalar_vec(y))(0) - b(scalar_vec(y))(0)));
  }
  return detail::below("standardized score is parameterization invariant", worst, 1e-10,
                       std::to_string(n + 1) + " x " + std::to_string(grid) + " matrix");
}

inline std::vector<PropertyResult> run_all() {
  std::vector<PropertyResult> out = bernoulli_suite_properties();
  out.push_back(biased_estimator_flagged());
  out.push_back(n_scaling_property());
  for (auto& r : two_binomial_properties()) out.push_back(std::move(r));
  out.push_back(parameterization_invariance());
  return out;
}

}  // namespace genestim::verify
