#pragma once

#include "genestim/estimator.hpp"
#include "genestim/families.hpp"

#include <functional>
#include <string>
#include <vector>

namespace genestim {

struct RegisteredEstimator {
  std::string label;
  std::string description;
  std::function<GeneralizedEstimator(const ExpectationEngine&, const ModelFamily&)> make;
};

// Estimators registered for the Bernoulli-sum family. Each is a valid
// generalized estimator: mean zero at every p.
inline std::vector<RegisteredEstimator> bernoulli_suite(int n) {
  const double nd = n;
  auto point = [](std::string label, std::function<double(const Outcome&)> t) {
    PreEstimator pre = PreEstimator::point(std::move(label), std::move(t));
    return [pre](const ExpectationEngine& e, const ModelFamily& f) { return orthogonalize(e, f, pre); };
  };
  return {
      {"score", "(y - np) / (p(1-p))",
       [](const ExpectationEngine& e, const ModelFamily& f) { return score_estimator(e, f); }},
      {"proportion", "y/n centered",
       point("proportion", [nd](const Outcome& y) { return y(0) / nd; })},
      {"shrinkage", "(y+2)/(n+4) centered",
       point("shrinkage", [nd](const Outcome& y) { return (y(0) + 2.0) / (nd + 4.0); })},
      {"sign", "sign(y - n/2) centered",
       point("sign", [nd](const Outcome& y) {
         double d = y(0) - nd / 2.0;
         return static_cast<double>((d > 0) - (d < 0));
       })},
  };
}

// y/n used as-is, without centering. Violates the mean-zero condition; the
// score-equation check flags it.
inline GeneralizedEstimator biased_proportion(int n) {
  const double nd = n;
  return GeneralizedEstimator::unchecked(
      PreEstimator::point("biased_proportion", [nd](const Outcome& y) { return y(0) / nd; }));
}

}  // namespace genestim
