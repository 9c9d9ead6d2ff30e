#pragma once

#include "genestim/core.hpp"
#include "genestim/family.hpp"
#include "genestim/linalg.hpp"
#include "genestim/rng.hpp"
#include "genestim/roots.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace genestim {

inline double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log of p^x (1-p)^(n-x) with the 0 * log 0 = 0 convention.
inline double binomial_kernel(double x, int n, double p) {
  double out = 0.0;
  if (x > 0) out += x * std::log(p);
  if (n - x > 0) out += (n - x) * std::log1p(-p);
  return out;
}

inline double log_binomial_pmf(int x, int n, double p) {
  return log_choose(n, x) + binomial_kernel(x, n, p);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }
inline double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }
// log(1 + e^eta) without overflow or cancellation.
inline double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

namespace detail {

inline void require_size(int n, const char* what) {
  if (n <= 0) fail(ErrorKind::InvalidArgument, std::string(what) + ": sample size must be positive");
}

inline std::vector<Outcome> count_outcomes(int n) {
  std::vector<Outcome> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int y = 0; y <= n; ++y) out.push_back(scalar_vec(y));
  return out;
}

// Probabilists' Gauss-Hermite rule (Golub-Welsch): sum w_i f(x_i) ~ E f(Z).
inline std::vector<std::pair<double, double>> gauss_hermite(int m) {
  Mat jacobi = Mat::Zero(m, m);
  for (int i = 1; i < m; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double v0 = es.eigenvectors()(0, i);
    rule[static_cast<std::size_t>(i)] = {es.eigenvalues()(i), v0 * v0};
  }
  return rule;
}

template <class PerObs>
double sum_over(const Outcome& y, PerObs&& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += f(y(i));
  return s;
}

}  // namespace detail

// Sum of n Bernoulli(p) trials; y in {0..n}, parameter p in (0, 1).
inline ModelFamily bernoulli_sum(int n) {
  detail::require_size(n, "bernoulli_sum");
  ModelFamily f;
  f.name = "bernoulli_sum(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::finite(detail::count_outcomes(n));
  f.support.with_sampler([n](const Vec& p, std::mt19937_64& gen) {
    std::binomial_distribution<int> dist(n, p(0));
    return scalar_vec(dist(gen));
  });
  f.in_domain = [](const Vec& p) { return p(0) > 0.0 && p(0) < 1.0; };
  f.log_density = [n](const Outcome& y, const Vec& p) {
    return log_binomial_pmf(static_cast<int>(y(0)), n, p(0));
  };
  f.score_interest = [n](const Outcome& y, const Vec& p) {
    double pp = p(0);
    return scalar_vec((y(0) - n * pp) / (pp * (1.0 - pp)));
  };
  f.score_jacobian = [n](const Outcome& y, const Vec& p) {
    double pp = p(0), v = pp * (1.0 - pp);
    Mat j(1, 1);
    j(0, 0) = (-n * v - (y(0) - n * pp) * (1.0 - 2.0 * pp)) / (v * v);
    return j;
  };
  return f;
}

// The same family parameterized by log-odds eta = log(p / (1 - p)).
inline ModelFamily bernoulli_sum_log_odds(int n) {
  detail::require_size(n, "bernoulli_sum_log_odds");
  ModelFamily f;
  f.name = "bernoulli_sum_log_odds(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::finite(detail::count_outcomes(n));
  f.support.with_sampler([n](const Vec& eta, std::mt19937_64& gen) {
    std::binomial_distribution<int> dist(n, logistic(eta(0)));
    return scalar_vec(dist(gen));
  });
  f.in_domain = [](const Vec& eta) { return std::isfinite(eta(0)); };
  // Written in eta so that p near 1 does not lose 1 - p to rounding.
  f.log_density = [n](const Outcome& y, const Vec& eta) {
    return log_choose(n, static_cast<int>(y(0))) + y(0) * eta(0) - n * softplus(eta(0));
  };
  f.score_interest = [n](const Outcome& y, const Vec& eta) {
    return scalar_vec(y(0) - n * logistic(eta(0)));
  };
  f.score_jacobian = [n](const Outcome&, const Vec& eta) {
    Mat j(1, 1);
    j(0, 0) = -n * logistic(eta(0)) * logistic(-eta(0));
    return j;
  };
  return f;
}

// Normal location family with unit variance, reduced to the sample mean:
// m(y) = sqrt(n) phi(sqrt(n) (y - a)). Exact mode uses Gauss-Hermite.
inline ModelFamily normal_location(int n, int quadrature_nodes = 40) {
  detail::require_size(n, "normal_location");
  const double rn = std::sqrt(static_cast<double>(n));
  auto rule = detail::gauss_hermite(quadrature_nodes);
  ModelFamily f;
  f.name = "normal_location(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::continuous(
      [rn](const Vec& a, std::mt19937_64& gen) {
        return scalar_vec(a(0) + rng::standard_normal(gen) / rn);
      },
      [rn, rule](const Vec& a) {
        std::vector<WeightedOutcome> nodes;
        nodes.reserve(rule.size());
        for (auto [x, w] : rule) nodes.push_back({scalar_vec(a(0) + x / rn), w});
        return nodes;
      });
  f.in_domain = [](const Vec& a) { return std::isfinite(a(0)); };
  f.log_density = [n, rn](const Outcome& y, const Vec& a) {
    double d = y(0) - a(0);
    return std::log(rn) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * n * d * d;
  };
  f.score_interest = [n](const Outcome& y, const Vec& a) { return scalar_vec(n * (y(0) - a(0))); };
  f.score_jacobian = [n](const Outcome&, const Vec&) { return Mat::Constant(1, 1, -n); };
  return f;
}

// Normal location family on the raw sample (x_1..x_n), unit variance.
inline ModelFamily normal_sample_location(int n) {
  detail::require_size(n, "normal_sample_location");
  ModelFamily f;
  f.name = "normal_sample_location(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::continuous([n](const Vec& a, std::mt19937_64& gen) {
    Outcome y(n);
    for (int i = 0; i < n; ++i) y(i) = a(0) + rng::standard_normal(gen);
    return y;
  });
  f.in_domain = [](const Vec& a) { return std::isfinite(a(0)); };
  f.log_density = [n](const Outcome& y, const Vec& a) {
    return -0.5 * n * std::log(2.0 * std::numbers::pi) -
           0.5 * detail::sum_over(y, [&](double x) { return (x - a(0)) * (x - a(0)); });
  };
  f.score_interest = [](const Outcome& y, const Vec& a) {
    return scalar_vec(detail::sum_over(y, [&](double x) { return x - a(0); }));
  };
  return f;
}

// Normal scale family N(0, sigma^2) on the raw sample; parameter sigma > 0.
inline ModelFamily normal_scale(int n) {
  detail::require_size(n, "normal_scale");
  ModelFamily f;
  f.name = "normal_scale(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::continuous([n](const Vec& s, std::mt19937_64& gen) {
    Outcome y(n);
    for (int i = 0; i < n; ++i) y(i) = s(0) * rng::standard_normal(gen);
    return y;
  });
  f.in_domain = [](const Vec& s) { return s(0) > 0.0 && std::isfinite(s(0)); };
  f.log_density = [n](const Outcome& y, const Vec& s) {
    double sig = s(0);
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - n * std::log(sig) -
           detail::sum_over(y, [&](double x) { return x * x; }) / (2.0 * sig * sig);
  };
  f.score_interest = [n](const Outcome& y, const Vec& s) {
    double sig = s(0);
    return scalar_vec(-n / sig + detail::sum_over(y, [&](double x) { return x * x; }) / (sig * sig * sig));
  };
  return f;
}

// Cauchy location family, unit scale, on the raw sample.
inline ModelFamily cauchy_location(int n) {
  detail::require_size(n, "cauchy_location");
  ModelFamily f;
  f.name = "cauchy_location(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::continuous([n](const Vec& a, std::mt19937_64& gen) {
    std::cauchy_distribution<double> dist(a(0), 1.0);
    Outcome y(n);
    for (int i = 0; i < n; ++i) y(i) = dist(gen);
    return y;
  });
  f.in_domain = [](const Vec& a) { return std::isfinite(a(0)); };
  f.log_density = [n](const Outcome& y, const Vec& a) {
    return -n * std::log(std::numbers::pi) -
           detail::sum_over(y, [&](double x) { return std::log1p((x - a(0)) * (x - a(0))); });
  };
  f.score_interest = [](const Outcome& y, const Vec& a) {
    return scalar_vec(detail::sum_over(y, [&](double x) {
      double d = x - a(0);
      return 2.0 * d / (1.0 + d * d);
    }));
  };
  return f;
}

// Score contribution of one observation under the unit-scale t3 location model.
inline double t3_score_term(double d) { return 4.0 * d / (3.0 + d * d); }

// Student t (3 degrees of freedom, unit scale) location family on the raw sample.
inline ModelFamily student_t3_location(int n) {
  detail::require_size(n, "student_t3_location");
  // Gamma(2) / (Gamma(3/2) sqrt(3 pi)) = 2 / (pi sqrt(3))
  const double log_c = std::log(2.0 / (std::numbers::pi * std::sqrt(3.0)));
  ModelFamily f;
  f.name = "student_t3_location(" + std::to_string(n) + ")";
  f.support = SupportDescriptor::continuous([n](const Vec& a, std::mt19937_64& gen) {
    Outcome y(n);
    for (int i = 0; i < n; ++i) y(i) = a(0) + rng::student_t3(gen);
    return y;
  });
  f.in_domain = [](const Vec& a) { return std::isfinite(a(0)); };
  f.log_density = [n, log_c](const Outcome& y, const Vec& a) {
    return n * log_c -
           2.0 * detail::sum_over(y, [&](double x) { return std::log1p((x - a(0)) * (x - a(0)) / 3.0); });
  };
  f.score_interest = [](const Outcome& y, const Vec& a) {
    return scalar_vec(detail::sum_over(y, [&](double x) { return t3_score_term(x - a(0)); }));
  };
  return f;
}

// Two independent binomials x1 ~ Bin(n1, p1), x2 ~ Bin(n2, p2) parameterized
// by theta = log odds ratio and nuisance n1 p1 + n2 p2.
class TwoBinomialMap {
 public:
  TwoBinomialMap(int n1, int n2) : n1_(n1), n2_(n2) {
    detail::require_size(n1, "two_binomial");
    detail::require_size(n2, "two_binomial");
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }

  struct Natural {
    double p1, p2;
  };

  Vec to_interest_nuisance(double p1, double p2) const {
    if (!(p1 > 0 && p1 < 1 && p2 > 0 && p2 < 1))
      fail(ErrorKind::Domain, "two_binomial: probabilities must lie in (0, 1)");
    return vec2(logit(p1) - logit(p2), n1_ * p1 + n2_ * p2);
  }

  bool feasible_nuisance(double nuisance) const {
    return nuisance > 0.0 && nuisance < static_cast<double>(n1_ + n2_);
  }

  // Open p1 range compatible with n1 p1 + n2 p2 = nuisance and p2 in (0, 1).
  std::pair<double, double> p1_range(double nuisance) const {
    return {std::max(0.0, (nuisance - n2_) / n1_), std::min(1.0, nuisance / n1_)};
  }

  double p2_of(double p1, double nuisance) const { return (nuisance - n1_ * p1) / n2_; }

  double theta_of(double p1, double nuisance) const {
    return logit(p1) - logit(p2_of(p1, nuisance));
  }

  // Inverse map by bisection on p1: theta_of is increasing in p1 along the
  // constraint line, so the solution is unique. Bisects to full resolution.
  Natural to_natural(double theta, double nuisance) const {
    if (!std::isfinite(theta) || !feasible_nuisance(nuisance))
      fail(ErrorKind::Domain, "two_binomial: (theta, nuisance) infeasible");
    // Expectations evaluate every outcome at one parameter; remember the last
    // inversion per thread.
    struct Last {
      int n1 = 0, n2 = 0;
      double theta = 0, nuisance = -1;
      Natural nat{0, 0};
    };
    thread_local Last last;
    if (last.n1 == n1_ && last.n2 == n2_ && last.theta == theta && last.nuisance == nuisance)
      return last.nat;
    auto [lo, hi] = p1_range(nuisance);
    double p1 = roots::bisect_increasing_to_resolution(
        [&](double p) { return theta_of(p, nuisance); }, theta, lo, hi);
    double p2 = p2_of(p1, nuisance);
    if (!(p1 > 0 && p1 < 1 && p2 > 0 && p2 < 1))
      fail(ErrorKind::Numeric, "two_binomial: inversion left the open unit square");
    last = {n1_, n2_, theta, nuisance, {p1, p2}};
    return {p1, p2};
  }

 private:
  int n1_, n2_;
};

namespace detail {

struct TwoBinomialScores {
  double interest, nuisance;
};

inline TwoBinomialScores two_binomial_scores(int n1, int n2, double x1, double x2, double p1,
                                             double p2, double nuisance) {
  double a = n1 * p1 * (1.0 - p1);
  double b = n2 * p2 * (1.0 - p2);
  double interest = ((x1 - n1 * p1) * b - (x2 - n2 * p2) * a) / (a + b);
  double nuis = (x1 + x2 - nuisance) / (a + b);
  return {interest, nuis};
}

}  // namespace detail

inline ModelFamily two_binomial(int n1, int n2) {
  TwoBinomialMap map(n1, n2);
  std::vector<Outcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>((n1 + 1) * (n2 + 1)));
  for (int x1 = 0; x1 <= n1; ++x1)
    for (int x2 = 0; x2 <= n2; ++x2) outcomes.push_back(vec2(x1, x2));

  ModelFamily f;
  f.name = "two_binomial(" + std::to_string(n1) + "," + std::to_string(n2) + ")";
  f.dim_interest = 1;
  f.dim_nuisance = 1;
  f.support = SupportDescriptor::finite(std::move(outcomes));
  f.support.with_sampler([map](const Vec& param, std::mt19937_64& gen) {
    auto nat = map.to_natural(param(0), param(1));
    std::binomial_distribution<int> d1(map.n1(), nat.p1), d2(map.n2(), nat.p2);
    int x1 = d1(gen);
    int x2 = d2(gen);
    return vec2(x1, x2);
  });
  f.in_domain = [map](const Vec& param) {
    return std::isfinite(param(0)) && map.feasible_nuisance(param(1));
  };
  f.log_density = [map](const Outcome& y, const Vec& param) {
    auto nat = map.to_natural(param(0), param(1));
    return log_binomial_pmf(static_cast<int>(y(0)), map.n1(), nat.p1) +
           log_binomial_pmf(static_cast<int>(y(1)), map.n2(), nat.p2);
  };
  f.score_interest = [map](const Outcome& y, const Vec& param) {
    auto nat = map.to_natural(param(0), param(1));
    return scalar_vec(
        detail::two_binomial_scores(map.n1(), map.n2(), y(0), y(1), nat.p1, nat.p2, param(1)).interest);
  };
  f.score_nuisance = [map](const Outcome& y, const Vec& param) {
    auto nat = map.to_natural(param(0), param(1));
    return scalar_vec(
        detail::two_binomial_scores(map.n1(), map.n2(), y(0), y(1), nat.p1, nat.p2, param(1)).nuisance);
  };
  return f;
}

struct FamilyConstructor {
  std::string name;
  std::string description;
  int size_arguments;  // how many sample sizes the constructor takes
  std::function<ModelFamily(const std::vector<int>& sizes)> make;
};

inline std::vector<FamilyConstructor> builtin_families() {
  auto one = [](auto fn) {
    return [fn](const std::vector<int>& s) {
      require(s.size() == 1, "expected one sample size");
      return fn(s[0]);
    };
  };
  return {
      {"bernoulli-sum", "sum of n Bernoulli(p) trials, parameter p", 1,
       one([](int n) { return bernoulli_sum(n); })},
      {"bernoulli-sum-log-odds", "sum of n Bernoulli trials, parameter log(p/(1-p))", 1,
       one([](int n) { return bernoulli_sum_log_odds(n); })},
      {"normal-location", "unit-variance normal location on the sample mean", 1,
       one([](int n) { return normal_location(n); })},
      {"normal-sample", "unit-variance normal location on the raw sample", 1,
       one([](int n) { return normal_sample_location(n); })},
      {"normal-scale", "N(0, sigma^2) on the raw sample, parameter sigma", 1,
       one([](int n) { return normal_scale(n); })},
      {"cauchy-location", "unit-scale Cauchy location on the raw sample", 1,
       one([](int n) { return cauchy_location(n); })},
      {"t3-location", "unit-scale Student t3 location on the raw sample", 1,
       one([](int n) { return student_t3_location(n); })},
      {"two-binomial", "two binomials, theta = log odds ratio, nuisance = n1 p1 + n2 p2", 2,
       [](const std::vector<int>& s) {
         require(s.size() == 2, "two-binomial needs n1 and n2");
         return two_binomial(s[0], s[1]);
       }},
  };
}

inline ModelFamily make_builtin_family(const std::string& name, const std::vector<int>& sizes) {
  for (const auto& c : builtin_families())
    if (c.name == name) return c.make(sizes);
  fail(ErrorKind::InvalidArgument, "unknown family '" + name + "'");
}

}  // namespace genestim
