#pragma once

#include "genestim/core.hpp"

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace genestim {

enum class SupportKind { FiniteDiscrete, Continuous };

struct WeightedOutcome {
  Outcome y;
  double weight;
};

using Sampler = std::function<Outcome(const Vec& param, std::mt19937_64& gen)>;

// Quadrature rule for a continuous family: nodes and weights that integrate
// against the model density at `param` (weights sum to 1).
using QuadratureRule = std::function<std::vector<WeightedOutcome>(const Vec& param)>;

class SupportDescriptor {
 public:
  static SupportDescriptor finite(std::vector<Outcome> outcomes) {
    require(!outcomes.empty(), "finite support must be nonempty");
    SupportDescriptor s;
    s.kind_ = SupportKind::FiniteDiscrete;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      auto key = key_of(outcomes[i]);
      auto [it, inserted] = s.index_.emplace(std::move(key), i);
      require(inserted, "finite support contains a duplicate outcome");
    }
    s.outcomes_ = std::move(outcomes);
    return s;
  }

  static SupportDescriptor continuous(Sampler sampler,
                                      std::optional<QuadratureRule> quadrature = std::nullopt) {
    SupportDescriptor s;
    s.kind_ = SupportKind::Continuous;
    s.sampler_ = std::move(sampler);
    s.quadrature_ = std::move(quadrature);
    return s;
  }

  SupportKind kind() const { return kind_; }
  bool is_finite() const { return kind_ == SupportKind::FiniteDiscrete; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }

  std::optional<std::size_t> index_of(const Outcome& y) const {
    auto it = index_.find(key_of(y));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Finite supports may also carry a sampler (used by Monte Carlo mode).
  SupportDescriptor& with_sampler(Sampler sampler) {
    sampler_ = std::move(sampler);
    return *this;
  }

  const Sampler& sampler() const { return sampler_; }
  bool has_sampler() const { return static_cast<bool>(sampler_); }
  const std::optional<QuadratureRule>& quadrature() const { return quadrature_; }

 private:
  static std::vector<double> key_of(const Outcome& y) {
    return std::vector<double>(y.data(), y.data() + y.size());
  }

  SupportKind kind_ = SupportKind::FiniteDiscrete;
  std::vector<Outcome> outcomes_;
  std::map<std::vector<double>, std::size_t> index_;
  Sampler sampler_;
  std::optional<QuadratureRule> quadrature_;
};

using LogDensity = std::function<double(const Outcome&, const Vec&)>;
using VectorField = std::function<Vec(const Outcome&, const Vec&)>;
using MatrixField = std::function<Mat(const Outcome&, const Vec&)>;

// A parameterized family of sampling distributions on a common support.
// Parameters are laid out interest-first: (theta, nuisance).
struct ModelFamily {
  std::string name;
  SupportDescriptor support;
  int dim_interest = 1;
  int dim_nuisance = 0;
  std::function<bool(const Vec&)> in_domain;
  LogDensity log_density;
  VectorField score_interest;  // optional
  VectorField score_nuisance;  // optional
  MatrixField score_jacobian;  // optional, d score_b / d param_a in row a

  int dim() const { return dim_interest + dim_nuisance; }

  bool has_analytic_score() const {
    return static_cast<bool>(score_interest) &&
           (dim_nuisance == 0 || static_cast<bool>(score_nuisance));
  }

  void require_in_domain(const Vec& param) const {
    if (param.size() != dim())
      fail(ErrorKind::InvalidArgument, name + ": parameter has wrong dimension");
    if (!param.allFinite() || (in_domain && !in_domain(param)))
      fail(ErrorKind::Domain, name + ": parameter outside the domain");
  }

  double density(const Outcome& y, const Vec& param) const {
    return std::exp(log_density(y, param));
  }
};

}  // namespace genestim
