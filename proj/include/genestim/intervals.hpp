#pragma once

#include "genestim/core.hpp"
#include "genestim/estimator.hpp"
#include "genestim/expectation.hpp"
#include "genestim/families.hpp"
#include "genestim/interval_result.hpp"
#include "genestim/roots.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace genestim {

// Where a one-dimensional parameter lives and where endpoints are searched.
// Endpoints that never bind inside [search_lo, search_hi] are reported at the
// domain boundary.
struct ParameterRange {
  double domain_lo, domain_hi;
  double search_lo, search_hi;

  static ParameterRange probability() { return {0.0, 1.0, 1e-14, 1.0 - 1e-14}; }
  static ParameterRange log_odds() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf, -32.0, 32.0};
  }
};

namespace detail {

inline void require_z(double z) {
  if (!(z >= 0.0) || !std::isfinite(z)) fail(ErrorKind::InvalidArgument, "z must be a finite value >= 0");
}

}  // namespace detail

// {theta : s_bar(theta) >= -z} and/or {theta : s_bar(theta) <= z} for a
// decreasing s_bar, endpoints by bisection to 1e-12.
inline IntervalResult invert_decreasing(const std::function<double(double)>& sbar, double z,
                                        IntervalSide side, const ParameterRange& range) {
  detail::require_z(z);
  IntervalResult r;
  r.z = z;
  r.side = side;
  r.lower = range.domain_lo;
  r.upper = range.domain_hi;
  // The side a one-sided interval leaves open runs to the domain boundary.
  r.lower_at_boundary = side == IntervalSide::UpperOnly;
  r.upper_at_boundary = side == IntervalSide::LowerOnly;

  auto verify = [&](double at, double target) {
    const double eps = 1e-9 * std::max(1.0, std::abs(at));
    if (at - eps > range.search_lo && at + eps < range.search_hi)
      if (!(sbar(at - eps) >= target && sbar(at + eps) <= target))
        fail(ErrorKind::Numeric, "interval endpoint failed the sign check; s_bar not decreasing");
  };

  if (side != IntervalSide::LowerOnly) {
    auto f = [&](double t) { return sbar(t) + z; };
    if (f(range.search_hi) >= 0.0) {
      r.upper_at_boundary = true;
      r.add_note("upper endpoint at the domain boundary");
    } else if (f(range.search_lo) < 0.0) {
      r.empty = true;
    } else {
      r.upper = roots::bisect(f, range.search_lo, range.search_hi, 1e-12);
      r.closed_upper = true;
      verify(r.upper, -z);
    }
  }
  if (side != IntervalSide::UpperOnly) {
    auto f = [&](double t) { return sbar(t) - z; };
    if (f(range.search_lo) <= 0.0) {
      r.lower_at_boundary = true;
      r.add_note("lower endpoint at the domain boundary");
    } else if (f(range.search_hi) > 0.0) {
      r.empty = true;
    } else {
      r.lower = roots::bisect(f, range.search_lo, range.search_hi, 1e-12);
      r.closed_lower = true;
      verify(r.lower, z);
    }
  }
  if (r.lower > r.upper) r.empty = true;
  if (side == IntervalSide::TwoSided && r.lower_at_boundary && r.upper_at_boundary) {
    r.whole_domain = true;
    r.add_note("no sign change on the domain");
  }
  return r;
}

// Standardized score s_bar_y(theta) of a one-parameter family, through the
// generic score estimator and standardization.
inline std::function<double(double)> standardized_score_curve(const ExpectationEngine& engine,
                                                              const ModelFamily& family,
                                                              const Outcome& y) {
  require(family.dim() == 1, "standardized_score_curve needs a one-parameter family");
  GeneralizedEstimator s = score_estimator(engine, family);
  return [engine, family, s, y](double theta) {
    return standardize(engine, family, s, scalar_vec(theta))(y)(0);
  };
}

inline IntervalResult ci_z(const ExpectationEngine& engine, const ModelFamily& family,
                           const Outcome& y, double z, IntervalSide side,
                           const ParameterRange& range) {
  return invert_decreasing(standardized_score_curve(engine, family, y), z, side, range);
}

inline void require_count(int n, int y) {
  if (n <= 0) fail(ErrorKind::InvalidArgument, "n must be positive");
  if (y < 0 || y > n) fail(ErrorKind::InvalidArgument, "y must lie in {0..n}");
}

// CI for p in the Bernoulli-sum family.
inline IntervalResult binomial_ci_z(int n, int y, double z, IntervalSide side) {
  require_count(n, y);
  return ci_z(ExpectationEngine::exact(), bernoulli_sum(n), scalar_vec(y), z, side,
              ParameterRange::probability());
}

// The same set computed in the log-odds parameterization.
inline IntervalResult binomial_log_odds_ci_z(int n, int y, double z, IntervalSide side) {
  require_count(n, y);
  return ci_z(ExpectationEngine::exact(), bernoulli_sum_log_odds(n), scalar_vec(y), z, side,
              ParameterRange::log_odds());
}

// Closed-form s_bar for the binomial, (y - np) / sqrt(np(1-p)).
inline double binomial_sbar(int n, int y, double p) {
  return (y - n * p) / std::sqrt(n * p * (1.0 - p));
}

// Twice the log likelihood ratio, 2[sup_q l_y(q) - l_y(p)]. The supremum for
// y in {0, n} is the boundary limit.
inline double binomial_llr(int n, int y, double p) {
  double yd = y;
  return 2.0 * (binomial_kernel(yd, n, yd / n) - binomial_kernel(yd, n, p));
}

enum class CurveKind { StandardizedScore, LogLikelihoodRatio };

inline const char* to_string(CurveKind k) {
  return k == CurveKind::StandardizedScore ? "standardized_score" : "llr";
}

// One curve per outcome y in {0..n}, evaluated on a parameter grid.
struct CurveGrid {
  CurveKind kind = CurveKind::StandardizedScore;
  int n = 0;
  std::vector<double> parameter_grid;
  Mat values;        // (n+1) x grid
  Eigen::MatrixXi slope_sign;
  int realized_row = 0;
};

inline std::vector<double> default_grid(std::size_t count = 512, double margin = 1e-4) {
  return roots::linspace(margin, 1.0 - margin, count);
}

namespace detail {

inline void validate_probability_grid(const std::vector<double>& grid) {
  require(!grid.empty(), "grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0))
      fail(ErrorKind::InvalidArgument, "grid must lie strictly inside (0, 1)");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      fail(ErrorKind::InvalidArgument, "grid must be strictly increasing");
  }
}

inline int sign_of(double x) { return (x > 0) - (x < 0); }

// Curve value for outcome y at p, generic route for the score.
inline std::function<double(int, double)> curve_function(CurveKind kind, int n) {
  if (kind == CurveKind::LogLikelihoodRatio)
    return [n](int y, double p) { return binomial_llr(n, y, p); };
  auto fam = std::make_shared<ModelFamily>(bernoulli_sum(n));
  auto engine = ExpectationEngine::exact();
  auto s = std::make_shared<GeneralizedEstimator>(score_estimator(engine, *fam));
  return [fam, engine, s](int y, double p) {
    return standardize(engine, *fam, *s, scalar_vec(p))(scalar_vec(y))(0);
  };
}

inline int slope_sign_at(CurveKind kind, int n, int y, double p) {
  if (kind == CurveKind::StandardizedScore) {
    // d/dp (y - np)/sqrt(npq) = -n (np + y(1-2p)) / (2 (npq)^{3/2})
    return sign_of(-(y * (1.0 - 2.0 * p) + n * p));
  }
  // d/dp of -2 l_y(p) = -2 (y - np) / (p q)
  return sign_of(n * p - y);
}

}  // namespace detail

inline CurveGrid make_curves(CurveKind kind, int n, const std::vector<double>& grid, int realized_y) {
  require_count(n, realized_y);
  detail::validate_probability_grid(grid);
  CurveGrid c;
  c.kind = kind;
  c.n = n;
  c.parameter_grid = grid;
  c.realized_row = realized_y;
  c.values.resize(n + 1, static_cast<Eigen::Index>(grid.size()));
  c.slope_sign.resize(n + 1, static_cast<Eigen::Index>(grid.size()));
  auto value = detail::curve_function(kind, n);
  for (std::size_t j = 0; j < grid.size(); ++j)
    for (int y = 0; y <= n; ++y) {
      c.values(y, static_cast<Eigen::Index>(j)) = value(y, grid[j]);
      c.slope_sign(y, static_cast<Eigen::Index>(j)) = detail::slope_sign_at(kind, n, y, grid[j]);
    }
  if (!c.values.allFinite()) fail(ErrorKind::Numeric, "non-finite curve value");
  return c;
}

inline CurveGrid score_curves(int n, const std::vector<double>& grid, int realized_y) {
  return make_curves(CurveKind::StandardizedScore, n, grid, realized_y);
}

inline CurveGrid llr_curves(int n, const std::vector<double>& grid, int realized_y) {
  return make_curves(CurveKind::LogLikelihoodRatio, n, grid, realized_y);
}

struct CurveRow {
  int y;
  double p;
  double value;
  bool realized;
  int slope_sign;
};

inline std::vector<CurveRow> curve_rows(const CurveGrid& c) {
  std::vector<CurveRow> rows;
  for (int y = 0; y <= c.n; ++y)
    for (std::size_t j = 0; j < c.parameter_grid.size(); ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      rows.push_back({y, c.parameter_grid[j], c.values(y, jj), y == c.realized_row, c.slope_sign(y, jj)});
    }
  return rows;
}

struct SliceRow {
  int y;
  double value;
  double probability;
  int slope_sign;
};

// Distribution of the curve values across outcomes at a fixed p.
struct VerticalSlice {
  CurveKind kind;
  double p;
  int realized;
  std::vector<SliceRow> rows;

  double mean() const {
    double m = 0;
    for (const auto& r : rows) m += r.probability * r.value;
    return m;
  }
  double variance() const {
    double m = mean(), v = 0;
    for (const auto& r : rows) v += r.probability * (r.value - m) * (r.value - m);
    return v;
  }

  // Outcomes other than the realized one whose curve crosses the slice with
  // the realized curve's slope sign at a value at least as extreme.
  std::vector<int> as_extreme() const {
    const SliceRow& obs = rows[static_cast<std::size_t>(realized)];
    std::vector<int> out;
    for (const auto& r : rows) {
      if (r.y == realized || r.slope_sign != obs.slope_sign) continue;
      bool extreme = kind == CurveKind::LogLikelihoodRatio
                         ? r.value >= obs.value
                         : (obs.value <= 0 ? r.value <= obs.value : r.value >= obs.value);
      if (extreme) out.push_back(r.y);
    }
    return out;
  }

  // Mass of the realized outcome plus everything as extreme.
  double tail_mass() const {
    double m = rows[static_cast<std::size_t>(realized)].probability;
    for (int y : as_extreme()) m += rows[static_cast<std::size_t>(y)].probability;
    return m;
  }
};

inline VerticalSlice vertical_slice(CurveKind kind, int n, double p, int realized_y) {
  require_count(n, realized_y);
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::InvalidArgument, "slice p must lie in (0, 1)");
  VerticalSlice s{kind, p, realized_y, {}};
  auto value = detail::curve_function(kind, n);
  for (int y = 0; y <= n; ++y)
    s.rows.push_back({y, value(y, p), std::exp(log_binomial_pmf(y, n, p)),
                      detail::slope_sign_at(kind, n, y, p)});
  return s;
}

inline VerticalSlice vertical_slice(const CurveGrid& c, double p) {
  require(!c.parameter_grid.empty() && p >= c.parameter_grid.front() && p <= c.parameter_grid.back(),
          "slice p outside the grid range");
  return vertical_slice(c.kind, c.n, p, c.realized_row);
}

// Pr_theta(Y <= y) or Pr_theta(Y >= y) for a one-parameter family on counts.
inline double count_tail(const ModelFamily& family, int y, double theta, bool lower_tail) {
  return expect_scalar(ExpectationEngine::exact(), family, scalar_vec(theta), [&](const Outcome& o) {
    return lower_tail ? (o(0) <= y ? 1.0 : 0.0) : (o(0) >= y ? 1.0 : 0.0);
  });
}

// Interval from letting z depend on the parameter: the upper endpoint solves
// Pr(Y <= y) = alpha, the lower endpoint Pr(Y >= y) = alpha. Assumes the
// family is stochastically increasing in theta.
inline IntervalResult tail_z_adjusted_ci(const ModelFamily& family, int y, double alpha,
                                         IntervalSide side, const ParameterRange& range) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  require(family.support.is_finite() && family.dim() == 1, "tail_z_adjusted_ci needs a finite one-parameter family");
  IntervalResult r;
  r.side = side;
  r.lower = range.domain_lo;
  r.upper = range.domain_hi;
  r.lower_at_boundary = side == IntervalSide::UpperOnly;
  r.upper_at_boundary = side == IntervalSide::LowerOnly;
  if (side != IntervalSide::LowerOnly) {
    auto f = [&](double t) { return count_tail(family, y, t, true) - alpha; };  // decreasing
    if (f(range.search_hi) >= 0.0) {
      r.upper_at_boundary = true;
      r.add_note("upper endpoint at the domain boundary");
    } else {
      r.upper = roots::bisect(f, range.search_lo, range.search_hi, 1e-12);
      r.closed_upper = true;
    }
  }
  if (side != IntervalSide::UpperOnly) {
    auto f = [&](double t) { return count_tail(family, y, t, false) - alpha; };  // increasing
    if (f(range.search_lo) >= 0.0) {
      r.lower_at_boundary = true;
      r.add_note("lower endpoint at the domain boundary");
    } else {
      r.lower = roots::bisect(f, range.search_lo, range.search_hi, 1e-12);
      r.closed_lower = true;
    }
  }
  if (r.lower > r.upper) r.empty = true;
  return r;
}

inline IntervalResult binomial_tail_ci(int n, int y, double alpha, IntervalSide side) {
  require_count(n, y);
  return tail_z_adjusted_ci(bernoulli_sum(n), y, alpha, side, ParameterRange::probability());
}

}  // namespace genestim
