#pragma once

#include "genestim/core.hpp"
#include "genestim/families.hpp"
#include "genestim/interval_result.hpp"
#include "genestim/parallel.hpp"
#include "genestim/roots.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace genestim::odds {

inline constexpr double kZ95 = 1.959964;
inline constexpr std::size_t kScanPoints = 2048;
inline constexpr double kClip = 1e-9;

struct TwoBinomialData {
  int x1 = 0, x2 = 0, n1 = 1, n2 = 1;

  void validate() const {
    if (n1 <= 0 || n2 <= 0) fail(ErrorKind::InvalidArgument, "n1 and n2 must be positive");
    if (x1 < 0 || x1 > n1 || x2 < 0 || x2 > n2)
      fail(ErrorKind::InvalidArgument, "counts must satisfy 0 <= x1 <= n1, 0 <= x2 <= n2");
  }
  int total() const { return x1 + x2; }
};

enum class NuisanceKind { Profiled, PlusC, Fixed };

struct NuisanceRule {
  NuisanceKind kind = NuisanceKind::Profiled;
  double c = 0.0;
  double value = 0.0;

  static NuisanceRule profiled() { return {}; }
  static NuisanceRule plus_c(double c) {
    if (!(c >= 0.0)) fail(ErrorKind::InvalidArgument, "plus-c constant must be >= 0");
    return {NuisanceKind::PlusC, c, 0.0};
  }
  static NuisanceRule fixed(double v) { return {NuisanceKind::Fixed, 0.0, v}; }
};

inline std::string to_string(const NuisanceRule& r) {
  switch (r.kind) {
    case NuisanceKind::Profiled: return "profiled";
    case NuisanceKind::PlusC: return "plus-c(" + std::to_string(r.c) + ")";
    case NuisanceKind::Fixed: return "fixed(" + std::to_string(r.value) + ")";
  }
  return "unknown";
}

// n1(x1+c)/(n1+2c) + n2(x2+c)/(n2+2c); c = 0 gives x1 + x2.
inline double plus_c_nuisance(const TwoBinomialData& d, double c) {
  d.validate();
  if (!(c >= 0.0)) fail(ErrorKind::InvalidArgument, "plus-c constant must be >= 0");
  return d.n1 * (d.x1 + c) / (d.n1 + 2.0 * c) + d.n2 * (d.x2 + c) / (d.n2 + 2.0 * c);
}

inline double resolve_nuisance(const TwoBinomialData& d, const NuisanceRule& rule) {
  switch (rule.kind) {
    case NuisanceKind::Profiled: return plus_c_nuisance(d, 0.0);
    case NuisanceKind::PlusC: return plus_c_nuisance(d, rule.c);
    case NuisanceKind::Fixed: return rule.value;
  }
  return 0.0;
}

// Standardized score at natural parameters:
// [1/(n1 p1 q1) + 1/(n2 p2 q2)]^{-1/2} [(x1/n1 - p1)/(p1 q1) - (x2/n2 - p2)/(p2 q2)].
inline double sbar_natural(double x1, double x2, int n1, int n2, double p1, double p2) {
  double v1 = p1 * (1.0 - p1), v2 = p2 * (1.0 - p2);
  double d = 1.0 / (n1 * v1) + 1.0 / (n2 * v2);
  double num = (x1 / n1 - p1) / v1 - (x2 / n2 - p2) / v2;
  return num / std::sqrt(d);
}

// (1/(n1 p1 q1) + 1/(n2 p2 q2))^{-1}, the orthogonalized information for theta.
inline double information_perp(int n1, int n2, double p1, double p2) {
  return 1.0 / (1.0 / (n1 * p1 * (1 - p1)) + 1.0 / (n2 * p2 * (1 - p2)));
}

// s_bar at (theta, nuisance from the rule).
inline double profiled_sbar(const TwoBinomialData& d, double theta, const NuisanceRule& rule) {
  d.validate();
  TwoBinomialMap map(d.n1, d.n2);
  double nuis = resolve_nuisance(d, rule);
  if (!map.feasible_nuisance(nuis) || !std::isfinite(theta))
    fail(ErrorKind::Domain, "(theta, nuisance) has no interior (p1, p2)");
  auto nat = map.to_natural(theta, nuis);
  return sbar_natural(d.x1, d.x2, d.n1, d.n2, nat.p1, nat.p2);
}

// Profiled point estimate log[(x1/(n1-x1)) / (x2/(n2-x2))]; +-inf at the edges.
inline double log_odds_ratio_estimate(const TwoBinomialData& d) {
  return std::log(double(d.x1)) - std::log(double(d.n1 - d.x1)) - std::log(double(d.x2)) +
         std::log(double(d.n2 - d.x2));
}

namespace detail {

inline bool inside_set(double s, double z, IntervalSide side, bool equal_sign) {
  switch (side) {
    case IntervalSide::TwoSided: return equal_sign ? s * s <= z * z : s * s < z * z;
    case IntervalSide::UpperOnly: return equal_sign ? s >= -z : s > -z;
    case IntervalSide::LowerOnly: return equal_sign ? s <= z : s < z;
  }
  return false;
}

}  // namespace detail

// z-standard interval for theta = log odds ratio. With the nuisance fixed by
// the rule, the set {s_bar^2 <= z^2} (or a one-sided version) is located on
// the feasible p1 range by a sign scan, the component holding the s_bar = 0
// point is kept, and its edges are bisected to 1e-12 in p1 and mapped to theta.
inline IntervalResult z_interval(const TwoBinomialData& d, double z, const NuisanceRule& rule,
                                 IntervalSide side = IntervalSide::TwoSided, bool equal_sign = true) {
  d.validate();
  if (!(z > 0.0) || !std::isfinite(z)) fail(ErrorKind::InvalidArgument, "z must be positive");
  const TwoBinomialMap map(d.n1, d.n2);
  const double nuis = resolve_nuisance(d, rule);
  const double total = d.n1 + d.n2;
  constexpr double inf = std::numeric_limits<double>::infinity();

  IntervalResult r;
  r.z = z;
  r.side = side;
  r.closed_lower = r.closed_upper = equal_sign;

  if (!(nuis >= 0.0 && nuis <= total) || !std::isfinite(nuis))
    fail(ErrorKind::Domain, "nuisance value outside [0, n1 + n2]; no feasible p1 range");
  if (nuis == 0.0 || nuis == total) {
    // Every (p1, p2) on the constraint sits at a corner and the data match it
    // exactly: s_bar is identically 0 in the limit.
    r.lower_at_boundary = r.upper_at_boundary = true;
    if (equal_sign) {
      r.whole_domain = true;
      r.add_note("nuisance on the boundary; s_bar = 0 everywhere, whole line");
    } else {
      r.empty = true;
      r.add_note("nuisance on the boundary; strict inequality never holds");
    }
    return r;
  }

  auto [lo, hi] = map.p1_range(nuis);
  const double a = lo + kClip, b = hi - kClip;
  auto sbar = [&](double p1) {
    return sbar_natural(d.x1, d.x2, d.n1, d.n2, p1, map.p2_of(p1, nuis));
  };
  auto inside = [&](double p1) { return detail::inside_set(sbar(p1), z, side, equal_sign); };

  std::vector<double> grid = roots::linspace(a, b, kScanPoints);
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s[i] = sbar(grid[i]);

  // Anchor: where s_bar = 0. An interior sign change is refined by bisection;
  // otherwise the grid point nearest zero (an edge for boundary data).
  std::size_t left_in, right_in;  // grid indices bounding the anchor component
  double anchor = 0.0;
  std::size_t sc = grid.size();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if ((s[i] >= 0) != (s[i + 1] >= 0)) {
      sc = i;
      break;
    }
  if (sc < grid.size()) {
    anchor = roots::bisect(sbar, grid[sc], grid[sc + 1], 1e-15);
    left_in = sc + 1;   // first index at or right of the anchor
    right_in = sc;      // last index at or left of the anchor
  } else {
    std::size_t im = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (std::abs(s[i]) < std::abs(s[im])) im = i;
    if (!detail::inside_set(s[im], z, side, equal_sign)) {
      r.whole_domain = true;
      r.lower_at_boundary = r.upper_at_boundary = true;
      r.add_note("s_bar = 0 point not bracketed; whole line returned");
      return r;
    }
    anchor = grid[im];
    left_in = right_in = im;
  }

  // Walk left from the anchor while inside.
  double left_p1;
  bool left_open_end = false;
  {
    std::size_t j = right_in;
    bool started_inside = (sc < grid.size()) ? detail::inside_set(s[j], z, side, equal_sign) : true;
    if (!started_inside) {
      left_p1 = roots::bisect_predicate(inside, grid[j], anchor, 1e-12);
    } else {
      while (j > 0 && detail::inside_set(s[j - 1], z, side, equal_sign)) --j;
      if (j == 0) {
        left_open_end = true;
        left_p1 = a;
      } else {
        left_p1 = roots::bisect_predicate(inside, grid[j - 1], grid[j], 1e-12);
      }
    }
  }
  double right_p1;
  bool right_open_end = false;
  {
    std::size_t j = left_in;
    bool started_inside = (sc < grid.size()) ? detail::inside_set(s[j], z, side, equal_sign) : true;
    if (!started_inside) {
      right_p1 = roots::bisect_predicate(inside, anchor, grid[j], 1e-12);
    } else {
      while (j + 1 < grid.size() && detail::inside_set(s[j + 1], z, side, equal_sign)) ++j;
      if (j + 1 == grid.size()) {
        right_open_end = true;
        right_p1 = b;
      } else {
        right_p1 = roots::bisect_predicate(inside, grid[j], grid[j + 1], 1e-12);
      }
    }
  }

  if (left_open_end) {
    r.lower = -inf;
    r.lower_at_boundary = true;
    r.closed_lower = false;
    r.add_note("lower endpoint -inf (component reaches the feasible edge)");
  } else {
    r.lower = map.theta_of(left_p1, nuis);
    if (left_p1 - a < 1e-7) {
      r.lower_at_boundary = true;
      r.add_note("lower endpoint within 1e-7 of the clipped p1 range");
    }
  }
  if (right_open_end) {
    r.upper = inf;
    r.upper_at_boundary = true;
    r.closed_upper = false;
    r.add_note("upper endpoint +inf (component reaches the feasible edge)");
  } else {
    r.upper = map.theta_of(right_p1, nuis);
    if (b - right_p1 < 1e-7) {
      r.upper_at_boundary = true;
      r.add_note("upper endpoint within 1e-7 of the clipped p1 range");
    }
  }
  return r;
}

// Noncentral hypergeometric law of x1 given t = x1 + x2, log odds ratio lpsi.
struct ConditionalLaw {
  int lo = 0, hi = 0;
  std::vector<double> prob;  // index x - lo

  double upper_tail(int x) const {  // Pr(X >= x)
    double s = 0.0;
    for (int k = std::max(x, lo); k <= hi; ++k) s += prob[static_cast<std::size_t>(k - lo)];
    return s;
  }
  double lower_tail(int x) const {  // Pr(X <= x)
    double s = 0.0;
    for (int k = lo; k <= std::min(x, hi); ++k) s += prob[static_cast<std::size_t>(k - lo)];
    return s;
  }
};

inline ConditionalLaw conditional_law(int n1, int n2, int t, double lpsi) {
  ConditionalLaw law;
  law.lo = std::max(0, t - n2);
  law.hi = std::min(n1, t);
  std::vector<double> lw;
  double mx = -std::numeric_limits<double>::infinity();
  for (int x = law.lo; x <= law.hi; ++x) {
    double v = log_choose(n1, x) + log_choose(n2, t - x) + x * lpsi;
    lw.push_back(v);
    mx = std::max(mx, v);
  }
  double sum = 0.0;
  for (double& v : lw) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : lw) v /= sum;
  law.prob = std::move(lw);
  return law;
}

// Conditional exact interval for the odds ratio psi, inverting the two
// one-sided tests at (1 - confidence)/2 each.
inline IntervalResult fisher_exact_interval(const TwoBinomialData& d, double confidence = 0.95) {
  d.validate();
  if (!(confidence > 0.0 && confidence < 1.0))
    fail(ErrorKind::InvalidArgument, "confidence must lie in (0, 1)");
  const double alpha = (1.0 - confidence) / 2.0;
  const int t = d.total();
  IntervalResult r;
  r.lower = 0.0;
  r.upper = std::numeric_limits<double>::infinity();
  r.closed_lower = r.closed_upper = true;
  r.z = alpha;
  if (t == 0 || t == d.n1 + d.n2) {
    r.lower_at_boundary = r.upper_at_boundary = r.whole_domain = true;
    r.closed_lower = r.closed_upper = false;
    r.add_note("degenerate margin; interval is (0, inf)");
    return r;
  }
  const int lo = std::max(0, t - d.n2), hi = std::min(d.n1, t);
  if (d.x1 == lo) {
    r.lower_at_boundary = true;
    r.closed_lower = false;
    r.add_note("x1 at the lower support edge; lower endpoint 0");
  } else {
    auto f = [&](double l) { return conditional_law(d.n1, d.n2, t, l).upper_tail(d.x1) - alpha; };
    r.lower = std::exp(roots::bisect(f, -50.0, 50.0, 1e-13));
  }
  if (d.x1 == hi) {
    r.upper_at_boundary = true;
    r.closed_upper = false;
    r.add_note("x1 at the upper support edge; upper endpoint inf");
  } else {
    auto f = [&](double l) { return conditional_law(d.n1, d.n2, t, l).lower_tail(d.x1) - alpha; };
    r.upper = std::exp(roots::bisect(f, -50.0, 50.0, 1e-13));
  }
  return r;
}

// The same interval on the log odds ratio scale.
inline IntervalResult to_log_scale(IntervalResult r) {
  r.lower = std::log(r.lower);
  r.upper = std::log(r.upper);
  return r;
}

enum class Method { ZStandard, FisherExact };

inline const char* to_string(Method m) { return m == Method::ZStandard ? "z-standard" : "fisher-exact"; }

struct DesignRow {
  double odds_ratio, p1, p2;
};

// True-parameter rows of the n1 = 20, n2 = 30 coverage study.
inline std::vector<DesignRow> table1_design() {
  return {{1.0, 0.01, 0.01},  {1.0, 0.20, 0.20},  {1.0, 0.50, 0.50},  {1.0, 0.70, 0.70},
          {1.0, 0.90, 0.90},  {1.5, 0.015, 0.01}, {1.5, 0.273, 0.20}, {1.5, 0.60, 0.50},
          {1.5, 0.778, 0.70}, {1.5, 0.931, 0.90}, {4.0, 0.039, 0.01}, {4.0, 0.50, 0.20},
          {4.0, 0.80, 0.50},  {4.0, 0.903, 0.70}, {4.0, 0.973, 0.90}};
}

struct CoverageCell {
  double odds_ratio, p1, p2;
  double c;  // ignored for the Fisher method
  bool equal_sign;
  Method method;
  double coverage;
};

struct CoverageConfig {
  int n1 = 20, n2 = 30;
  double z = kZ95;
  double confidence = 0.95;
  std::vector<double> c_list{0.0, 0.5, 1.0};
  std::vector<bool> equal_sign_options{true, false};
  std::vector<Method> methods{Method::ZStandard, Method::FisherExact};
};

namespace detail {

// Binomial(n1, p1) x Binomial(n2, p2) mass of outcome (x1, x2), from log space.
inline double joint_mass(int x1, int x2, int n1, int n2, double p1, double p2) {
  return std::exp(log_binomial_pmf(x1, n1, p1) + log_binomial_pmf(x2, n2, p2));
}

inline double sum_largest_first(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

// Exact coverage of theta_true = log(odds_ratio) by enumeration of every
// (x1, x2). Masses of covered outcomes are summed largest first.
inline std::vector<CoverageCell> coverage_table(const CoverageConfig& cfg,
                                                const std::vector<DesignRow>& rows) {
  for (const auto& row : rows)
    if (!(row.p1 > 0 && row.p1 < 1 && row.p2 > 0 && row.p2 < 1 && row.odds_ratio > 0))
      fail(ErrorKind::InvalidArgument, "coverage rows need interior probabilities");
  const int n1 = cfg.n1, n2 = cfg.n2;
  const std::size_t outcomes = static_cast<std::size_t>((n1 + 1) * (n2 + 1));

  struct Setting {
    Method method;
    double c;
    bool equal_sign;
  };
  std::vector<Setting> settings;
  for (Method m : cfg.methods)
    for (bool eq : cfg.equal_sign_options) {
      if (m == Method::FisherExact) {
        settings.push_back({m, 0.0, eq});
      } else {
        for (double c : cfg.c_list) settings.push_back({m, c, eq});
      }
    }

  // Intervals on the log odds ratio scale, one per setting and outcome.
  std::vector<std::vector<IntervalResult>> intervals(settings.size(), std::vector<IntervalResult>(outcomes));
  parallel_for(settings.size() * outcomes, [&](std::size_t job) {
    const Setting& st = settings[job / outcomes];
    const std::size_t k = job % outcomes;
    TwoBinomialData d{static_cast<int>(k) / (n2 + 1), static_cast<int>(k) % (n2 + 1), n1, n2};
    IntervalResult r = st.method == Method::ZStandard
                           ? z_interval(d, cfg.z, NuisanceRule::plus_c(st.c), IntervalSide::TwoSided, st.equal_sign)
                           : to_log_scale(fisher_exact_interval(d, cfg.confidence));
    if (st.method == Method::FisherExact && !st.equal_sign) {
      r.closed_lower = r.closed_upper = false;
    }
    intervals[job / outcomes][k] = r;
  });

  std::vector<CoverageCell> cells;
  for (const auto& row : rows) {
    const double theta = std::log(row.odds_ratio);
    for (std::size_t si = 0; si < settings.size(); ++si) {
      std::vector<double> covered;
      for (std::size_t k = 0; k < outcomes; ++k) {
        if (!intervals[si][k].contains(theta)) continue;
        int x1 = static_cast<int>(k) / (n2 + 1), x2 = static_cast<int>(k) % (n2 + 1);
        covered.push_back(detail::joint_mass(x1, x2, n1, n2, row.p1, row.p2));
      }
      cells.push_back({row.odds_ratio, row.p1, row.p2, settings[si].c, settings[si].equal_sign,
                       settings[si].method, detail::sum_largest_first(covered)});
    }
  }
  return cells;
}

inline const CoverageCell& find_cell(const std::vector<CoverageCell>& cells, double odds_ratio,
                                     double p1, double p2, Method method, double c, bool equal_sign) {
  for (const auto& cell : cells)
    if (cell.odds_ratio == odds_ratio && cell.p1 == p1 && cell.p2 == p2 && cell.method == method &&
        cell.equal_sign == equal_sign && (method == Method::FisherExact || cell.c == c))
      return cell;
  fail(ErrorKind::InvalidArgument, "coverage cell not found");
}

struct EndpointTails {
  int x1, x2;
  double left_tail;   // Pr(s_bar >= observed) at the lower Fisher endpoint
  double right_tail;  // Pr(s_bar <= observed) at the upper Fisher endpoint
};

// One-sided score-test tail probabilities at the endpoints of Fisher's exact
// interval. At an endpoint psi_E the model is (p1, p2) from
// (log psi_E, x1 + x2); every outcome is ordered by s_bar at that same model.
inline EndpointTails endpoint_tails(const TwoBinomialData& d, double confidence = 0.95) {
  d.validate();
  const int n1 = d.n1, n2 = d.n2;
  const TwoBinomialMap map(n1, n2);
  IntervalResult f = fisher_exact_interval(d, confidence);
  const double t = d.total();
  auto tail = [&](double psi, bool upper) {
    if (!(psi > 0.0) || !std::isfinite(psi)) return 0.0;
    auto nat = map.to_natural(std::log(psi), t);
    const double s_obs = sbar_natural(d.x1, d.x2, n1, n2, nat.p1, nat.p2);
    std::vector<double> masses;
    for (int a = 0; a <= n1; ++a)
      for (int b = 0; b <= n2; ++b) {
        double s = sbar_natural(a, b, n1, n2, nat.p1, nat.p2);
        bool hit = upper ? s >= s_obs - 1e-12 : s <= s_obs + 1e-12;
        if (hit) masses.push_back(detail::joint_mass(a, b, n1, n2, nat.p1, nat.p2));
      }
    return detail::sum_largest_first(masses);
  };
  return {d.x1, d.x2, tail(f.lower, true), tail(f.upper, false)};
}

inline std::vector<EndpointTails> fisher_endpoint_tails(int n1, int n2, double confidence = 0.95) {
  if (n1 < 2 || n2 < 2) fail(ErrorKind::InvalidArgument, "n1 and n2 must be at least 2");
  const std::size_t cols = static_cast<std::size_t>(n2 - 1);
  std::vector<EndpointTails> out(static_cast<std::size_t>(n1 - 1) * cols);
  parallel_for(out.size(), [&](std::size_t k) {
    TwoBinomialData d{1 + static_cast<int>(k / cols), 1 + static_cast<int>(k % cols), n1, n2};
    out[k] = endpoint_tails(d, confidence);
  });
  return out;
}

inline int count_exceeding(const std::vector<EndpointTails>& rows, double level) {
  int n = 0;
  for (const auto& r : rows) n += (r.left_tail > level || r.right_tail > level);
  return n;
}

}  // namespace genestim::odds
