#pragma once

#include "genestim/core.hpp"
#include "genestim/families.hpp"
#include "genestim/information.hpp"
#include "genestim/parallel.hpp"
#include "genestim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace genestim::location {

// 99 equispaced probabilities from .005 to .995; index 49 is the median.
inline std::vector<double> reference_probabilities() {
  std::vector<double> p(99);
  for (int i = 0; i < 99; ++i) p[static_cast<std::size_t>(i)] = 0.005 + 0.99 * i / 98.0;
  p[49] = 0.5;
  return p;
}

// Signed log2 of twice the smaller tail. A zero tail gives +-inf.
inline double zeta(double tail_area_low, double tail_area_high) {
  require(tail_area_low >= 0.0 && tail_area_low <= 1.0 && tail_area_high >= 0.0 && tail_area_high <= 1.0,
          "zeta: tail areas must lie in [0, 1]");
  if (tail_area_low <= 0.5) return std::log2(2.0 * tail_area_low);
  return -std::log2(2.0 * tail_area_high);
}

struct LocationEstimates {
  double mean = 0.0;
  double median = 0.0;
  double t3_mle = 0.0;
  bool t3_converged = true;  // false: t3_mle holds the median fallback
  int t3_iterations = 0;
};

inline double t3_score(const std::vector<double>& x, double a) {
  double s = 0.0;
  for (double v : x) s += t3_score_term(v - a);
  return s;
}

inline double t3_score_derivative(const std::vector<double>& x, double a) {
  double s = 0.0;
  for (double v : x) {
    double d = v - a, q = 3.0 + d * d;
    s += 4.0 * (d * d - 3.0) / (q * q);
  }
  return s;
}

namespace detail {

// Type-7 quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile probability must lie in [0, 1]");
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double sorted_median(const std::vector<double>& s) {
  std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

}  // namespace detail

inline constexpr double kT3Tolerance = 1e-10;
inline constexpr int kT3MaxIterations = 200;

// Root of the t3 location score near the median. Newton steps are accepted
// only inside a sign-change bracket; otherwise the bracket is bisected.
inline LocationEstimates estimators(const std::vector<double>& sample) {
  require(!sample.empty(), "estimators: sample must be nonempty");
  for (double v : sample) require(std::isfinite(v), "estimators: sample values must be finite");
  std::vector<double> s = sample;
  std::sort(s.begin(), s.end());
  LocationEstimates e;
  double total = 0.0;
  for (double v : s) total += v;
  e.mean = total / static_cast<double>(s.size());
  e.median = detail::sorted_median(s);

  double iqr = detail::sorted_quantile(s, 0.75) - detail::sorted_quantile(s, 0.25);
  double half = iqr > 0.0 ? iqr : std::max(1.0, s.back() - s.front());
  double lo = e.median - half, hi = e.median + half;
  // score > 0 left of every root, < 0 right of every root.
  int expand = 0;
  while (t3_score(s, lo) <= 0.0 && expand++ < 60) lo = e.median - (half *= 2.0);
  half = iqr > 0.0 ? iqr : std::max(1.0, s.back() - s.front());
  expand = 0;
  while (t3_score(s, hi) >= 0.0 && expand++ < 60) hi = e.median + (half *= 2.0);

  double a = e.median;
  double fa = t3_score(s, a);
  bool converged = fa == 0.0;
  int it = 0;
  while (!converged && it < kT3MaxIterations) {
    ++it;
    if (fa > 0.0) lo = a;
    else hi = a;
    double d = t3_score_derivative(s, a);
    double next = d < 0.0 ? a - fa / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    double step = std::abs(next - a);
    a = next;
    fa = t3_score(s, a);
    double scale = std::max(1.0, std::abs(a));
    if (fa == 0.0 || (step < kT3Tolerance * scale && std::abs(fa) < 1e-9) ||
        hi - lo < 4.0 * std::numeric_limits<double>::epsilon() * scale)
      converged = true;
  }
  // Polish to machine precision so the root is reproducible under shifts.
  for (int k = 0; converged && k < 3; ++k) {
    double d = t3_score_derivative(s, a);
    if (!(d < 0.0)) break;
    double next = a - fa / d;
    if (!(next >= lo && next <= hi)) break;
    double fn = t3_score(s, next);
    if (std::abs(fn) > std::abs(fa)) break;
    a = next;
    fa = fn;
  }
  e.t3_iterations = it;
  e.t3_converged = converged && std::abs(fa) < 1e-8;
  e.t3_mle = e.t3_converged ? a : e.median;
  return e;
}

enum class DataFamily { Normal, T3 };

inline const char* to_string(DataFamily f) { return f == DataFamily::Normal ? "normal" : "t3"; }

inline DataFamily parse_data_family(const std::string& s) {
  if (s == "normal") return DataFamily::Normal;
  if (s == "t3") return DataFamily::T3;
  fail(ErrorKind::InvalidArgument, "unknown data family '" + s + "' (expected normal or t3)");
}

inline const std::vector<std::string>& estimator_labels() {
  static const std::vector<std::string> labels{"mean", "median", "t3_mle"};
  return labels;
}

struct McRunConfig {
  DataFamily data_family = DataFamily::Normal;
  int n = 10;
  std::int64_t reps = 100000;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators = estimator_labels();
  std::optional<double> rescale;     // multiplies every observation
  std::vector<int> n_overlays;       // mean at alternate sample sizes
  std::vector<double> rescale_overlays;  // mean of data multiplied by each factor

  void validate() const {
    require(n >= 1, "n must be >= 1");
    require(reps >= 1000, "reps must be >= 1000");
    if (rescale) require(*rescale > 0.0 && std::isfinite(*rescale), "rescale must be positive");
    require(!estimators.empty(), "at least one estimator is required");
    for (const auto& e : estimators)
      require(std::find(estimator_labels().begin(), estimator_labels().end(), e) != estimator_labels().end(),
              "unknown estimator '" + e + "'");
    for (int m : n_overlays) require(m >= 1, "overlay sample sizes must be >= 1");
    for (double f : rescale_overlays) require(f > 0.0 && std::isfinite(f), "overlay rescale factors must be positive");
  }

  // Sample sizes and rescale factors drawn in the figures.
  static McRunConfig figure_defaults(DataFamily fam, std::uint64_t seed) {
    McRunConfig c;
    c.data_family = fam;
    c.seed = seed;
    if (fam == DataFamily::Normal) {
      c.n_overlays = {7, 9};
    } else {
      c.n_overlays = {15, 17};
      c.rescale_overlays = {1.0 / std::sqrt(1.50), 1.0 / std::sqrt(1.78)};
    }
    return c;
  }
};

inline ModelFamily generating_family(DataFamily fam, int n) {
  return fam == DataFamily::Normal ? normal_sample_location(n) : student_t3_location(n);
}

struct EfficiencyRow {
  std::string estimator;
  double efficiency = 0.0;
  double se = 0.0;
  double var_ratio = 0.0;  // Var(mean) / Var(estimator)
};

struct Archive {
  std::string label;
  std::vector<double> values;  // replication order
  std::vector<double> sorted;

  Archive() = default;
  Archive(std::string l, std::vector<double> v) : label(std::move(l)), values(std::move(v)), sorted(values) {
    std::sort(sorted.begin(), sorted.end());
  }
  double quantile(double p) const { return detail::sorted_quantile(sorted, p); }
  double frac_le(double x) const {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
           static_cast<double>(sorted.size());
  }
  double frac_ge(double x) const {
    return static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x)) /
           static_cast<double>(sorted.size());
  }
  // Both tails include mass at x.
  double zeta_at(double x) const { return zeta(frac_le(x), frac_ge(x)); }
};

struct ComparisonResult {
  McRunConfig config;
  std::map<std::string, Archive> archives;
  std::vector<Archive> overlays;
  std::vector<EfficiencyRow> efficiency;
  std::int64_t t3_failures = 0;
};

namespace detail {

inline constexpr std::int64_t kBlock = 1000;

struct Draws {
  std::vector<double> mean, median, t3, score;
  std::int64_t failures = 0;
};

// One stream per (family, n, rescale role); blocks carry fixed substreams.
inline Draws draw(DataFamily fam, int n, std::int64_t reps, std::uint64_t seed, double scale,
                  std::uint64_t stream, bool full) {
  ModelFamily family = generating_family(fam, n);
  const Sampler& sampler = family.support.sampler();
  Draws d;
  d.mean.resize(static_cast<std::size_t>(reps));
  if (full) {
    d.median.resize(d.mean.size());
    d.t3.resize(d.mean.size());
    d.score.resize(d.mean.size());
  }
  const std::int64_t blocks = (reps + kBlock - 1) / kBlock;
  std::vector<std::int64_t> fails(static_cast<std::size_t>(blocks), 0);
  const Vec zero = scalar_vec(0.0);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    auto gen = rng::make_engine(seed, stream, b);
    std::vector<double> x(static_cast<std::size_t>(n));
    const std::int64_t end = std::min<std::int64_t>(reps, (static_cast<std::int64_t>(b) + 1) * kBlock);
    for (std::int64_t r = static_cast<std::int64_t>(b) * kBlock; r < end; ++r) {
      Outcome y = sampler(zero, gen);
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = scale * y(i);
      auto idx = static_cast<std::size_t>(r);
      if (!full) {
        double t = 0.0;
        for (double v : x) t += v;
        d.mean[idx] = t / n;
        continue;
      }
      LocationEstimates e = estimators(x);
      d.mean[idx] = e.mean;
      d.median[idx] = e.median;
      d.t3[idx] = e.t3_mle;
      if (!e.t3_converged) ++fails[b];
      Outcome scaled(n);
      for (int i = 0; i < n; ++i) scaled(i) = x[static_cast<std::size_t>(i)];
      d.score[idx] = family.score_interest(scaled, zero)(0);
    }
  });
  for (auto f : fails) d.failures += f;
  return d;
}

inline double variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline std::uint64_t stream_for(DataFamily fam, int n, std::uint64_t role) {
  return rng::stream_id(to_string(fam)) ^ (static_cast<std::uint64_t>(n) << 32) ^ role;
}

}  // namespace detail

// Replicates the estimator comparison at true location 0. Efficiency is the
// squared correlation with the generating family's score at 0.
inline ComparisonResult run_comparison(const McRunConfig& config) {
  config.validate();
  ComparisonResult res;
  res.config = config;
  const double scale = config.rescale.value_or(1.0);
  auto d = detail::draw(config.data_family, config.n, config.reps, config.seed, scale,
                        detail::stream_for(config.data_family, config.n, 0), true);
  res.t3_failures = d.failures;
  if (static_cast<double>(d.failures) > 0.001 * static_cast<double>(config.reps))
    fail(ErrorKind::Numeric, "t3_mle failed to converge on " + std::to_string(d.failures) + " of " +
                                 std::to_string(config.reps) + " replications");

  std::map<std::string, std::vector<double>*> source{{"mean", &d.mean}, {"median", &d.median}, {"t3_mle", &d.t3}};
  const double var_mean = detail::variance(d.mean);
  std::vector<Vec> s_values(d.score.size());
  for (std::size_t i = 0; i < d.score.size(); ++i) s_values[i] = scalar_vec(d.score[i]);
  for (const auto& label : config.estimators) {
    const auto& v = *source.at(label);
    std::vector<Vec> g_values(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) g_values[i] = scalar_vec(v[i]);
    EfficiencyEstimate est = efficiency_from_pairs(s_values, g_values);
    res.efficiency.push_back({label, est.scalar(), est.scalar_se(), var_mean / detail::variance(v)});
    res.archives.emplace(label, Archive(label, v));
  }

  for (int m : config.n_overlays) {
    auto o = detail::draw(config.data_family, m, config.reps, config.seed, scale,
                          detail::stream_for(config.data_family, m, 1), false);
    res.overlays.emplace_back("mean_n" + std::to_string(m), std::move(o.mean));
  }
  for (double f : config.rescale_overlays) {
    std::vector<double> v = d.mean;
    for (double& x : v) x *= f;
    char buf[64];
    std::snprintf(buf, sizeof buf, "mean_x%.6g", f);
    res.overlays.emplace_back(buf, std::move(v));
  }
  return res;
}

struct ZetaCurve {
  std::string estimator_label;
  std::vector<double> reference_quantile_probs;
  std::vector<double> reference_zeta;
  std::vector<double> comparison_zeta;
  int dropped_points = 0;  // comparison tail was empty at that quantile
};

// Comparison zeta at the reference archive's quantiles.
inline ZetaCurve zeta_curve(const Archive& reference, const Archive& comparison,
                            const std::vector<double>& probs = reference_probabilities()) {
  ZetaCurve c;
  c.estimator_label = comparison.label;
  for (double p : probs) {
    double x = reference.quantile(p);
    double rz = reference.zeta_at(x), cz = comparison.zeta_at(x);
    if (!std::isfinite(rz) || !std::isfinite(cz)) {
      ++c.dropped_points;
      continue;
    }
    c.reference_quantile_probs.push_back(p);
    c.reference_zeta.push_back(rz);
    c.comparison_zeta.push_back(cz);
  }
  return c;
}

// Reference is the mean archive; one curve per estimator then per overlay.
inline std::vector<ZetaCurve> zeta_curves(const Archive& reference, const std::vector<Archive>& comparisons,
                                          const std::vector<Archive>& overlays) {
  std::vector<ZetaCurve> out;
  for (const auto& a : comparisons) out.push_back(zeta_curve(reference, a));
  for (const auto& a : overlays) out.push_back(zeta_curve(reference, a));
  return out;
}

inline std::vector<ZetaCurve> zeta_curves(const ComparisonResult& r) {
  require(r.archives.count("mean") != 0, "zeta curves need the mean archive as reference");
  std::vector<Archive> comps;
  for (const auto& label : r.config.estimators) comps.push_back(r.archives.at(label));
  return zeta_curves(r.archives.at("mean"), comps, r.overlays);
}

// Least-squares slope through the origin over points with |reference zeta| <= limit.
inline double zeta_slope(const ZetaCurve& c, double limit = 4.0) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < c.reference_zeta.size(); ++i) {
    double x = c.reference_zeta[i];
    if (std::abs(x) > limit) continue;
    sxy += x * c.comparison_zeta[i];
    sxx += x * x;
  }
  require(sxx > 0.0, "zeta_slope: no points in range");
  return sxy / sxx;
}

struct KsResult {
  double statistic = 0.0;
  double critical_01 = 0.0;  // asymptotic 1% critical value
  bool reject() const { return statistic > critical_01; }
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_two_sample: samples must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, 1.6276 * std::sqrt((na + nb) / (na * nb))};
}

}  // namespace genestim::location
