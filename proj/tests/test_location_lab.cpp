#include "genestim/location_lab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace genestim;
using namespace genestim::location;

namespace {

double bisect_t3_root(const std::vector<double>& x, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    (t3_score(x, m) > 0 ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

McRunConfig small(DataFamily fam, std::int64_t reps = 20000) {
  McRunConfig c;
  c.data_family = fam;
  c.reps = reps;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Zeta, Anchors) {
  EXPECT_DOUBLE_EQ(zeta(0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(zeta(0.25, 0.75), -1.0);
  EXPECT_DOUBLE_EQ(zeta(0.75, 0.25), 1.0);
  EXPECT_DOUBLE_EQ(zeta(1 - 0.03125, 0.03125), 4.0);
  EXPECT_EQ(zeta(0.0, 1.0), -INFINITY);
  EXPECT_EQ(zeta(1.0, 0.0), INFINITY);
  EXPECT_THROW(zeta(-0.1, 1.0), Error);
  auto p = reference_probabilities();
  ASSERT_EQ(p.size(), 99u);
  EXPECT_NEAR(p.front(), 0.005, 1e-15);
  EXPECT_NEAR(p.back(), 0.995, 1e-12);
  EXPECT_EQ(p[49], 0.5);
  for (std::size_t i = 0; i < 99; ++i) EXPECT_NEAR(p[i] + p[98 - i], 1.0, 1e-14);
}

TEST(Estimators, FixedPointsAndSymmetry) {
  auto c = estimators({2.5, 2.5, 2.5, 2.5});
  EXPECT_EQ(c.mean, 2.5);
  EXPECT_EQ(c.median, 2.5);
  EXPECT_EQ(c.t3_mle, 2.5);
  auto s = estimators({-3.0, -1.0, -0.2, 0.2, 1.0, 3.0});
  EXPECT_NEAR(s.mean, 0.0, 1e-15);
  EXPECT_NEAR(s.median, 0.0, 1e-15);
  EXPECT_NEAR(s.t3_mle, 0.0, 1e-12);
  EXPECT_EQ(estimators({1.0, 4.0, 2.0, 3.0}).median, 2.5);
  EXPECT_THROW(estimators({}), Error);
}

TEST(Estimators, OutlierDownweighted) {
  std::vector<double> x{0, 0, 10};
  auto e = estimators(x);
  EXPECT_NEAR(e.mean, 10.0 / 3.0, 1e-15);
  EXPECT_EQ(e.median, 0.0);
  EXPECT_TRUE(e.t3_converged);
  EXPECT_GT(e.t3_mle, 0.0);
  EXPECT_LT(e.t3_mle, 10.0 / 3.0);
  EXPECT_NEAR(e.t3_mle, bisect_t3_root(x, 0.0, 10.0 / 3.0), 1e-10);
}

TEST(Estimators, LocationEquivarianceAndScoreRoot) {
  std::mt19937_64 gen(11);
  std::student_t_distribution<double> t3(3.0);
  std::uniform_real_distribution<double> shift(-5, 5);
  for (int r = 0; r < 100; ++r) {
    std::vector<double> x(10);
    for (auto& v : x) v = t3(gen);
    double delta = shift(gen);
    std::vector<double> y = x;
    for (auto& v : y) v += delta;
    auto a = estimators(x), b = estimators(y);
    ASSERT_TRUE(a.t3_converged && b.t3_converged);
    EXPECT_NEAR(b.mean - a.mean, delta, 1e-12);
    EXPECT_NEAR(b.median - a.median, delta, 1e-12);
    EXPECT_NEAR(b.t3_mle - a.t3_mle, delta, 1e-12);
    EXPECT_LT(std::abs(t3_score(x, a.t3_mle)), 1e-8);
  }
}

TEST(Comparison, DeterministicAndMeanEfficient) {
  auto a = run_comparison(small(DataFamily::Normal));
  auto b = run_comparison(small(DataFamily::Normal));
  EXPECT_EQ(a.archives.at("median").values, b.archives.at("median").values);
  ASSERT_EQ(a.efficiency.size(), 3u);
  EXPECT_EQ(a.efficiency[0].estimator, "mean");
  EXPECT_LE(std::abs(a.efficiency[0].efficiency - 1.0), 3 * a.efficiency[0].se + 1e-12);
  EXPECT_DOUBLE_EQ(a.efficiency[0].var_ratio, 1.0);
  EXPECT_LT(a.efficiency[1].efficiency, a.efficiency[2].efficiency);
  EXPECT_LT(a.efficiency[2].efficiency, 1.0);
  EXPECT_EQ(a.t3_failures, 0);
}

TEST(Comparison, IndependentOfWorkerCount) {
  auto cfg = small(DataFamily::T3, 5000);
  auto a = run_comparison(cfg);
  setenv("GENESTIM_THREADS", "1", 1);
  auto b = run_comparison(cfg);
  unsetenv("GENESTIM_THREADS");
  EXPECT_EQ(a.archives.at("t3_mle").values, b.archives.at("t3_mle").values);
}

TEST(Comparison, RejectsBadConfig) {
  auto c = small(DataFamily::Normal);
  c.reps = 10;
  EXPECT_THROW(run_comparison(c), Error);
  c = small(DataFamily::Normal);
  c.rescale = -1.0;
  EXPECT_THROW(run_comparison(c), Error);
  c = small(DataFamily::Normal);
  c.estimators = {"mode"};
  EXPECT_THROW(run_comparison(c), Error);
}

TEST(ZetaCurves, SelfComparisonIsIdentity) {
  auto r = run_comparison(small(DataFamily::Normal));
  const auto& m = r.archives.at("mean");
  auto c = zeta_curve(m, m);
  ASSERT_EQ(c.reference_zeta.size(), 99u);
  for (std::size_t i = 0; i < 99; ++i) EXPECT_DOUBLE_EQ(c.reference_zeta[i], c.comparison_zeta[i]);
  for (std::size_t i = 0; i < 99; ++i) EXPECT_NEAR(c.reference_zeta[i], -c.reference_zeta[98 - i], 0.05);
  for (std::size_t i = 1; i < 99; ++i) EXPECT_GT(c.reference_zeta[i], c.reference_zeta[i - 1]);
  EXPECT_NEAR(m.zeta_at(m.quantile(0.25)), -1.0, 0.01);
  EXPECT_NEAR(m.zeta_at(m.quantile(0.5)), 0.0, 0.01);
  EXPECT_NEAR(m.zeta_at(m.quantile(0.75)), 1.0, 0.01);
}

TEST(ZetaCurves, SlopesOrderedAsDescribed) {
  auto cfg = small(DataFamily::Normal);
  auto normal = zeta_curves(run_comparison(cfg));
  EXPECT_LT(zeta_slope(normal[1]), zeta_slope(normal[2]));
  EXPECT_LT(zeta_slope(normal[2]), 1.0);
  auto t3 = zeta_curves(run_comparison(small(DataFamily::T3)));
  EXPECT_GT(zeta_slope(t3[1]), 1.0);
  EXPECT_GT(zeta_slope(t3[2]), 1.0);
}

TEST(ZetaCurves, OverlaysEmitted) {
  auto cfg = McRunConfig::figure_defaults(DataFamily::T3, 3);
  cfg.reps = 5000;
  auto r = run_comparison(cfg);
  ASSERT_EQ(r.overlays.size(), 4u);
  EXPECT_EQ(r.overlays[0].label, "mean_n15");
  auto curves = zeta_curves(r);
  EXPECT_EQ(curves.size(), 7u);
  // Larger samples concentrate the mean: slope above 1.
  EXPECT_GT(zeta_slope(curves[3]), 1.0);
}

TEST(Rescaling, NormalRescaleMatchesSmallerSample) {
  McRunConfig ten = small(DataFamily::Normal, 20000);
  ten.estimators = {"mean"};
  ten.rescale = std::sqrt(10.0 / 9.0);
  McRunConfig nine = small(DataFamily::Normal, 20000);
  nine.n = 9;
  nine.seed = 99;
  nine.estimators = {"mean"};
  auto ks = ks_two_sample(run_comparison(ten).archives.at("mean").values,
                          run_comparison(nine).archives.at("mean").values);
  EXPECT_FALSE(ks.reject()) << ks.statistic << " vs " << ks.critical_01;
  McRunConfig plain = small(DataFamily::Normal, 20000);
  plain.estimators = {"mean"};
  auto far = ks_two_sample(run_comparison(plain).archives.at("mean").values,
                           std::vector<double>(20000, 0.5));
  EXPECT_TRUE(far.reject());
}

TEST(Ks, KnownStatistic) {
  auto r = ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6});
  EXPECT_DOUBLE_EQ(r.statistic, 0.5);
}
