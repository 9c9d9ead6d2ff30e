#include "genestim/intervals.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace genestim;

namespace {

// Roots of (y - np)^2 = z^2 np(1-p) in p: the quadratic
// (n^2 + z^2 n) p^2 - (2yn + z^2 n) p + y^2 = 0.
std::pair<double, double> quadratic_roots(int n, int y, double z) {
  double a = double(n) * n + z * z * n;
  double b = -(2.0 * y * n + z * z * n);
  double c = double(y) * y;
  double d = std::sqrt(b * b - 4 * a * c);
  return {(-b - d) / (2 * a), (-b + d) / (2 * a)};
}

double binom_cdf(int n, int y, double p) {
  double s = 0, c = 1;
  for (int k = 0; k <= y; ++k) {
    if (k > 0) c = c * (n - k + 1) / k;
    s += c * std::pow(p, k) * std::pow(1 - p, n - k);
  }
  return s;
}

}  // namespace

TEST(ScoreCurves, ValuesAndMonotonicity) {
  auto grid = default_grid();
  ASSERT_EQ(grid.size(), 512u);
  auto c = score_curves(20, grid, 6);
  EXPECT_EQ(c.values.rows(), 21);
  for (int y = 0; y <= 20; ++y)
    for (Eigen::Index j = 1; j < c.values.cols(); ++j) EXPECT_LT(c.values(y, j), c.values(y, j - 1));
  EXPECT_NEAR(binomial_sbar(20, 6, 0.3), 0.0, 1e-15);
  auto s = vertical_slice(CurveKind::StandardizedScore, 20, 0.5, 6);
  EXPECT_NEAR(s.rows[6].value, -1.7888543819998317, 1e-12);
  EXPECT_NEAR(s.rows[6].value, (6 - 10) / std::sqrt(5.0), 1e-12);
  for (Eigen::Index j = 0; j < c.values.cols(); ++j) EXPECT_LT(c.values(0, j), 0.0);
}

TEST(ScoreCurves, RejectsBadGrid) {
  EXPECT_THROW(score_curves(20, {0.0, 0.5}, 6), Error);
  EXPECT_THROW(score_curves(20, {0.2, 1.0}, 6), Error);
  EXPECT_THROW(score_curves(20, {0.5, 0.4}, 6), Error);
}

TEST(LlrCurves, KnownValues) {
  EXPECT_NEAR(binomial_llr(20, 6, 0.3), 0.0, 1e-13);
  EXPECT_NEAR(binomial_llr(20, 6, 0.5), 3.291315140202066, 1e-12);
  EXPECT_NEAR(binomial_llr(20, 0, 0.5), 27.725887222397812, 1e-12);
  auto c = llr_curves(20, default_grid(), 6);
  EXPECT_GE(c.values.minCoeff(), 0.0);
}

TEST(CiZ, TwoSidedMatchesQuadratic) {
  auto r = binomial_ci_z(20, 6, 2.0, IntervalSide::TwoSided);
  EXPECT_NEAR(r.lower, 0.14330409581681036, 1e-12);
  EXPECT_NEAR(r.upper, 0.5233625708498563, 1e-12);
  EXPECT_TRUE(r.closed_lower && r.closed_upper);
  for (int y = 1; y < 20; ++y)
    for (double z : {0.5, 1.0, 1.959964, 3.0}) {
      auto q = quadratic_roots(20, y, z);
      auto ci = binomial_ci_z(20, y, z, IntervalSide::TwoSided);
      EXPECT_NEAR(ci.lower, q.first, 1e-11);
      EXPECT_NEAR(ci.upper, q.second, 1e-11);
    }
}

TEST(CiZ, ZeroWidthAtMle) {
  auto r = binomial_ci_z(20, 10, 0.0, IntervalSide::TwoSided);
  EXPECT_NEAR(r.lower, 0.5, 1e-12);
  EXPECT_NEAR(r.upper, 0.5, 1e-12);
  EXPECT_FALSE(r.empty);
}

TEST(CiZ, BoundaryDataFlagged) {
  auto lo = binomial_ci_z(20, 0, 2.0, IntervalSide::LowerOnly);
  EXPECT_TRUE(lo.lower_at_boundary);
  EXPECT_EQ(lo.lower, 0.0);
  EXPECT_FALSE(lo.boundary_note.empty());
  auto two = binomial_ci_z(20, 0, 2.0, IntervalSide::TwoSided);
  EXPECT_TRUE(two.lower_at_boundary);
  EXPECT_NEAR(two.upper, 1.0 / 6.0, 1e-12);
  auto top = binomial_ci_z(20, 20, 2.0, IntervalSide::TwoSided);
  EXPECT_TRUE(top.upper_at_boundary);
  EXPECT_EQ(top.upper, 1.0);
  EXPECT_THROW(binomial_ci_z(20, 6, -1.0, IntervalSide::TwoSided), Error);
}

TEST(CiZ, OneSidedSetsMatchDefinition) {
  auto up = binomial_ci_z(20, 6, 2.0, IntervalSide::UpperOnly);
  EXPECT_TRUE(up.lower_at_boundary);
  EXPECT_NEAR(up.upper, 0.5233625708498563, 1e-12);
  auto lo = binomial_ci_z(20, 6, 2.0, IntervalSide::LowerOnly);
  EXPECT_TRUE(lo.upper_at_boundary);
  EXPECT_NEAR(lo.lower, 0.14330409581681036, 1e-12);
}

TEST(CiZ, Duality) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 0.99), zz(0.3, 3.0);
  for (int i = 0; i < 300; ++i) {
    int y = static_cast<int>(u(gen) * 21);
    double p0 = u(gen), z = zz(gen);
    auto ci = binomial_ci_z(20, y, z, IntervalSide::TwoSided);
    double s = binomial_sbar(20, y, p0);
    if (std::abs(std::abs(s) - z) < 1e-8) continue;
    EXPECT_EQ(ci.contains(p0), std::abs(s) <= z) << y << " " << p0 << " " << z;
  }
}

TEST(CiZ, EndpointsMonotoneInY) {
  double prev_lo = -1, prev_hi = -1;
  for (int y = 0; y <= 20; ++y) {
    auto ci = binomial_ci_z(20, y, 1.959964, IntervalSide::TwoSided);
    EXPECT_GE(ci.lower, prev_lo);
    EXPECT_GE(ci.upper, prev_hi);
    prev_lo = ci.lower;
    prev_hi = ci.upper;
  }
}

TEST(CiZ, ReparameterizationInvariance) {
  for (int y = 0; y <= 20; ++y) {
    auto p = binomial_ci_z(20, y, 1.959964, IntervalSide::TwoSided);
    auto e = binomial_log_odds_ci_z(20, y, 1.959964, IntervalSide::TwoSided);
    EXPECT_EQ(p.lower_at_boundary, e.lower_at_boundary);
    EXPECT_EQ(p.upper_at_boundary, e.upper_at_boundary);
    double lo = p.lower_at_boundary ? -INFINITY : logit(p.lower);
    double hi = p.upper_at_boundary ? INFINITY : logit(p.upper);
    if (std::isfinite(lo)) EXPECT_NEAR(lo, e.lower, 1e-10);
    else EXPECT_EQ(lo, e.lower);
    if (std::isfinite(hi)) EXPECT_NEAR(hi, e.upper, 1e-10);
    else EXPECT_EQ(hi, e.upper);
  }
}

TEST(Slices, ScoreSlicesStandardized) {
  for (double p : {0.5, 0.55, 0.03, 0.97}) {
    auto s = vertical_slice(CurveKind::StandardizedScore, 20, p, 6);
    EXPECT_NEAR(s.mean(), 0.0, 1e-10);
    EXPECT_NEAR(s.variance(), 1.0, 1e-10);
  }
  auto c = score_curves(20, default_grid(), 6);
  for (std::size_t j = 0; j < c.parameter_grid.size(); j += 37) {
    auto s = vertical_slice(c, c.parameter_grid[j]);
    EXPECT_NEAR(s.mean(), 0.0, 1e-10);
    EXPECT_NEAR(s.variance(), 1.0, 1e-10);
  }
}

TEST(Slices, LlrSliceSixPointsAndScoreTail) {
  for (double p : {0.5, 0.55}) {
    auto llr = vertical_slice(CurveKind::LogLikelihoodRatio, 20, p, 6);
    auto ext = llr.as_extreme();
    EXPECT_EQ(ext.size(), 6u);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(ext[static_cast<std::size_t>(i)], i);
    EXPECT_NEAR(llr.tail_mass(), binom_cdf(20, 6, p), 1e-12);
    auto sc = vertical_slice(CurveKind::StandardizedScore, 20, p, 6);
    EXPECT_NEAR(sc.tail_mass(), llr.tail_mass(), 1e-12);
  }
}

TEST(TailCi, ClopperPearsonUpper) {
  auto r = binomial_tail_ci(20, 6, 0.025, IntervalSide::UpperOnly);
  EXPECT_NEAR(r.upper, 0.5427891822762891, 1e-10);
  EXPECT_NEAR(binom_cdf(20, 6, r.upper), 0.025, 1e-10);
}

TEST(TailCi, BoundaryAndMedian) {
  auto r = binomial_tail_ci(20, 0, 0.1, IntervalSide::LowerOnly);
  EXPECT_TRUE(r.lower_at_boundary);
  EXPECT_EQ(r.lower, 0.0);
  auto m = binomial_tail_ci(20, 10, 0.5, IntervalSide::TwoSided);
  EXPECT_NEAR(m.upper, 0.5245795425097158, 1e-10);
  EXPECT_NEAR(m.lower, 0.475420457490284, 1e-10);
  EXPECT_THROW(binomial_tail_ci(20, 6, 1.0, IntervalSide::UpperOnly), Error);
  EXPECT_THROW(binomial_tail_ci(20, 6, 0.0, IntervalSide::UpperOnly), Error);
}

TEST(Curves, RowsCarryRealizedFlag) {
  auto c = llr_curves(20, default_grid(16), 6);
  auto rows = curve_rows(c);
  EXPECT_EQ(rows.size(), 21u * 16u);
  int realized = 0;
  for (const auto& r : rows) realized += r.realized;
  EXPECT_EQ(realized, 16);
}
