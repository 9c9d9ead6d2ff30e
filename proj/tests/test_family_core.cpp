#include "genestim/expectation.hpp"
#include "genestim/families.hpp"
#include "genestim/fisher.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace genestim;

namespace {

// Independent binomial pmf, multiplicative form.
double binom_pmf(int n, int k, double p) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

const ExpectationEngine kExact = ExpectationEngine::exact();

}  // namespace

TEST(Expect, BinomialMeanAndMass) {
  auto fam = bernoulli_sum(20);
  Vec p = scalar_vec(0.5);
  EXPECT_NEAR(expect_scalar(kExact, fam, p, [](const Outcome& y) { return y(0); }), 10.0, 1e-12);
  EXPECT_NEAR(expect_scalar(kExact, fam, p, [](const Outcome&) { return 1.0; }), 1.0, 1e-12);
}

TEST(Expect, SecondCentralMomentMatchesEnumeration) {
  auto fam = bernoulli_sum(20);
  double oracle = 0.0;
  for (int y = 0; y <= 20; ++y) oracle += (y - 6.0) * (y - 6.0) * binom_pmf(20, y, 0.3);
  double got = expect_scalar(kExact, fam, scalar_vec(0.3),
                             [](const Outcome& y) { return (y(0) - 6) * (y(0) - 6); });
  EXPECT_NEAR(got, oracle, 1e-12);
  EXPECT_NEAR(got, 4.2, 1e-12);
}

TEST(Expect, ExactModeIsBitReproducible) {
  auto fam = two_binomial(20, 30);
  Vec param = vec2(0.3, 21.0);
  auto h = [](const Outcome& y) { return Vec(y.cwiseAbs2()); };
  Vec a = expect(kExact, fam, param, h).value;
  Vec b = expect(kExact, fam, param, h).value;
  EXPECT_EQ(a(0), b(0));
  EXPECT_EQ(a(1), b(1));
}

TEST(Expect, ErrorsOutsideDomainAndWithoutSampler) {
  auto fam = bernoulli_sum(20);
  EXPECT_THROW(expect_scalar(kExact, fam, scalar_vec(1.2), [](const Outcome&) { return 1.0; }), Error);
  ModelFamily bare = fam;
  bare.support = SupportDescriptor::finite(fam.support.outcomes());
  EXPECT_THROW(expect_scalar(ExpectationEngine::monte_carlo(100, 1), bare, scalar_vec(0.5),
                             [](const Outcome&) { return 1.0; }),
               Error);
}

TEST(Expect, MonteCarloReportsSeAndIsReproducible) {
  auto fam = normal_location(10);
  auto mc = ExpectationEngine::monte_carlo(20000, 7);
  auto h = [](const Outcome& y) { return scalar_vec(y(0)); };
  Expectation a = expect(mc, fam, scalar_vec(1.0), h);
  Expectation b = expect(mc, fam, scalar_vec(1.0), h);
  ASSERT_EQ(a.se.size(), 1);
  EXPECT_EQ(a.value(0), b.value(0));
  EXPECT_NEAR(a.value(0), 1.0, 4 * a.se(0));
  EXPECT_NEAR(a.se(0), std::sqrt(0.1 / 20000), 2e-4);
  EXPECT_EQ(a.batch_means.size(), 20u);
}

TEST(Expect, MonteCarloIndependentOfWorkerCount) {
  auto fam = student_t3_location(5);
  auto mc = ExpectationEngine::monte_carlo(5500, 3);
  auto h = [](const Outcome& y) { return scalar_vec(y.sum()); };
  setenv("GENESTIM_THREADS", "1", 1);
  double one = expect(mc, fam, scalar_vec(0.0), h).value(0);
  setenv("GENESTIM_THREADS", "4", 1);
  double four = expect(mc, fam, scalar_vec(0.0), h).value(0);
  unsetenv("GENESTIM_THREADS");
  EXPECT_EQ(one, four);
}

TEST(Support, FiniteRejectsDuplicatesAndEmpty) {
  EXPECT_THROW(SupportDescriptor::finite({}), Error);
  EXPECT_THROW(SupportDescriptor::finite({scalar_vec(1), scalar_vec(1)}), Error);
  auto s = SupportDescriptor::finite({scalar_vec(0), scalar_vec(3)});
  EXPECT_EQ(*s.index_of(scalar_vec(3)), 1u);
  EXPECT_FALSE(s.index_of(scalar_vec(2)).has_value());
}

TEST(Support, ProbabilitiesSumToOne) {
  for (double p : {0.05, 0.3, 0.5, 0.95}) {
    auto fam = bernoulli_sum(20);
    EXPECT_NEAR(expect_scalar(kExact, fam, scalar_vec(p), [](const Outcome&) { return 1.0; }), 1.0, 1e-12);
  }
  auto tb = two_binomial(20, 30);
  for (double th : {-2.0, 0.0, 1.5})
    EXPECT_NEAR(expect_scalar(kExact, tb, vec2(th, 12.0), [](const Outcome&) { return 1.0; }), 1.0, 1e-12);
}

TEST(Score, BinomialValues) {
  auto fam = bernoulli_sum(20);
  EXPECT_NEAR(score(fam, scalar_vec(6), scalar_vec(0.3))(0), 0.0, 1e-12);
  EXPECT_NEAR(score(fam, scalar_vec(6), scalar_vec(0.5))(0), -16.0, 1e-12);
  EXPECT_NEAR(finite_difference_score(fam, scalar_vec(6), scalar_vec(0.5))(0), -16.0, 1e-7);
}

TEST(Score, NormalLocationAtMle) {
  auto fam = normal_location(10);
  EXPECT_NEAR(score(fam, scalar_vec(0.0), scalar_vec(0.0))(0), 0.0, 1e-12);
}

TEST(Score, FiniteDifferenceStencilRejectsNonFinite) {
  auto fam = bernoulli_sum(20);
  fam.score_interest = nullptr;
  EXPECT_THROW(score(fam, scalar_vec(3), scalar_vec(1e-7)), Error);
}

TEST(Score, AnalyticMatchesFiniteDifference) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_real_distribution<double> loc(-2.0, 2.0);
  auto check = [&](const ModelFamily& fam, const Outcome& y, const Vec& param) {
    Vec a = score(fam, y, param);
    Vec f = finite_difference_score(fam, y, param);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      EXPECT_LE(std::abs(a(i) - f(i)), 1e-6 * std::max(1.0, std::abs(a(i)))) << fam.name;
  };
  auto bern = bernoulli_sum(20);
  auto logodds = bernoulli_sum_log_odds(20);
  auto norm = normal_location(10);
  auto cauchy = cauchy_location(5);
  auto t3 = student_t3_location(10);
  auto tb = two_binomial(20, 30);
  TwoBinomialMap map(20, 30);
  for (int i = 0; i < 100; ++i) {
    Outcome yb = scalar_vec(static_cast<int>(u(gen) * 21));
    double p = u(gen);
    check(bern, yb, scalar_vec(p));
    check(logodds, yb, scalar_vec(logit(p)));
    check(norm, scalar_vec(loc(gen)), scalar_vec(loc(gen)));
    Outcome yc(5);
    for (int j = 0; j < 5; ++j) yc(j) = 3 * loc(gen);
    check(cauchy, yc, scalar_vec(loc(gen)));
    Outcome yt(10);
    for (int j = 0; j < 10; ++j) yt(j) = 3 * loc(gen);
    check(t3, yt, scalar_vec(loc(gen)));
    Vec tp = map.to_interest_nuisance(u(gen), u(gen));
    check(tb, vec2(static_cast<int>(u(gen) * 21), static_cast<int>(u(gen) * 31)), tp);
  }
}

TEST(Score, MeanZeroExact) {
  auto tb = two_binomial(20, 30);
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    auto fam = bernoulli_sum(20);
    EXPECT_LT(std::abs(expect(kExact, fam, scalar_vec(p), [&](const Outcome& y) {
                         return score(fam, y, scalar_vec(p));
                       }).value(0)),
              1e-10);
    TwoBinomialMap map(20, 30);
    Vec param = map.to_interest_nuisance(p, 1.0 - p * 0.8);
    Vec m = expect(kExact, tb, param, [&](const Outcome& y) { return score(tb, y, param); }).value;
    EXPECT_LT(m.cwiseAbs().maxCoeff(), 1e-10);
  }
  auto norm = normal_location(10);
  for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    double m = expect_scalar(kExact, norm, scalar_vec(a),
                             [&](const Outcome& y) { return score(norm, y, scalar_vec(a))(0); });
    EXPECT_LT(std::abs(m), 1e-10);
  }
}

TEST(Score, MeanZeroMonteCarlo) {
  auto mc = ExpectationEngine::monte_carlo(20000, 5);
  for (const auto& fam : {cauchy_location(5), student_t3_location(10), normal_sample_location(4)})
    for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      Expectation e = expect(mc, fam, scalar_vec(a), [&](const Outcome& y) {
        return score(fam, y, scalar_vec(a));
      });
      EXPECT_LE(std::abs(e.value(0)), 4 * e.se(0)) << fam.name << " a=" << a;
    }
}

TEST(Fisher, BinomialInformation) {
  auto fam = bernoulli_sum(20);
  FisherInfo fi = fisher_info(kExact, fam, scalar_vec(0.5));
  EXPECT_NEAR(fi.interest(0, 0), 80.0, 1e-9);
  ASSERT_TRUE(fi.perp.has_value());
  EXPECT_NEAR((*fi.perp)(0, 0), 80.0, 1e-9);
}

TEST(Fisher, OuterProductMatchesNegativeHessian) {
  auto fam = bernoulli_sum(20);
  for (int i = 1; i <= 9; ++i) {
    double p = i / 10.0;
    FisherInfo fi = fisher_info(kExact, fam, scalar_vec(p));
    Mat h = expected_negative_hessian(kExact, fam, scalar_vec(p));
    EXPECT_NEAR(fi.interest(0, 0), h(0, 0), 1e-8 * std::max(1.0, h(0, 0)));
    EXPECT_NEAR(fi.interest(0, 0), 20.0 / (p * (1 - p)), 1e-8 * fi.interest(0, 0));
  }
}

TEST(Fisher, NormalLocationExactAndMonteCarlo) {
  auto fam = normal_location(10);
  for (double a : {-2.0, 0.0, 1.5})
    EXPECT_NEAR(fisher_info(kExact, fam, scalar_vec(a)).interest(0, 0), 10.0, 1e-9);
  auto mc = ExpectationEngine::monte_carlo(40000, 9);
  FisherInfo fi = fisher_info(mc, fam, scalar_vec(0.0));
  EXPECT_NEAR(fi.interest(0, 0), 10.0, 3 * fi.full_se(0, 0));
}

TEST(Fisher, TwoBinomialBlocks) {
  auto fam = two_binomial(20, 30);
  FisherInfo fi = fisher_info(kExact, fam, vec2(0.0, 25.0));
  ASSERT_TRUE(fi.perp.has_value());
  EXPECT_NEAR((*fi.perp)(0, 0), 1.0 / (1.0 / 5.0 + 1.0 / 7.5), 1e-10);
  EXPECT_NEAR((*fi.perp)(0, 0), 3.0, 1e-10);
  EXPECT_NEAR(fi.cross(0, 0), 0.0, 1e-10);
  EXPECT_GE(fi.interest(0, 0) - (*fi.perp)(0, 0), -1e-12);
}

TEST(Fisher, OrthogonalityGridAndPsd) {
  auto fam = two_binomial(20, 30);
  TwoBinomialMap map(20, 30);
  for (double p1 : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double p2 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      FisherInfo fi = fisher_info(kExact, fam, map.to_interest_nuisance(p1, p2));
      EXPECT_LT(std::abs(fi.cross(0, 0)), 1e-10);
      double a = 20 * p1 * (1 - p1), b = 30 * p2 * (1 - p2);
      EXPECT_NEAR((*fi.perp)(0, 0), a * b / (a + b), 1e-9);
      EXPECT_NEAR(fi.nuisance(0, 0), 1.0 / (a + b), 1e-12);
      EXPECT_TRUE(linalg::is_psd(fi.full, 1e-12));
    }
}

TEST(Fisher, SingularNuisanceReportedNotInverted) {
  Mat full(2, 2);
  full << 2.0, 0.0, 0.0, 0.0;
  FisherInfo fi = make_fisher_info(full, 1);
  EXPECT_TRUE(fi.nuisance_singular);
  EXPECT_FALSE(fi.perp.has_value());
  EXPECT_THROW(fi.bound(), Error);
}

TEST(Families, TwoBinomialMapRoundTrip) {
  TwoBinomialMap map(20, 30);
  Vec t = map.to_interest_nuisance(0.5, 0.5);
  EXPECT_EQ(t(0), 0.0);
  EXPECT_EQ(t(1), 25.0);
  auto nat = map.to_natural(0.0, 25.0);
  EXPECT_NEAR(nat.p1, 0.5, 1e-12);
  EXPECT_NEAR(nat.p2, 0.5, 1e-12);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 200; ++i) {
    double p1 = u(gen), p2 = u(gen);
    Vec tt = map.to_interest_nuisance(p1, p2);
    auto back = map.to_natural(tt(0), tt(1));
    EXPECT_LT(std::abs(back.p1 - p1), 1e-10);
    EXPECT_LT(std::abs(back.p2 - p2), 1e-10);
  }
}

TEST(Families, TwoBinomialThetaMonotoneInP1) {
  TwoBinomialMap map(20, 30);
  for (double nuis : {0.5, 12.0, 25.0, 49.0}) {
    auto [lo, hi] = map.p1_range(nuis);
    double prev = -INFINITY;
    for (int i = 1; i < 1000; ++i) {
      double p1 = lo + (hi - lo) * i / 1000.0;
      double th = map.theta_of(p1, nuis);
      EXPECT_GT(th, prev);
      prev = th;
    }
  }
}

TEST(Families, BinomialLogDensity) {
  auto fam = bernoulli_sum(20);
  EXPECT_NEAR(fam.log_density(scalar_vec(6), scalar_vec(0.3)), std::log(binom_pmf(20, 6, 0.3)), 1e-12);
}

TEST(Families, CatalogAndErrors) {
  auto cat = builtin_families();
  EXPECT_GE(cat.size(), 5u);
  EXPECT_NO_THROW(make_builtin_family("two-binomial", {20, 30}));
  EXPECT_THROW(make_builtin_family("bernoulli-sum", {0}), Error);
  EXPECT_THROW(make_builtin_family("nope", {1}), Error);
  TwoBinomialMap map(20, 30);
  EXPECT_THROW(map.to_interest_nuisance(0.0, 0.5), Error);
  EXPECT_THROW(map.to_natural(0.0, 50.0), Error);
}

TEST(Families, QuadratureIntegratesNormalMoments) {
  auto fam = normal_location(10);
  double m2 = expect_scalar(kExact, fam, scalar_vec(1.0),
                            [](const Outcome& y) { return (y(0) - 1.0) * (y(0) - 1.0); });
  EXPECT_NEAR(m2, 0.1, 1e-13);
}
