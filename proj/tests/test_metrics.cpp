#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "steinlab/errors.hpp"
#include "steinlab/metrics.hpp"

using namespace steinlab;
using namespace steinlab::metrics;
namespace fn = steinlab::functions;
using Law = ProbabilityLaw1D;

namespace {

Law random_pmf(std::mt19937_64& rng, long offset) {
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = size(rng);
  std::vector<long> support;
  std::vector<double> p;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    support.push_back(offset + i);
    p.push_back(u(rng) + 1e-3);
    total += p.back();
  }
  for (double& x : p) x /= total;
  return Law::pmf(support, p);
}

double gaussian_quantile(double mean, double sd, double u) {
  return boost::math::quantile(boost::math::normal_distribution<double>(mean, sd), u);
}

}  // namespace

TEST(FDivergence, Examples) {
  const auto kl = ConvexGenerator::kullback_leibler();
  const auto tv = ConvexGenerator::total_variation();
  EXPECT_NEAR(f_divergence(kl, Law::gaussian(1, 1), Law::gaussian(0, 1)), 0.5, 1e-10);
  EXPECT_NEAR(f_divergence(tv, Law::poisson(3), Law::poisson(3)), 0.0, 1e-12);
  EXPECT_NEAR(f_divergence(tv, Law::bernoulli(0.7), Law::bernoulli(0.4)), 0.6, 1e-12);
}

TEST(FDivergence, GaussianKlClosedForm) {
  const auto kl = ConvexGenerator::kullback_leibler();
  for (auto [m1, v1, m0, v0] : std::vector<std::array<double, 4>>{{0.3, 2.0, -0.1, 0.5}, {2.0, 0.7, 0.0, 1.0}}) {
    const double ref = 0.5 * (v1 / v0 + (m1 - m0) * (m1 - m0) / v0 - 1.0 + std::log(v0 / v1));
    EXPECT_NEAR(f_divergence(kl, Law::gaussian(m1, v1), Law::gaussian(m0, v0)), ref, 1e-9);
  }
}

TEST(FDivergence, DiscreteKlAgainstEnumeration) {
  const auto kl = ConvexGenerator::kullback_leibler();
  const double ref = oracle::poisson_sum(
      [](long n) {
        const double q = oracle::poisson_pmf(2.0, n);
        const double p = oracle::poisson_pmf(1.0, n);
        return q > 0.0 ? (q / p) * std::log(q / p) : 0.0;
      },
      1.0);
  // Closed form: lambda_q ln(lambda_q/lambda_p) - lambda_q + lambda_p.
  EXPECT_NEAR(f_divergence(kl, Law::poisson(2.0), Law::poisson(1.0)), 2.0 * std::log(2.0) - 1.0, 1e-10);
  EXPECT_NEAR(ref, 2.0 * std::log(2.0) - 1.0, 1e-8);
}

TEST(FDivergence, AbsoluteContinuityAndErrors) {
  const auto kl = ConvexGenerator::kullback_leibler();
  EXPECT_TRUE(std::isinf(f_divergence(kl, Law::pmf({0, 1}, {0.5, 0.5}), Law::point_mass(0))));
  // Mass of Q outside the support of P costs lim f(t)/t per unit.
  EXPECT_NEAR(f_divergence(ConvexGenerator::total_variation(), Law::pmf({0, 1}, {0.5, 0.5}), Law::point_mass(0)), 1.0,
              1e-15);
  const ConvexGenerator custom_h([](double t) { return std::pow(std::sqrt(t) - 1.0, 2); }, "custom");
  EXPECT_NEAR(custom_h.slope_at_infinity(), 1.0, 1e-9);
  const ConvexGenerator custom_kl([](double t) { return t > 0.0 ? t * std::log(t) : 0.0; }, "custom");
  EXPECT_TRUE(std::isinf(custom_kl.slope_at_infinity()));
  const ConvexGenerator chi2([](double t) { return (t - 1.0) * (t - 1.0); }, "chi2");
  EXPECT_TRUE(std::isinf(chi2.slope_at_infinity()));
  EXPECT_THROW(f_divergence(kl, Law::gaussian(0, 1), Law::poisson(1)), UnsupportedPair);
  EXPECT_THROW(Law::pmf({0, 1}, {1.2, -0.2}), InvalidLaw);
  EXPECT_THROW(Law::pmf({0, 1}, {0.5, 0.4}), InvalidLaw);
  EXPECT_THROW(Law::gaussian(0, 0), InvalidLaw);
  EXPECT_THROW(Law::poisson(-1), InvalidLaw);
  EXPECT_THROW(Law::empirical({}), InvalidLaw);
  EXPECT_THROW(ConvexGenerator([](double t) { return t; }, "not-normalized"), InvalidArgument);
  EXPECT_THROW(ConvexGenerator([](double t) { return std::sin(t - 1.0); }, "not-convex"), InvalidArgument);
}

TEST(TotalVariation, Examples) {
  EXPECT_EQ(total_variation(Law::poisson(2), Law::poisson(2)), 0.0);
  EXPECT_NEAR(total_variation(Law::bernoulli(0.7), Law::bernoulli(0.4)), 0.3, 1e-12);
  const double ref = 0.5 * oracle::poisson_sum(
                               [](long n) {
                                 return std::abs(oracle::poisson_pmf(1.0, n) - oracle::poisson_pmf(2.0, n)) /
                                        oracle::poisson_pmf(1.0, n);
                               },
                               1.0);
  EXPECT_NEAR(total_variation(Law::poisson(1), Law::poisson(2)), ref, 1e-10);
  EXPECT_THROW(total_variation(Law::gaussian(0, 1), Law::poisson(1)), UnsupportedPair);
}

TEST(TotalVariation, GaussianPairsUseHalfLines) {
  // Equal variances: sup over half-lines is 2 Phi(m/2) - 1.
  EXPECT_NEAR(total_variation(Law::gaussian(0, 1), Law::gaussian(0.6, 1)), 2.0 * oracle::normal_cdf(0.3) - 1.0, 1e-12);
  const double k = kolmogorov_gaussian({0.0, 1.0}, {0.0, 4.0});
  // CDFs of N(0,1) and N(0,4) cross only at 0, so the sup sits at the density crossing x = sqrt(8 ln 2 / 3).
  const double x = std::sqrt(8.0 * std::log(2.0) / 3.0);
  EXPECT_NEAR(k, oracle::normal_cdf(x) - oracle::normal_cdf(x / 2.0), 1e-12);
}

TEST(Hellinger, Examples) {
  EXPECT_NEAR(hellinger(Law::bernoulli(0.3), Law::bernoulli(0.3)), 0.0, 1e-12);
  EXPECT_NEAR(hellinger(Law::poisson(1), Law::poisson(1)), 0.0, 1e-12);
  EXPECT_NEAR(hellinger(Law::gaussian(0, 1), Law::gaussian(1, 1)), std::sqrt(2.0 - 2.0 * std::exp(-1.0 / 8.0)), 1e-9);
  // Poisson affinity: exp(-(sqrt a - sqrt b)^2 / 2).
  const double aff = std::exp(-0.5 * std::pow(std::sqrt(1.0) - std::sqrt(3.0), 2));
  EXPECT_NEAR(hellinger_divergence(Law::poisson(1), Law::poisson(3)), 2.0 - 2.0 * aff, 1e-11);
  EXPECT_NEAR(hellinger(Law::point_mass(0), Law::point_mass(5)), std::sqrt(2.0), 1e-12);
}

TEST(Wasserstein, Examples) {
  EXPECT_NEAR(wasserstein1_1d(Law::point_mass(0), Law::point_mass(1)), 1.0, 1e-12);
  for (double m : {-2.0, 0.1, 1.5}) {
    EXPECT_NEAR(wasserstein1_1d(Law::gaussian(0, 1), Law::gaussian(m, 1)), std::abs(m), 1e-8);
  }
  EXPECT_NEAR(wasserstein1_1d(Law::empirical({0, 1}), Law::empirical({0, 1})), 0.0, 1e-12);
  EXPECT_NEAR(wasserstein1_1d(Law::empirical({0.0, 3.0}), Law::empirical({1.0, 1.5})), 1.25, 1e-12);
}

TEST(Wasserstein, VarianceDifferenceAgainstQuantileCoupling) {
  // Coupling Y -> 2Y gives E|Y| = sqrt(2/pi) exactly.
  const double w = wasserstein1_1d(Law::gaussian(0, 1), Law::gaussian(0, 4));
  EXPECT_NEAR(w, std::sqrt(2.0 / std::numbers::pi), 1e-8);
  const double q = oracle::quantile_coupling_w1([](double u) { return gaussian_quantile(0.2, 1.0, u); },
                                                [](double u) { return gaussian_quantile(-0.5, 0.6, u); });
  EXPECT_NEAR(wasserstein1_1d(Law::gaussian(0.2, 1.0), Law::gaussian(-0.5, 0.36)), q, 1e-5);
}

TEST(Wasserstein, RescaledPoissonAgainstQuantileCoupling) {
  for (double lambda : {4.0, 25.0}) {
    std::vector<double> cdf;
    double acc = 0.0;
    for (long n = 0; n < static_cast<long>(lambda + 40 * std::sqrt(lambda) + 60); ++n) {
      acc += oracle::poisson_pmf(lambda, n);
      cdf.push_back(acc);
    }
    auto qp = [&](double u) {
      const long n = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      return (n - lambda) / std::sqrt(lambda);
    };
    const double q = oracle::quantile_coupling_w1([](double u) { return gaussian_quantile(0.0, 1.0, u); }, qp);
    EXPECT_NEAR(wasserstein1_1d(Law::gaussian(0, 1), Law::rescaled_poisson(lambda)), q, 2e-5) << lambda;
  }
}

TEST(MetricAxioms, PinskerOnRandomPairs) {
  std::mt19937_64 rng(20240601);
  const auto kl = ConvexGenerator::kullback_leibler();
  const auto tvg = ConvexGenerator::total_variation();
  int checked = 0;
  while (checked < 1000) {
    const Law p = random_pmf(rng, 0);
    const Law q = random_pmf(rng, 0);
    const double d = f_divergence(kl, p, q);
    const double tv = total_variation(p, q);
    EXPECT_LE(tv, std::sqrt(d / 2.0) + 1e-12);
    EXPECT_NEAR(f_divergence(tvg, q, p), 2.0 * tv, 1e-10);
    ++checked;
  }
}

TEST(MetricAxioms, SymmetryIdentityTriangle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Law a = random_pmf(rng, static_cast<long>(rng() % 5));
    const Law b = random_pmf(rng, static_cast<long>(rng() % 5));
    const Law c = random_pmf(rng, static_cast<long>(rng() % 5));
    EXPECT_NEAR(total_variation(a, b), total_variation(b, a), 1e-10);
    EXPECT_NEAR(hellinger(a, b), hellinger(b, a), 1e-10);
    EXPECT_NEAR(wasserstein1_1d(a, b), wasserstein1_1d(b, a), 1e-10);
    EXPECT_LE(wasserstein1_1d(a, c), wasserstein1_1d(a, b) + wasserstein1_1d(b, c) + 1e-8);
    EXPECT_LT(total_variation(a, a), 1e-10);
    EXPECT_LT(hellinger(a, a), 1e-10);
    EXPECT_LT(wasserstein1_1d(a, a), 1e-10);
  }
  for (const auto& [p, q] : std::vector<std::pair<Law, Law>>{{Law::gaussian(0, 1), Law::gaussian(0.4, 2.0)},
                                                            {Law::poisson(3), Law::poisson(5)}}) {
    EXPECT_NEAR(total_variation(p, q), total_variation(q, p), 1e-10);
    EXPECT_NEAR(hellinger(p, q), hellinger(q, p), 1e-10);
    EXPECT_NEAR(wasserstein1_1d(p, q), wasserstein1_1d(q, p), 1e-10);
    EXPECT_LT(wasserstein1_1d(p, p), 1e-10);
    EXPECT_LT(hellinger(p, p), 1e-10);
    EXPECT_LT(total_variation(p, p), 1e-10);
  }
}

TEST(KrDual, Examples) {
  const std::vector<SmoothTestFunction> family{fn::sine(1.0), fn::hyperbolic_tangent().scaled(0.5, "tanh/2"),
                                               fn::arctangent().scaled(0.5, "atan/2")};
  EXPECT_NEAR(kr_dual_lower_bound(Law::gaussian(0, 1), Law::gaussian(0, 1), family), 0.0, 1e-12);
  const double v = kr_dual_lower_bound(Law::gaussian(0, 1), Law::rescaled_poisson(4.0), family);
  EXPECT_LE(v, std::sqrt(std::numbers::pi) / (4.0 * std::numbers::sqrt2) / 2.0);
  EXPECT_GT(v, 0.0);
  const double lip = kr_dual_lower_bound(Law::gaussian(0, 1), Law::gaussian(0.1, 1), {fn::identity_clipped(1e3)});
  EXPECT_NEAR(lip, 0.1, 1e-9);
  EXPECT_THROW(kr_dual_lower_bound(Law::gaussian(0, 1), Law::gaussian(0, 1), {}), InvalidArgument);
  EXPECT_THROW(kr_dual_lower_bound(Law::gaussian(0, 1), Law::gaussian(1, 1), {fn::sine(3.0).with_norm_class(NormClass::c2b_unit)}),
               ContractError);
}

TEST(KrDual, NeverExceedsWassersteinForLipschitzFamilies) {
  const std::vector<SmoothTestFunction> family{fn::sine(1.0).with_norm_class(NormClass::lip1),
                                               fn::hyperbolic_tangent().with_norm_class(NormClass::lip1),
                                               fn::arctangent().with_norm_class(NormClass::lip1),
                                               fn::identity_clipped(2.0)};
  for (double lambda : {1.0, 4.0, 30.0}) {
    const Law p = Law::gaussian(0, 1);
    const Law q = Law::rescaled_poisson(lambda);
    EXPECT_LE(kr_dual_lower_bound(p, q, family), wasserstein1_1d(p, q) + 1e-10) << lambda;
  }
  const Law a = Law::pmf({0, 1, 4}, {0.2, 0.5, 0.3});
  const Law b = Law::pmf({1, 2}, {0.6, 0.4});
  EXPECT_LE(kr_dual_lower_bound(a, b, family), wasserstein1_1d(a, b) + 1e-12);
}

TEST(Expectation, PerLawKind) {
  const auto sq = fn::monomial(2);
  EXPECT_NEAR(expectation(Law::gaussian(1.0, 2.0), sq), 3.0, 1e-11);
  EXPECT_NEAR(expectation(Law::poisson(3.0), sq), 12.0, 1e-10);
  EXPECT_NEAR(expectation(Law::rescaled_poisson(7.0), sq), 1.0, 1e-10);
  EXPECT_NEAR(expectation(Law::pmf({1, 3}, {0.25, 0.75}), sq), 7.0, 1e-14);
  EXPECT_NEAR(expectation(Law::empirical({1.0, -2.0}), sq), 2.5, 1e-14);
}

TEST(Atoms, InfiniteSupportTails) {
  const auto a = atoms_of(Law::poisson(50));
  EXPECT_LT(a.tail_mass, 1e-13);
  double total = 0.0;
  for (double m : a.masses) total += m;
  EXPECT_NEAR(total + a.tail_mass, 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(a.points.begin(), a.points.end()));
  EXPECT_THROW(atoms_of(Law::gaussian(0, 1)), UnsupportedPair);
}
