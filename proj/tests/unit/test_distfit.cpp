#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "climgen/distfit.hpp"
#include "climgen/error.hpp"
#include "climgen/validate.hpp"
#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

std::vector<double> weibull_quantiles(double k, double c, int n) {
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) out.push_back(weibull_quantile({k, c}, (i - 0.5) / n));
  return out;
}

double integrate(const std::function<double(double)>& f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
}

}  // namespace

TEST(Weibull, RecoversShapeAndScaleFromQuantiles) {
  const auto fit = weibull_fit(weibull_quantiles(2.0, 5.0, 1000));
  EXPECT_NEAR(fit.params.k, 2.0, 0.05);
  EXPECT_NEAR(fit.params.c, 5.0, 0.05);
  const auto exp_fit = weibull_fit(weibull_quantiles(1.0, 1.0, 1000));
  EXPECT_NEAR(exp_fit.params.k, 1.0, 0.03);
  EXPECT_NEAR(exp_fit.params.c, 1.0, 0.03);
}

TEST(Weibull, NegativeValueRejected) {
  auto v = weibull_quantiles(2.0, 5.0, 100);
  v[3] = -1.0;
  EXPECT_THROW(weibull_fit(v), Error);
}

TEST(Weibull, AllZeroIsDegenerate) { EXPECT_THROW(weibull_fit(std::vector<double>(50, 0.0)), Error); }

TEST(Weibull, SmallSampleFlagged) { EXPECT_TRUE(weibull_fit(weibull_quantiles(2.0, 5.0, 20)).small_sample); }

TEST(Weibull, DensityAndDistributionValues) {
  EXPECT_NEAR(weibull_pdf({1, 1}, 1.0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(weibull_pdf({2, 2}, 2.0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(weibull_pdf({1, 3}, 0.0), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(weibull_pdf({2, 3}, 0.0), 0.0);
  for (auto [k, c] : {std::pair{0.7, 2.0}, {2.0, 5.0}, {3.5, 1.2}})
    EXPECT_NEAR(weibull_cdf({k, c}, c), 1.0 - std::exp(-1.0), 1e-12);
}

TEST(Weibull, FittedMeanMatchesSampleMean) {
  for (auto [k, c] : {std::pair{1.0, 1.0}, {2.0, 5.0}, {3.0, 2.0}, {1.6, 7.0}}) {
    const auto v = weibull_quantiles(k, c, 1000);
    const double sample_mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    EXPECT_NEAR(weibull_mean(weibull_fit(v).params), sample_mean, 0.02 * sample_mean);
  }
}

TEST(Saunier, ClosedFormsAtGammaTwo) {
  EXPECT_NEAR(saunier_c1(2.0), 2.0, 1e-12);
  EXPECT_NEAR(saunier_x_moy(2.0), (2.0 * std::exp(2.0) - 10.0) / 8.0, 1e-12);
  EXPECT_NEAR(saunier_x_moy(2.0), 0.59726, 1e-5);
}

TEST(Saunier, GammaZeroLimit) {
  EXPECT_NEAR(saunier_c1(0.0), 6.0, 1e-12);
  EXPECT_NEAR(saunier_x_moy(0.0), 0.5, 1e-12);
  EXPECT_NEAR(saunier_c1(5e-5), saunier_c1(0.0), 1e-3);
  const auto p = saunier_solve(0.4, 0.8);
  EXPECT_NEAR(p.gamma1, 0.0, 1e-6);
  EXPECT_NEAR(p.c1, 6.0, 1e-5);
  EXPECT_NEAR(saunier_pdf(saunier_from_gamma(0.0, 1.0), 0.5), 1.5, 1e-12);
}

TEST(Saunier, SolveInvertsMean) {
  const auto p = saunier_solve(saunier_x_moy(2.0) * 0.8, 0.8);
  EXPECT_NEAR(p.gamma1, 2.0, 1e-6);
}

TEST(Saunier, UnattainableTargetRejected) {
  EXPECT_THROW(saunier_solve(0.9, 0.8), Error);
  EXPECT_THROW(saunier_solve(0.0, 0.8), Error);
}

TEST(Saunier, DensityIntegratesToOneWithMatchingMean) {
  for (double g : {-5.0, -1.0, 0.0, 1.0, 2.0, 5.0, 20.0}) {
    const auto p = saunier_from_gamma(g, 1.0);
    EXPECT_NEAR(integrate([&](double x) { return saunier_pdf(p, x); }), 1.0, 1e-9) << g;
    EXPECT_NEAR(integrate([&](double x) { return x * saunier_pdf(p, x); }), p.x_moy, 1e-8) << g;
    EXPECT_EQ(saunier_pdf(p, 0.0), 0.0);
    EXPECT_NEAR(saunier_pdf(p, 1.0), 0.0, 1e-12);
  }
}

TEST(Saunier, MeanStrictlyIncreasingInGamma) {
  double prev = -1.0;
  for (double g = -50.0; g <= 50.0; g += 0.25) {
    const double x = saunier_x_moy(g);
    EXPECT_GT(x, prev) << g;
    prev = x;
  }
}

TEST(Saunier, PrintedFormIsNotNormalised) {
  const auto p = saunier_from_gamma(2.0, 1.0);
  EXPECT_THROW(saunier_cdf(p, 0.5, SaunierForm::printed), Error);
}

TEST(Gaussian, FitHandValues) {
  const auto p = gaussian_fit(std::vector<double>{1, 2, 3});
  EXPECT_DOUBLE_EQ(p.mu, 2.0);
  EXPECT_DOUBLE_EQ(p.sigma, 1.0);
  EXPECT_THROW(gaussian_fit(std::vector<double>{1}), Error);
}

TEST(Sampling, DegenerateGaussianGivesConstant) {
  for (double x : sample_dist(GaussianParams{0.0, 0.0}, 5, 1)) EXPECT_EQ(x, 0.0);
}

TEST(Sampling, ExponentialMean) {
  const auto v = sample_dist(WeibullParams{1.0, 1.0}, 100000, 7);
  EXPECT_NEAR(std::accumulate(v.begin(), v.end(), 0.0) / v.size(), 1.0, 0.02);
}

TEST(Sampling, DeterministicPerSeed) {
  const Distribution d = saunier_from_gamma(2.0, 0.8);
  EXPECT_EQ(sample_dist(d, 100, 42), sample_dist(d, 100, 42));
  EXPECT_NE(sample_dist(d, 100, 42), sample_dist(d, 100, 43));
}

// One-sample KS of 1e5 draws against the model CDF at α = 0.01.
TEST(Sampling, DrawsFollowModelDistribution) {
  const std::vector<Distribution> laws{WeibullParams{2.0, 5.0}, GaussianParams{3.0, 2.0}, saunier_from_gamma(2.0, 0.8),
                                       saunier_from_gamma(-3.0, 0.7)};
  for (const auto& d : laws) {
    auto v = sample_dist(d, 100000, 99);
    std::sort(v.begin(), v.end());
    double dmax = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double f = cdf(d, v[i]);
      dmax = std::max({dmax, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    EXPECT_LT(dmax, 1.628 / std::sqrt(n)) << law_name(d);
  }
}

TEST(Distributions, CdfMonotoneAndBounded) {
  const std::vector<Distribution> laws{WeibullParams{0.8, 2.0}, GaussianParams{0.0, 1.0}, saunier_from_gamma(4.0, 0.9)};
  for (const auto& d : laws) {
    double prev = 0.0;
    for (double q = 0.001; q < 1.0; q += 0.001) {
      const double x = quantile(d, q);
      const double f = cdf(d, x);
      EXPECT_GE(f + 1e-12, prev);
      EXPECT_GE(pdf(d, x), 0.0);
      prev = f;
    }
  }
  EXPECT_NEAR(cdf(WeibullParams{2, 1}, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(cdf(WeibullParams{2, 1}, 1e6), 1.0, 1e-9);
  const auto s = saunier_from_gamma(3.0, 0.8);
  EXPECT_NEAR(cdf(s, 0.0), 0.0, 1e-9);
  EXPECT_NEAR(cdf(s, 0.8), 1.0, 1e-9);
}

TEST(ChiSquare, IdenticalCountsGiveZero) {
  const std::vector<double> obs{10, 20, 30};
  const auto r = chi2_from_counts(obs, obs, 0);
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(ChiSquare, HandComputedStatistic) {
  const auto r = chi2_from_counts(std::vector<double>{10, 20, 30}, std::vector<double>{20, 20, 20}, 0);
  EXPECT_DOUBLE_EQ(r.statistic, 10.0);
  EXPECT_EQ(r.dof, 2);
  EXPECT_EQ(r.pass, r.p_value >= r.alpha);
}

TEST(ChiSquare, SparseTailsMerged) {
  std::vector<GofBin> bins{{0, 1, 1, 1}, {1, 2, 30, 30}, {2, 3, 40, 40}, {3, 4, 2, 2}};
  const auto merged = merge_sparse_bins(bins);
  for (const auto& b : merged) EXPECT_GE(b.expected, kMinExpectedCount);
}

TEST(ChiSquare, SamplesFromFittedModelPass) {
  int passes = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto v = sample_dist(WeibullParams{2.0, 5.0}, 5000, seed);
    const Distribution fitted = weibull_fit(v).params;
    if (chi2_gof(v, fitted, 20, 0.05).pass) ++passes;
  }
  EXPECT_GE(passes, 90);
}
