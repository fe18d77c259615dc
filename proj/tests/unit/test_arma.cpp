#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "climgen/arma.hpp"
#include "climgen/error.hpp"
#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

std::vector<double> ma_process(double theta, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  double prev = rng.normal();
  for (auto& v : x) {
    const double w = rng.normal();
    v = w - theta * prev;
    prev = w;
  }
  return x;
}

ArmaModel ar_model(std::vector<double> phi, double sigma) {
  ArmaModel m;
  m.p = static_cast<int>(phi.size());
  m.phi = std::move(phi);
  m.noise_sigma = sigma;
  m.profile = SeasonalProfile::constant(0.0, 1.0);
  return m;
}

double variance(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

std::vector<double> values_of(const ClimateSeries& s) {
  std::vector<double> out;
  for (const auto& v : s.values) out.push_back(*v);
  return out;
}

}  // namespace

TEST(Acf, LinearRampLagOne) {
  const auto r = autocorrelation(std::vector<double>{1, 2, 3, 4, 5}, 1);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_NEAR(r[1], 0.4, 1e-12);
}

TEST(Acf, ConstantSeriesRejected) { EXPECT_THROW(autocorrelation(std::vector<double>(20, 3.0), 2), Error); }

TEST(Acf, BandsAndShortSeriesFlag) {
  const auto a = acf_pacf(normals(1000, 1), 20);
  EXPECT_NEAR(a.quenouille_bound, 1.96 / std::sqrt(1000.0), 1e-12);
  EXPECT_FALSE(a.short_series);
  EXPECT_TRUE(acf_pacf(normals(50, 1), 20).short_series);
  double sum = 0.0;
  for (std::size_t k = 1; k <= 20; ++k) {
    EXPECT_NEAR(a.bartlett[k], 1.96 * std::sqrt((1.0 + 2.0 * sum) / 1000.0), 1e-12);
    sum += a.r[k] * a.r[k];
    EXPECT_LE(std::abs(a.r[k]), 1.0);
  }
}

TEST(Acf, WhiteNoisePacfMostlyInsideBound) {
  const auto a = acf_pacf(normals(1000, 77), 20);
  int inside = 0;
  for (std::size_t k = 1; k <= 20; ++k)
    if (std::abs(a.pacf[k]) < a.quenouille_bound) ++inside;
  EXPECT_GE(inside, 18);
}

TEST(Acf, MissingValuesRejected) {
  auto s = make_series(Variable::wind_speed, Cadence::hourly, 0, normals(100, 2));
  s.values[5].reset();
  EXPECT_THROW(acf_pacf(s, 10), Error);
}

TEST(DurbinLevinson, OneStepByHand) {
  const auto a = durbin_levinson(std::vector<double>{1.0, 0.5, 0.4});
  EXPECT_NEAR(a[1], 0.5, 1e-15);
  EXPECT_NEAR(a[2], 0.2, 1e-15);
}

TEST(DurbinLevinson, MatchesExplicitYuleWalker) {
  Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t L = 1 + rng.index(10);
    const auto r = autocorrelation(normals(40 + rng.index(60), 1000 + trial), L);
    const auto pacf = durbin_levinson(r);
    for (std::size_t k = 1; k <= L; ++k) {
      Eigen::MatrixXd R(k, k);
      Eigen::VectorXd rhs(k);
      for (std::size_t i = 0; i < k; ++i) {
        rhs(i) = r[i + 1];
        for (std::size_t j = 0; j < k; ++j) R(i, j) = r[i > j ? i - j : j - i];
      }
      const Eigen::VectorXd phi = R.partialPivLu().solve(rhs);
      EXPECT_NEAR(pacf[k], phi(k - 1), 1e-10);
    }
  }
}

TEST(Identify, TheoreticalArOne) {
  std::vector<double> r{1.0};
  for (int k = 1; k <= 20; ++k) r.push_back(std::pow(0.7, k));
  const auto id = identify(acf_from_autocorrelations(r, 1000));
  EXPECT_EQ(id.kind, ArmaKind::ar);
  EXPECT_EQ(id.p, 1);
  EXPECT_EQ(id.q, 0);
  EXPECT_FALSE(id.white_noise);
}

TEST(Identify, SimulatedArTwo) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto id = identify(acf_pacf(ar_process({0.6, -0.3}, 2000, seed), 20));
    if (id.kind == ArmaKind::ar && id.p == 2 && id.q == 0) ++hits;
  }
  EXPECT_GE(hits, 45);
}

TEST(Identify, WhiteNoiseFlagged) {
  std::vector<double> r(21, 0.0);
  r[0] = 1.0;
  const auto id = identify(acf_from_autocorrelations(r, 1000));
  EXPECT_TRUE(id.white_noise);
  EXPECT_EQ(id.kind, ArmaKind::ar);
  EXPECT_EQ(id.p, 0);
  EXPECT_EQ(id.q, 0);
}

TEST(Identify, TheoreticalMaOne) {
  std::vector<double> r(21, 0.0);
  r[0] = 1.0;
  r[1] = -0.5 / 1.25;
  const auto id = identify(acf_from_autocorrelations(r, 2000));
  EXPECT_EQ(id.kind, ArmaKind::ma);
  EXPECT_EQ(id.q, 1);
}

TEST(Estimate, YuleWalkerClosedForm) {
  const auto z = ar_process({0.6}, 500, 8);
  const auto m = estimate(z, 1, 0);
  const double r1 = autocorrelation(z, 1)[1];
  EXPECT_NEAR(m.phi[0], r1, 1e-12);
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
  double c0 = 0.0;
  for (double v : z) c0 += (v - mean) * (v - mean);
  c0 /= z.size();
  EXPECT_NEAR(m.noise_sigma * m.noise_sigma, c0 * (1.0 - r1 * r1), 1e-10);
  EXPECT_EQ(m.iterations, 0);
}

TEST(Estimate, ArOneRecovered) {
  const auto m = estimate(ar_process({0.7}, 5000, 21), 1, 0);
  EXPECT_NEAR(m.phi[0], 0.7, 0.05);
  EXPECT_NEAR(m.noise_sigma, 1.0, 0.05);
}

TEST(Estimate, MaOneRecovered) {
  const auto m = estimate(ma_process(0.5, 5000, 31), 0, 1);
  EXPECT_NEAR(m.theta[0], 0.5, 0.07);
  EXPECT_GT(m.iterations, 0);
}

TEST(Estimate, ArmaOneOneRecovered) {
  Rng rng(41);
  std::vector<double> x(6000);
  double prev_x = 0.0, prev_w = 0.0;
  for (auto& v : x) {
    const double w = rng.normal();
    v = 0.6 * prev_x + w - 0.3 * prev_w;
    prev_x = v;
    prev_w = w;
  }
  const auto m = estimate(std::vector<double>(x.begin() + 500, x.end()), 1, 1);
  EXPECT_NEAR(m.phi[0], 0.6, 0.08);
  EXPECT_NEAR(m.theta[0], 0.3, 0.1);
}

TEST(Estimate, TooShortRejected) { EXPECT_THROW(estimate(normals(15, 1), 2, 0), Error); }

TEST(Estimate, SeasonalStandardizationRoundTrip) {
  const auto t0 = at("2026-08-01T00:00:00");
  const auto z = ar_process({0.7}, 24 * 31, 55);
  std::vector<double> v;
  for (std::size_t i = 0; i < z.size(); ++i)
    v.push_back(5.0 + 2.0 * std::sin(2.0 * 3.14159265 * (i % 24) / 24.0) + z[i]);
  const auto s = make_series(Variable::wind_speed, Cadence::hourly, t0, v);
  const auto m = estimate(s, 1, 0);
  EXPECT_EQ(m.profile.kind, ProfileKind::hour_of_day);
  EXPECT_EQ(m.profile.mean.size(), 24u);
  EXPECT_TRUE(m.clip);
  EXPECT_NEAR(m.phi[0], 0.7, 0.1);
  EXPECT_EQ(m.variable, Variable::wind_speed);
}

TEST(Roots, ReflectionMakesPolynomialStationary) {
  std::vector<double> phi{1.2};
  EXPECT_FALSE(roots_outside_unit_circle(phi));
  EXPECT_TRUE(reflect_roots(phi));
  EXPECT_TRUE(roots_outside_unit_circle(phi));
  std::vector<double> ok{0.5, 0.2};
  EXPECT_FALSE(reflect_roots(ok));
}

TEST(Diagnose, CorrectArOneUsuallyPasses) {
  int passes = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto z = ar_process({0.7}, 2000, seed);
    if (diagnose(estimate(z, 1, 0), z).pass) ++passes;
  }
  EXPECT_GE(passes, 90);
}

TEST(Diagnose, UnderSpecifiedModelUsuallyFails) {
  int fails = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto z = ar_process({0.6, -0.3}, 5000, seed);
    if (!diagnose(estimate(z, 1, 0), z).pass) ++fails;
  }
  EXPECT_GE(fails, 80);
}

TEST(Diagnose, WhiteNoiseWithNullModelPasses) {
  const auto z = normals(2000, 5);
  const auto rep = diagnose(ar_model({}, 1.0), z);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.r.size(), kDiagnoseLags + 1);
}

TEST(Simulate, DegenerateModelIsConstant) {
  auto m = ar_model({}, 0.0);
  m.profile = SeasonalProfile::constant(5.0, 1.0);
  for (const auto& v : simulate(m, 100, 1).series.values) EXPECT_DOUBLE_EQ(*v, 5.0);
}

TEST(Simulate, ArOneVariance) {
  const auto x = values_of(simulate(ar_model({0.7}, 1.0), 100000, 3).series);
  EXPECT_NEAR(variance(x), 1.0 / (1.0 - 0.49), 0.1 / (1.0 - 0.49));
}

TEST(Simulate, AcfMatchesPowers) {
  const auto x = values_of(simulate(ar_model({0.7}, 1.0), 100000, 4).series);
  const auto r = autocorrelation(x, 5);
  for (int k = 1; k <= 5; ++k) EXPECT_NEAR(r[k], std::pow(0.7, k), 0.05);
}

TEST(Simulate, SameSeedSameBits) {
  const auto m = ar_model({0.5, 0.2}, 1.3);
  const auto a = simulate(m, 1000, 9).series.values;
  const auto b = simulate(m, 1000, 9).series.values;
  EXPECT_EQ(a, b);
}

TEST(Simulate, NonStationaryRejected) { EXPECT_THROW(simulate(ar_model({1.1}, 1.0), 10, 1), Error); }

TEST(Simulate, WindClippedAtZero) {
  auto m = ar_model({0.5}, 1.0);
  m.profile = SeasonalProfile::constant(0.5, 2.0);
  m.variable = Variable::wind_speed;
  m.clip = true;
  const auto sim = simulate(m, 5000, 2);
  EXPECT_GT(sim.clipped, 0u);
  EXPECT_NEAR(sim.clip_rate, sim.clipped / 5000.0, 1e-15);
  for (const auto& v : sim.series.values) EXPECT_GE(*v, 0.0);
}
