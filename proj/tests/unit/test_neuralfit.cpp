#include <gtest/gtest.h>

#include <cmath>

#include "climgen/error.hpp"
#include "climgen/neuralfit.hpp"
#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

NeuralModel random_network(std::size_t d, std::size_t h, Rng& rng) {
  auto m = NeuralModel::zeros(d, h);
  for (auto& w : m.weights) w = rng.uniform(-1.5, 1.5);
  for (std::size_t j = 0; j < d; ++j) {
    m.input_mean[j] = rng.uniform(-2, 2);
    m.input_std[j] = rng.uniform(0.5, 3);
  }
  m.output_mean = rng.uniform(-5, 5);
  m.output_std = rng.uniform(0.5, 4);
  return m;
}

SampleMatrix xor_inputs() { return {{0, 0}, {0, 1}, {1, 0}, {1, 1}}; }

void expect_monotone(const TrainingReport& r) {
  for (std::size_t i = 1; i < r.eqm_history.size(); ++i) EXPECT_LE(r.eqm_history[i], r.eqm_history[i - 1]);
}

}  // namespace

TEST(Forward, ZeroNetworkReturnsOutputMean) {
  auto m = NeuralModel::zeros(3, 4);
  m.output_mean = 7.25;
  EXPECT_DOUBLE_EQ(forward(m, std::vector<double>{1, 2, 3}), 7.25);
}

TEST(Forward, HandSetSingleUnit) {
  auto m = NeuralModel::zeros(1, 1);
  m.weights = {1.0, 0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(forward(m, std::vector<double>{0.0}), 0.0);
  EXPECT_NEAR(forward(m, std::vector<double>{1.0}), 0.76159, 1e-5);
  EXPECT_THROW(forward(m, std::vector<double>{1.0, 2.0}), Error);
}

TEST(Forward, HiddenUnitPermutationInvariant) {
  Rng rng(3);
  const auto m = random_network(2, 3, rng);
  auto p = m;
  // Block per hidden unit: [w0, w1, b]; then [v0, v1, v2, c].
  for (std::size_t k = 0; k < 3; ++k) {
    p.weights[0 * 3 + k] = m.weights[2 * 3 + k];
    p.weights[2 * 3 + k] = m.weights[0 * 3 + k];
  }
  std::swap(p.weights[9], p.weights[11]);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    EXPECT_NEAR(forward(m, x), forward(p, x), 1e-12);
  }
}

TEST(Jacobian, ZeroNetworkOutputBias) {
  const auto m = NeuralModel::zeros(2, 3);
  const auto J = jacobian(m, SampleMatrix{{0.3, -0.1}});
  EXPECT_DOUBLE_EQ(J(0, J.cols() - 1), 1.0);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.index(3), h = rng.index(5);
    const auto m = random_network(d, h, rng);
    SampleMatrix x(5, std::vector<double>(d));
    for (auto& row : x)
      for (auto& v : row) v = rng.uniform(-3, 3);
    const auto J = jacobian(m, x);
    const double step = 1e-6;
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
      auto plus = m, minus = m;
      plus.weights[k] += step;
      minus.weights[k] -= step;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = (forward(plus, x[i]) - forward(minus, x[i])) / (2 * step);
        const double an = J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        EXPECT_LE(std::abs(fd - an), 1e-4 * std::max(1.0, std::abs(an))) << trial << " " << k;
      }
    }
  }
}

TEST(Jacobian, DuplicatedRowsDuplicated) {
  Rng rng(2);
  const auto m = random_network(2, 3, rng);
  const auto J = jacobian(m, SampleMatrix{{0.5, 1.0}, {0.5, 1.0}});
  EXPECT_EQ((J.row(0) - J.row(1)).norm(), 0.0);
}

TEST(Eqm, HandValues) {
  EXPECT_DOUBLE_EQ(eqm(std::vector<double>{1, 2}, std::vector<double>{0, 0}), 2.5);
  EXPECT_DOUBLE_EQ(eqm(std::vector<double>{3, 4}, std::vector<double>{3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(eqm(std::vector<double>{2, 4}, std::vector<double>{0, 0}), 4 * 2.5);
  EXPECT_THROW(eqm(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Train, LinearModelExactInOneStep) {
  SampleMatrix x;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({i * 0.5});
    y.push_back(2.0 * i * 0.5 + 1.0);
  }
  TrainOptions opt;
  opt.n_hidden = 0;
  opt.lambda0 = 1e-12;
  const auto m = train_lm(x, y, opt);
  ASSERT_GE(m.report.eqm_history.size(), 2u);
  EXPECT_LT(m.report.eqm_history[1], 1e-18);
  EXPECT_NEAR(forward(m, std::vector<double>{10.0}), 21.0, 1e-8);
}

TEST(Train, XorSolvedByMostSeeds) {
  const std::vector<double> y{0, 1, 1, 0};
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainOptions opt;
    opt.seed = seed;
    const auto m = train_lm(xor_inputs(), y, opt);
    expect_monotone(m.report);
    if (eqm(m, xor_inputs(), y) < 1e-3) ++solved;
  }
  EXPECT_GE(solved, 8);
}

TEST(Train, ConstantTarget) {
  const std::vector<double> y(4, 3.5);
  const auto m = train_lm(xor_inputs(), y);
  EXPECT_EQ(m.report.stop_reason, "constant_target");
  EXPECT_DOUBLE_EQ(m.output_mean, 3.5);
  EXPECT_DOUBLE_EQ(eqm(m, xor_inputs(), y), 0.0);
}

TEST(Train, DeterministicAndMonotone) {
  Rng rng(8);
  SampleMatrix x;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0, 1000), b = rng.uniform(0, 10);
    x.push_back({a, b});
    y.push_back(20 + 4 * std::tanh(0.004 * a - 2) - 0.5 * b + 0.1 * rng.normal());
  }
  TrainOptions opt;
  opt.seed = 5;
  const auto a = train_lm(x, y, opt);
  const auto b = train_lm(x, y, opt);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.report.eqm_history, b.report.eqm_history);
  expect_monotone(a.report);
  EXPECT_LT(a.report.eqm_history.back(), 0.05);
  EXPECT_NEAR(a.residual_sigma, std::sqrt(a.report.eqm_history.back()), 1e-12);
}

TEST(Train, FewSamplesFlagged) {
  const std::vector<double> y{0, 1, 1, 0};
  EXPECT_TRUE(train_lm(xor_inputs(), y).report.few_samples);
}

TEST(Sweep, PicksMinimalValidationError) {
  Rng rng(12);
  SampleMatrix x;
  std::vector<double> y;
  for (int i = 0; i < 150; ++i) {
    const double a = rng.uniform(-2, 2);
    x.push_back({a});
    y.push_back(std::sin(2 * a) + 0.05 * rng.normal());
  }
  TrainOptions opt;
  opt.max_iter = 100;
  const auto s = sweep_hidden(x, y, 1, 4, opt);
  ASSERT_EQ(s.rows.size(), 4u);
  for (const auto& row : s.rows) EXPECT_GE(row.validation_eqm, s.rows[s.best].validation_eqm);
  EXPECT_EQ(s.model.n_hidden, s.rows[s.best].n_hidden);
}

TEST(Align, KeepsCompleteRowsOnly) {
  const auto t0 = at("2026-08-01T00:00:00");
  auto out = make_series(Variable::dry_bulb_temp, Cadence::hourly, t0, {20, 21, 22, 23});
  auto in = make_series(Variable::global_rad, Cadence::hourly, t0, {0, 100, 200, 300});
  in.values[1].reset();
  const std::vector<ClimateSeries> inputs{in};
  const auto s = align_samples(out, inputs);
  ASSERT_EQ(s.y.size(), 3u);
  EXPECT_DOUBLE_EQ(s.x[1][0], 200.0);
  EXPECT_DOUBLE_EQ(s.y[1], 22.0);
}
