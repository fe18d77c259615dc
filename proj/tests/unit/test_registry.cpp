#include <gtest/gtest.h>

#include <cmath>

#include "climgen/error.hpp"
#include "climgen/registry.hpp"
#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

ArmaModel sample_arma() {
  ArmaModel m;
  m.p = 1;
  m.q = 1;
  m.phi = {0.7};
  m.theta = {0.2};
  m.noise_sigma = 0.9;
  m.profile.kind = ProfileKind::hour_of_day;
  m.profile.mean.assign(24, 0.0);
  m.profile.std.assign(24, 1.0);
  for (int h = 0; h < 24; ++h) {
    m.profile.mean[h] = 4.0 + 0.1 * h;
    m.profile.std[h] = 1.0 + 0.01 * h;
  }
  m.criteria = SelectionCriteria::for_months({8});
  m.clip = true;
  return m;
}

CorrelationModel sample_correlation() {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform(0, 1000), b = rng.uniform(0, 1);
    x.push_back({a, b});
    y.push_back(0.3 * a - 100 * b + rng.normal());
  }
  SelectionCriteria c = SelectionCriteria::for_months({7, 8});
  c.hour_range = std::pair{6, 18};
  c.predicates.push_back({Variable::wind_speed, {2.0, std::numeric_limits<double>::infinity()}});
  return fit_correlation("multilinear", Variable::diffuse_rad, {Variable::global_rad, Variable::clearness_index}, x, y, c);
}

NeuralModel sample_network() {
  Rng rng(5);
  auto m = NeuralModel::zeros(2, 3);
  for (auto& w : m.weights) w = rng.uniform(-1, 1);
  m.input_mean = {300.0, 3.0};
  m.input_std = {200.0, 1.5};
  m.output_mean = 22.0;
  m.output_std = 2.0;
  m.inputs = {Variable::global_rad, Variable::wind_speed};
  m.output = Variable::dry_bulb_temp;
  m.criteria = SelectionCriteria::for_months({8});
  m.report.eqm_history = {1.0, 0.5};
  m.report.stop_reason = "max_iter";
  return m;
}

}  // namespace

TEST(Registry, PutThenGetIsIdentical) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  const std::vector<FittedModel> models{
      DistributionModel{Variable::wind_speed, Cadence::hourly, WeibullParams{2.1, 5.3}, SelectionCriteria::for_months({8})},
      DistributionModel{Variable::clearness_index, Cadence::daily, saunier_from_gamma(2.0, 0.8), SelectionCriteria::all()},
      sample_arma(), sample_correlation(), sample_network()};
  for (const auto& m : models) {
    const auto key = reg.put(m, Provenance{});
    const auto bytes = read_file(reg.path_of(key));
    const auto back = reg.at(key);
    EXPECT_EQ(to_json(back.model).dump(), to_json(m).dump());
    reg.put(back.model, back.provenance);
    EXPECT_EQ(read_file(reg.path_of(key)), bytes);
  }
  EXPECT_EQ(reg.list().size(), models.size());
}

TEST(Registry, RoundTripPreservesBehaviour) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  const auto arma = sample_arma();
  const auto corr = sample_correlation();
  const auto net = sample_network();
  const auto arma_back = std::get<ArmaModel>(reg.at(reg.put(arma, {})).model);
  const auto corr_back = std::get<CorrelationModel>(reg.at(reg.put(corr, {})).model);
  const auto net_back = std::get<NeuralModel>(reg.at(reg.put(net, {})).model);
  EXPECT_EQ(simulate(arma, 200, 3, at("2026-08-01T00:00:00")).series.values,
            simulate(arma_back, 200, 3, at("2026-08-01T00:00:00")).series.values);
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(0, 1000), rng.uniform(0, 1)};
    EXPECT_NEAR(evaluate(corr, x), evaluate(corr_back, x), 1e-12);
    EXPECT_NEAR(forward(net, x), forward(net_back, x), 1e-12);
  }
  EXPECT_EQ(corr_back.criteria, corr.criteria);
}

TEST(Registry, KeyIdParsesBack) {
  const auto key = ModelKey::of(sample_arma());
  EXPECT_EQ(key.kind, ModelKind::arma);
  EXPECT_EQ(key.variable, Variable::wind_speed);
  EXPECT_EQ(ModelKey::parse(key.id()), key);
  EXPECT_THROW(ModelKey::parse("garbage"), Error);
}

TEST(Registry, CriteriaDistinguishKeys) {
  auto a = sample_arma();
  auto b = a;
  b.criteria.predicates.push_back({Variable::wind_speed, {0.0, 2.0}});
  EXPECT_NE(ModelKey::of(a).id(), ModelKey::of(b).id());
  EXPECT_EQ(ModelKey::of(a).period, ModelKey::of(b).period);
}

TEST(Registry, RerunOverwritesWithNewProvenance) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  const auto m = sample_arma();
  reg.put(m, Provenance{"2026-01-01T00:00:00Z", "a/b", "", {}});
  const auto key = reg.put(m, Provenance{"2026-02-01T00:00:00Z", "c/d", "", {}});
  EXPECT_EQ(reg.list().size(), 1u);
  EXPECT_EQ(reg.at(key).provenance.fit_date, "2026-02-01T00:00:00Z");
  EXPECT_FALSE(reg.at(key).provenance.software_version.empty());
}

TEST(Registry, MissingEntry) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  EXPECT_FALSE(reg.get(ModelKey::of(sample_arma())));
  EXPECT_THROW(reg.at(ModelKey::of(sample_arma())), Error);
  EXPECT_TRUE(reg.list().empty());
}

TEST(Registry, NonFiniteNumbersSurvive) {
  for (double v : {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 1.5}) {
    EXPECT_EQ(number_from_json(json_number(v)), v);
  }
  EXPECT_TRUE(std::isnan(number_from_json(json_number(std::nan("")))));
}

TEST(Registry, EnvironmentOverridesRoot) {
  ::setenv("CLIMGEN_REGISTRY", "/tmp/somewhere", 1);
  EXPECT_EQ(default_registry_root(), std::filesystem::path("/tmp/somewhere"));
  ::unsetenv("CLIMGEN_REGISTRY");
  EXPECT_EQ(default_registry_root(), std::filesystem::path("registry"));
}
