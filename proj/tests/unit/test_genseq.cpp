#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "climgen/error.hpp"
#include "climgen/genseq.hpp"
#include "climgen/solargeo.hpp"
#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

SiteMeta site() { return SiteMeta{"test", -20.9, 55.5, 10.0, 4.0}; }

SelectionCriteria august() { return SelectionCriteria::for_months({8}); }

ArmaModel wind_model() {
  ArmaModel m;
  m.p = 1;
  m.phi = {0.8};
  m.noise_sigma = 0.6;
  m.profile.kind = ProfileKind::hour_of_day;
  m.profile.mean.assign(24, 4.0);
  m.profile.std.assign(24, 1.5);
  m.variable = Variable::wind_speed;
  m.criteria = august();
  m.clip = true;
  return m;
}

CorrelationModel diffuse_model() {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double g = rng.uniform(0, 1000), kt = rng.uniform(0.1, 0.8);
    x.push_back({g, kt});
    y.push_back(g * (0.9 - 0.7 * kt) + rng.normal());
  }
  return fit_correlation("custom:1+x0+x0*x1", Variable::diffuse_rad, {Variable::global_rad, Variable::clearness_index},
                         x, y, august());
}

NeuralModel affine(std::vector<Variable> inputs, Variable output, std::vector<double> slope, double bias, double sigma) {
  auto m = NeuralModel::zeros(inputs.size(), 0);
  for (std::size_t j = 0; j < slope.size(); ++j) m.weights[j] = slope[j];
  m.weights.back() = 0.0;
  m.output_mean = bias;
  m.inputs = std::move(inputs);
  m.output = output;
  m.residual_sigma = sigma;
  m.criteria = august();
  return m;
}

void populate(ModelRegistry& reg) {
  reg.put(wind_model(), Provenance{"2026-01-01T00:00:00Z", "", "", {}});
  reg.put(DistributionModel{Variable::clearness_index, Cadence::daily, saunier_from_gamma(2.0, 0.8), august()},
          Provenance{"2026-01-01T00:00:00Z", "", "", {}});
  reg.put(diffuse_model(), Provenance{"2026-01-01T00:00:00Z", "", "", {}});
  reg.put(affine({Variable::global_rad, Variable::wind_speed}, Variable::dry_bulb_temp, {0.003, -0.2}, 22.0, 0.5),
          Provenance{"2026-01-01T00:00:00Z", "", "", {}});
  reg.put(affine({Variable::dry_bulb_temp}, Variable::rel_humidity, {-3.0}, 75.0, 2.0),
          Provenance{"2026-01-01T00:00:00Z", "", "", {}});
}

GenerationPlan plan_for(std::vector<Variable> vars, std::size_t steps) {
  GenerationPlan p;
  p.site = site();
  p.variables = std::move(vars);
  p.start = at("2027-08-01T00:00:00");
  p.duration = steps;
  p.criteria = august();
  p.seed = 42;
  p.seed_given = true;
  return p;
}

const std::vector<Variable> kAll{Variable::wind_speed, Variable::global_rad, Variable::diffuse_rad,
                                 Variable::beam_rad, Variable::dry_bulb_temp, Variable::rel_humidity};

}  // namespace

TEST(Coherence, CoherentTableNeedsNoRepair) {
  WeatherTable t;
  t.times = {at("2026-08-01T12:00:00")};
  t.columns[Variable::global_rad] = {500.0};
  t.columns[Variable::diffuse_rad] = {200.0};
  t.columns[Variable::beam_rad] = {300.0};
  t.columns[Variable::rel_humidity] = {60.0};
  EXPECT_EQ(enforce_coherence(t, site()).total(), 0u);
}

TEST(Coherence, DiffuseClampedToGlobal) {
  WeatherTable t;
  t.times = {at("2026-08-01T12:00:00")};
  t.columns[Variable::global_rad] = {500.0};
  t.columns[Variable::diffuse_rad] = {600.0};
  const auto r = enforce_coherence(t, site());
  EXPECT_EQ(*t.column(Variable::diffuse_rad)[0], 500.0);
  EXPECT_EQ(r.total(), 1u);
  EXPECT_EQ(r.repairs.at("diffuse_le_global"), 1u);
}

TEST(Coherence, NightGlobalZeroed) {
  WeatherTable t;
  t.times = {at("2026-08-01T00:00:00")};
  t.columns[Variable::global_rad] = {50.0};
  enforce_coherence(t, site());
  EXPECT_EQ(*t.column(Variable::global_rad)[0], 0.0);
}

TEST(Coherence, IdempotentOnRandomTables) {
  Rng rng(3);
  WeatherTable t;
  const auto t0 = at("2026-08-01T00:00:00");
  for (int i = 0; i < 500; ++i) t.times.push_back(t0 + i * 3600);
  auto fill = [&](Variable v, double lo, double hi) {
    auto& c = t.columns[v];
    for (int i = 0; i < 500; ++i) c.emplace_back(rng.uniform(lo, hi));
  };
  fill(Variable::global_rad, -100, 1200);
  fill(Variable::diffuse_rad, -100, 800);
  fill(Variable::beam_rad, -50, 900);
  fill(Variable::rel_humidity, -10, 120);
  fill(Variable::wind_speed, -2, 10);
  fill(Variable::dry_bulb_temp, 10, 30);
  fill(Variable::wet_bulb_temp, 5, 35);
  fill(Variable::clearness_index, -0.2, 1.3);
  fill(Variable::nebulosity, -1, 9);
  EXPECT_GT(enforce_coherence(t, site()).total(), 0u);
  EXPECT_EQ(enforce_coherence(t, site()).total(), 0u);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    EXPECT_LE(*t.column(Variable::diffuse_rad)[i], *t.column(Variable::global_rad)[i]);
    EXPECT_LE(*t.column(Variable::wet_bulb_temp)[i], *t.column(Variable::dry_bulb_temp)[i] + 1e-9);
  }
}

TEST(Derive, SaturatedRowsAndOptionalSky) {
  WeatherTable t;
  t.times = {0, 3600};
  t.columns[Variable::dry_bulb_temp] = {20.0, 25.0};
  t.columns[Variable::rel_humidity] = {100.0, 100.0};
  derive_variables(t, site());
  EXPECT_NEAR(*t.column(Variable::wet_bulb_temp)[0], 20.0, 1e-6);
  EXPECT_NEAR(*t.column(Variable::wet_bulb_temp)[1], 25.0, 1e-6);
  EXPECT_FALSE(t.has(Variable::sky_temp));
  derive_variables(t, site(), true);
  EXPECT_TRUE(t.has(Variable::sky_temp));
}

TEST(Derive, MonotoneInHumidity) {
  WeatherTable t;
  for (int i = 0; i < 20; ++i) {
    t.times.push_back(i * 3600);
    t.columns[Variable::dry_bulb_temp].emplace_back(28.0);
    t.columns[Variable::rel_humidity].emplace_back(5.0 + 5.0 * i);
  }
  derive_variables(t, site());
  const auto& wb = t.column(Variable::wet_bulb_temp);
  for (int i = 1; i < 20; ++i) EXPECT_GT(*wb[i], *wb[i - 1]);
}

TEST(Derive, MissingInputsRejected) {
  WeatherTable t;
  t.times = {0};
  t.columns[Variable::dry_bulb_temp] = {20.0};
  EXPECT_THROW(derive_variables(t, site()), Error);
}

TEST(Plan, JsonRoundTripAndUnits) {
  const auto j = nlohmann::json::parse(R"({
    "site": {"name": "s", "latitude": -20.9, "longitude": 55.5, "altitude": 0, "utc_offset": 4},
    "variables": ["wind_speed", "dry_bulb_temp"],
    "start": "2027-08-01T00:00:00", "duration": 2, "duration_unit": "days",
    "criteria": {"months": [8]}, "seed": 7, "options": {"threads": 2}
  })");
  const auto p = GenerationPlan::from_json(j);
  EXPECT_EQ(p.duration, 48u);
  EXPECT_EQ(p.seed, 7u);
  EXPECT_EQ(p.options.threads, 2u);
  const auto q = GenerationPlan::from_json(p.to_json());
  EXPECT_EQ(q.to_json(), p.to_json());
  auto bad = j;
  bad["duration"] = 0;
  EXPECT_THROW(GenerationPlan::from_json(bad), Error);
  bad = j;
  bad["variables"] = {"nope"};
  EXPECT_THROW(GenerationPlan::from_json(bad), Error);
}

TEST(Plan, TimelineSkipsOtherMonths) {
  auto p = plan_for({Variable::wind_speed}, 24 * 40);
  const auto times = timeline(p);
  ASSERT_EQ(times.size(), 24u * 40u);
  for (auto t : times) EXPECT_EQ(month_of(t), 8);
  EXPECT_EQ(to_civil(times.back()).year, 2028);
}

TEST(Resolve, EmptyRegistryListsEveryVariable) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  try {
    resolve(plan_for({Variable::wind_speed, Variable::dry_bulb_temp}, 24), reg);
    FAIL();
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("wind_speed"), std::string::npos);
    EXPECT_NE(what.find("dry_bulb_temp"), std::string::npos);
    EXPECT_NE(what.find("climgen fit arma"), std::string::npos);
    EXPECT_NE(what.find("--months 8"), std::string::npos);
  }
}

TEST(Resolve, NewerFitWinsAndIsLogged) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  auto older = wind_model();
  auto newer = wind_model();
  newer.criteria.predicates.push_back({Variable::wind_speed, {0.0, 100.0}});
  newer.phi = {0.5};
  reg.put(older, Provenance{"2026-01-01T00:00:00Z", "", "", {}});
  reg.put(newer, Provenance{"2026-03-01T00:00:00Z", "", "", {}});
  auto p = plan_for({Variable::wind_speed}, 24);
  p.criteria.predicates = newer.criteria.predicates;
  auto res = resolve(p, reg);
  EXPECT_EQ(std::get<ArmaModel>(res.find(Variable::wind_speed)->entry->model).phi[0], 0.5);
  p.criteria = august();
  res = resolve(p, reg);
  EXPECT_EQ(std::get<ArmaModel>(res.find(Variable::wind_speed)->entry->model).phi[0], 0.8);
  ASSERT_FALSE(res.decisions.empty());
  EXPECT_NE(res.decisions.front().find("chosen over"), std::string::npos);
}

TEST(Resolve, NewestAmongEquals) {
  std::vector<RegistryEntry> entries;
  auto a = wind_model();
  auto b = wind_model();
  b.phi = {0.3};
  entries.push_back({ModelKey::of(a), a, Provenance{"2026-01-01T00:00:00Z", "", "", {}}});
  entries.push_back({ModelKey::of(b), b, Provenance{"2026-05-01T00:00:00Z", "", "", {}}});
  const auto res = resolve(plan_for({Variable::wind_speed}, 24), entries);
  EXPECT_EQ(std::get<ArmaModel>(res.find(Variable::wind_speed)->entry->model).phi[0], 0.3);
}

TEST(Resolve, MonthCoverageRequired) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  reg.put(wind_model(), {});
  auto p = plan_for({Variable::wind_speed}, 24);
  p.criteria = SelectionCriteria::for_months({7, 8});
  EXPECT_THROW(resolve(p, reg), Error);
}

TEST(Resolve, DependencyOrder) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  populate(reg);
  const auto res = resolve(plan_for({Variable::rel_humidity, Variable::beam_rad}, 24), reg);
  std::vector<Variable> order;
  for (const auto& s : res.order) order.push_back(s.variable);
  auto pos = [&](Variable v) { return std::find(order.begin(), order.end(), v) - order.begin(); };
  EXPECT_LT(pos(Variable::clearness_index), pos(Variable::global_rad));
  EXPECT_LT(pos(Variable::global_rad), pos(Variable::diffuse_rad));
  EXPECT_LT(pos(Variable::diffuse_rad), pos(Variable::beam_rad));
  EXPECT_LT(pos(Variable::wind_speed), pos(Variable::dry_bulb_temp));
  EXPECT_LT(pos(Variable::dry_bulb_temp), pos(Variable::rel_humidity));
  EXPECT_LT(pos(Variable::rel_humidity), pos(Variable::wet_bulb_temp));
}

TEST(Generate, ShapeAndCoherence) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  populate(reg);
  const auto seq = generate(plan_for(kAll, 48), reg);
  EXPECT_EQ(seq.table.rows(), 48u);
  for (auto v : kAll) EXPECT_TRUE(seq.table.has(v)) << to_string(v);
  EXPECT_TRUE(seq.table.has(Variable::wet_bulb_temp));
  auto copy = seq.table;
  EXPECT_EQ(enforce_coherence(copy, site()).total(), 0u);
  const auto& g = seq.table.column(Variable::global_rad);
  for (std::size_t i = 0; i < 48; ++i) {
    const double i0 = extraterrestrial(site(), seq.table.times[i], Cadence::hourly);
    ASSERT_TRUE(g[i]);
    if (i0 == 0.0) EXPECT_EQ(*g[i], 0.0);
    EXPECT_LE(*g[i], i0 + 1e-9);
  }
}

TEST(Generate, DeterministicAcrossRunsAndThreads) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  populate(reg);
  auto p = plan_for(kAll, 24 * 10);
  const auto a = generate(p, reg);
  const auto b = generate(p, reg);
  p.options.threads = 4;
  const auto c = generate(p, reg);
  write_csv(a.table, dir / "a.csv", a.provenance);
  write_csv(b.table, dir / "b.csv", b.provenance);
  write_csv(c.table, dir / "c.csv", c.provenance);
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "c.csv"));
  p.seed = 43;
  EXPECT_NE(generate(p, reg).table.columns, a.table.columns);
}

TEST(Generate, AugustPlanHasOnlyAugust) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  populate(reg);
  auto p = plan_for({Variable::wind_speed}, 24 * 45);
  p.start = at("2027-07-20T00:00:00");
  for (auto t : generate(p, reg).table.times) EXPECT_EQ(month_of(t), 8);
}

TEST(Generate, InconsistentModelsTripBreaker) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  auto w = wind_model();
  w.clip = false;
  w.profile.mean.assign(24, -5.0);
  reg.put(w, {});
  EXPECT_THROW(generate(plan_for({Variable::wind_speed}, 100), reg), Error);
}

TEST(Generate, RejectionModeNeedsReference) {
  TempDir dir;
  ModelRegistry reg(dir.path());
  populate(reg);
  auto p = plan_for({Variable::wind_speed}, 24 * 5);
  p.options.rejection = true;
  EXPECT_THROW(generate(p, reg), Error);
  const auto ref = generate(plan_for({Variable::wind_speed}, 24 * 5), reg).table;
  const auto seq = generate(p, reg, &ref);
  EXPECT_GE(seq.attempts, 1);
  EXPECT_LE(seq.attempts, p.options.max_attempts);
}

TEST(Export, CsvRowsCommentsAndRoundTrip) {
  TempDir dir;
  ModelRegistry reg(dir.path() / "reg");
  populate(reg);
  const auto seq = generate(plan_for(kAll, 24), reg);
  export_sequence(seq, ExportFormat::csv, dir / "seq.csv");
  const auto text = read_file(dir / "seq.csv");
  std::size_t comments = 0, lines = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto end = text.find('\n', pos);
    if (text[pos] == '#') ++comments;
    else ++lines;
    pos = end + 1;
  }
  EXPECT_EQ(lines, 25u);
  EXPECT_GT(comments, 5u);
  const auto back = ingest_csv(dir / "seq.csv");
  EXPECT_TRUE(back.has_site);
  for (const auto& [v, col] : seq.table.columns) {
    const auto& s = back.at(v);
    for (std::size_t i = 0; i < col.size(); ++i) {
      ASSERT_EQ(bool(col[i]), bool(s.values[i]));
      if (col[i]) EXPECT_NEAR(*col[i], *s.values[i], 1e-6);
    }
  }
}

TEST(Export, PlotdataOneFilePerVariable) {
  TempDir dir;
  WeatherTable t;
  t.times = {0, 3600};
  t.columns[Variable::wind_speed] = {1.0, 2.0};
  t.columns[Variable::dry_bulb_temp] = {20.0, std::nullopt};
  t.columns[Variable::rel_humidity] = {50.0, 60.0};
  GeneratedSequence seq;
  seq.table = t;
  const auto files = export_sequence(seq, ExportFormat::plotdata, dir / "plot");
  EXPECT_EQ(files.size(), 3u);
  EXPECT_EQ(read_file(dir / "plot" / "wind_speed.csv").substr(0, 21), "timestamp,wind_speed\n");
  EXPECT_THROW(parse_export_format("xlsx"), Error);
}
