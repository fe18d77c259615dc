#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "climgen/error.hpp"
#include "climgen/validate.hpp"
#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

double brute_force_d(const std::vector<double>& x, const std::vector<double>& y) {
  auto ecdf = [](const std::vector<double>& s, double t) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= t; })) /
           static_cast<double>(s.size());
  };
  double d = 0.0;
  for (const auto* s : {&x, &y})
    for (double t : *s) d = std::max(d, std::abs(ecdf(x, t) - ecdf(y, t)));
  return d;
}

WeatherTable table_of(Variable v, const std::vector<double>& values, Timestamp start) {
  WeatherTable t;
  for (std::size_t i = 0; i < values.size(); ++i) {
    t.times.push_back(start + static_cast<Timestamp>(i) * kSecondsPerHour);
    t.columns[v].emplace_back(values[i]);
  }
  return t;
}

std::vector<double> uniforms(std::size_t n, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

}  // namespace

TEST(Ks, IdenticalSamplesHaveZeroDistance) {
  const auto x = normals(200, 1);
  const auto r = ks_two_sample(x, x);
  EXPECT_EQ(r.d, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Ks, DisjointSamplesHaveUnitDistance) {
  const auto x = uniforms(50, 0, 1, 1);
  const auto y = uniforms(50, 2, 3, 2);
  const auto r = ks_two_sample(x, y);
  EXPECT_DOUBLE_EQ(r.d, 1.0);
  EXPECT_FALSE(r.pass);
}

TEST(Ks, CriticalValueAtHundredEach) {
  const auto r = ks_two_sample(normals(100, 3), normals(100, 4));
  EXPECT_NEAR(r.critical, 0.1921, 1e-4);
  EXPECT_NEAR(ks_c_alpha(0.01), 1.628, 1e-12);
}

TEST(Ks, TooSmallRejected) {
  EXPECT_THROW(ks_two_sample(std::vector<double>{1, 2, 3, 4}, normals(10, 1)), Error);
}

TEST(Ks, MergeScanMatchesBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.index(40), m = 5 + rng.index(40);
    std::vector<double> x(n), y(m);
    // Rounded values force ties within and across samples.
    for (auto& v : x) v = std::round(rng.normal() * 3.0);
    for (auto& v : y) v = std::round(rng.normal() * 3.0 + 0.5);
    EXPECT_NEAR(ks_statistic(x, y), brute_force_d(x, y), 1e-12);
  }
}

TEST(Ks, SymmetricInArguments) {
  const auto x = normals(70, 5), y = normals(90, 6);
  EXPECT_EQ(ks_statistic(x, y), ks_statistic(y, x));
}

TEST(Ks, BlockPermutationDetectsShift) {
  auto y = normals(300, 8);
  for (auto& v : y) v += 1.0;
  const auto r = ks_block_permutation(normals(300, 7), y, 10, 0.05, 199, 3);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.p_value);
  EXPECT_LE(*r.p_value, 0.05);
  EXPECT_THROW(ks_block_permutation(normals(30, 1), normals(30, 2), 0), Error);
}

TEST(Monthly, HandValues) {
  const auto t0 = at("2026-08-01T00:00:00");
  const auto ref = make_series(Variable::dry_bulb_temp, Cadence::hourly, t0, {1, 2, 3, 4, 5});
  const auto gen = make_series(Variable::dry_bulb_temp, Cadence::hourly, t0, {1.4, 2.4, 3.4, 4.4, 5.4});
  const auto r = compare_monthly(gen, ref, 0.25, 0.25);
  ASSERT_EQ(r.months.size(), 1u);
  EXPECT_EQ(r.months[0].month, 8);
  EXPECT_NEAR(r.months[0].delta_mean, 0.4, 1e-12);
  EXPECT_NEAR(r.months[0].delta_std, 0.0, 1e-12);
  EXPECT_FALSE(r.months[0].pass_mean);  // 0.4 > 0.25·1.5811
  const auto gen2 = make_series(Variable::dry_bulb_temp, Cadence::hourly, t0, {1.1, 2.1, 3.1, 4.1, 5.1});
  EXPECT_TRUE(compare_monthly(gen2, ref).pass);
}

TEST(Monthly, ShiftedByOneSigmaFails) {
  const auto t0 = at("2026-08-01T00:00:00");
  auto g = normals(500, 1);
  for (auto& v : g) v += 1.0;
  EXPECT_FALSE(compare_monthly(make_series(Variable::wind_speed, Cadence::hourly, t0, g),
                               make_series(Variable::wind_speed, Cadence::hourly, t0, normals(500, 2)))
                   .pass);
}

TEST(Monthly, AbsentReferenceMonthNoted) {
  const auto ref = make_series(Variable::wind_speed, Cadence::hourly, at("2026-08-01T00:00:00"), {1, 2, 3});
  const auto gen = make_series(Variable::wind_speed, Cadence::hourly, at("2026-09-01T00:00:00"), {1, 2, 3});
  const auto r = compare_monthly(gen, ref);
  EXPECT_TRUE(r.months.empty());
  ASSERT_EQ(r.notes.size(), 1u);
}

TEST(Extremes, RangeWithMargin) {
  const auto t0 = at("2026-08-01T00:00:00");
  const auto ref = make_series(Variable::wind_speed, Cadence::hourly, t0, {0, 5, 10});
  EXPECT_TRUE(check_extremes(make_series(Variable::wind_speed, Cadence::hourly, t0, {0, 10.9, 3}), ref).pass);
  const auto bad = check_extremes(make_series(Variable::wind_speed, Cadence::hourly, t0, {0, 2, 11.5}), ref);
  EXPECT_FALSE(bad.range_pass);
  ASSERT_TRUE(bad.offending);
  EXPECT_EQ(*bad.offending, t0 + 2 * kSecondsPerHour);
}

TEST(Extremes, InsolationAboveDayLength) {
  const SiteMeta site{"s", -21.0, 55.5, 0.0, 4.0};
  const auto t0 = at("2026-08-15T00:00:00");
  const auto gen = make_series(Variable::insolation_hours, Cadence::daily, t0, {13.0, 8.0});
  const auto ref = make_series(Variable::insolation_hours, Cadence::daily, t0, {0.0, 13.0});
  const auto e = check_extremes(gen, ref, &site);
  EXPECT_TRUE(e.insolation_checked);
  EXPECT_FALSE(e.insolation_pass);
  ASSERT_TRUE(e.insolation_offending);
  EXPECT_EQ(*e.insolation_offending, t0);
  EXPECT_FALSE(e.pass);
}

TEST(Twb, FirstViolationReported) {
  WeatherTable t;
  t.times = {0, 3600, 7200};
  t.columns[Variable::dry_bulb_temp] = {20.0, 20.0, 20.0};
  t.columns[Variable::wet_bulb_temp] = {18.0, 20.5, std::nullopt};
  const auto r = check_twb_tdb(t);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.rows_checked, 2u);
  ASSERT_TRUE(r.first_violation);
  EXPECT_EQ(*r.first_violation, 1u);
  t.column(Variable::wet_bulb_temp)[1] = 20.0;
  EXPECT_TRUE(check_twb_tdb(t).pass);
}

TEST(Report, IdenticalInputsPass) {
  const auto t = table_of(Variable::wind_speed, uniforms(300, 0, 10, 1), at("2026-08-01T00:00:00"));
  const auto r = full_report(t, t);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.variables.size(), 1u);
  EXPECT_EQ(r.variables[0].ks.d, 0.0);
  EXPECT_TRUE(r.to_json().at("pass").get<bool>());
  EXPECT_NE(r.to_text().find("wind_speed"), std::string::npos);
}

TEST(Report, BootstrapFromOnePoolUsuallyPasses) {
  const auto pool = uniforms(2000, 0, 10, 99);
  Rng rng(5);
  auto draw = [&] {
    std::vector<double> out(500);
    for (auto& v : out) v = pool[rng.index(pool.size())];
    return out;
  };
  const auto t0 = at("2026-08-01T00:00:00");
  int passes = 0;
  for (int trial = 0; trial < 100; ++trial)
    if (full_report(table_of(Variable::wind_speed, draw(), t0), table_of(Variable::wind_speed, draw(), t0)).pass)
      ++passes;
  EXPECT_GE(passes, 90);
}

TEST(Report, ShiftedDistributionFails) {
  const auto t0 = at("2026-08-01T00:00:00");
  auto g = uniforms(500, 0, 10, 3);
  for (auto& v : g) v += 3.0;
  EXPECT_FALSE(full_report(table_of(Variable::wind_speed, g, t0),
                           table_of(Variable::wind_speed, uniforms(500, 0, 10, 4), t0))
                   .pass);
}

TEST(Report, NoCommonVariableRejected) {
  const auto t0 = at("2026-08-01T00:00:00");
  EXPECT_THROW(full_report(table_of(Variable::wind_speed, normals(50, 1), t0),
                           table_of(Variable::dry_bulb_temp, normals(50, 2), t0)),
               Error);
}

TEST(Report, IndicatorsUseKs) {
  const auto t = table_of(Variable::wind_speed, uniforms(100, 0, 10, 1), at("2026-08-01T00:00:00"));
  ReportOptions opt;
  opt.indicators["load"] = {uniforms(50, 0, 1, 2), uniforms(50, 5, 6, 3)};
  const auto r = full_report(t, t, opt);
  ASSERT_EQ(r.indicators.size(), 1u);
  EXPECT_FALSE(r.indicators[0].ks.pass);
  EXPECT_FALSE(r.pass);
}
