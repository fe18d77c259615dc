#include <benchmark/benchmark.h>

#include <filesystem>

#include <unistd.h>

#include "climgen/arma.hpp"
#include "climgen/distfit.hpp"
#include "climgen/genseq.hpp"
#include "climgen/neuralfit.hpp"
#include "climgen/random.hpp"
#include "climgen/validate.hpp"

using namespace climgen;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

ArmaModel ar1(double phi) {
  ArmaModel m;
  m.p = 1;
  m.phi = {phi};
  m.noise_sigma = std::sqrt(1.0 - phi * phi);
  m.profile = SeasonalProfile::constant(5.0, 1.5);
  m.variable = Variable::wind_speed;
  m.clip = true;
  m.criteria = SelectionCriteria::for_months({8});
  return m;
}

void BM_WetBulb(benchmark::State& state) {
  double t = 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(wet_bulb(t, 65.0, 1013.25));
    t = t > 35.0 ? 10.0 : t + 0.01;
  }
}
BENCHMARK(BM_WetBulb);

void BM_KsStatistic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = normals(n, 1), y = normals(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ks_statistic(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KsStatistic)->RangeMultiplier(8)->Range(64, 32768)->Complexity(benchmark::oNLogN);

void BM_AcfPacf(benchmark::State& state) {
  const auto x = normals(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(acf_pacf(x, 20));
}
BENCHMARK(BM_AcfPacf)->Arg(744)->Arg(8760)->Arg(26280);

void BM_SimulateYear(benchmark::State& state) {
  const auto m = ar1(0.8);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, 8760, seed++));
}
BENCHMARK(BM_SimulateYear);

void BM_WeibullFit(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = weibull_quantile({2.0, 5.0}, (i + 0.5) / v.size());
  for (auto _ : state) benchmark::DoNotOptimize(weibull_fit(v));
}
BENCHMARK(BM_WeibullFit)->Arg(1000)->Arg(8760);

void BM_SaunierSample(benchmark::State& state) {
  const Distribution law = saunier_from_gamma(2.0, 0.8);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_dist(law, 10000, seed++));
}
BENCHMARK(BM_SaunierSample);

void BM_TrainLm(benchmark::State& state) {
  Rng rng(4);
  SampleMatrix x;
  std::vector<double> y;
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(0, 1000), b = rng.uniform(0, 10);
    x.push_back({a, b});
    y.push_back(20 + 4 * std::tanh(0.004 * a - 2) - 0.5 * b + 0.1 * rng.normal());
  }
  TrainOptions opt;
  opt.n_hidden = static_cast<std::size_t>(state.range(0));
  opt.max_iter = 50;
  for (auto _ : state) benchmark::DoNotOptimize(train_lm(x, y, opt));
}
BENCHMARK(BM_TrainLm)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GenerateMonth(benchmark::State& state) {
  const auto root = std::filesystem::temp_directory_path() / ("climgen_bench_" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  ModelRegistry reg(root);
  reg.put(ar1(0.8), {});
  reg.put(DistributionModel{Variable::clearness_index, Cadence::daily, saunier_from_gamma(2.0, 0.8),
                            SelectionCriteria::for_months({8})},
          {});
  GenerationPlan plan;
  plan.site = SiteMeta{"bench", -20.9, 55.5, 10.0, 4.0};
  plan.variables = {Variable::wind_speed, Variable::global_rad};
  plan.start = *parse_iso8601("2027-08-01T00:00:00");
  plan.duration = 744;
  plan.criteria = SelectionCriteria::for_months({8});
  plan.seed_given = true;
  const auto resolution = resolve(plan, reg);
  for (auto _ : state) {
    ++plan.seed;
    benchmark::DoNotOptimize(generate(plan, resolution));
  }
  std::filesystem::remove_all(root);
}
BENCHMARK(BM_GenerateMonth)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
