#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "climgen/climdata.hpp"

namespace climgen {

struct KsResult {
  double d = 0.0;
  double critical = 0.0;
  bool pass = true;
  std::size_t n = 0;
  std::size_t m = 0;
  double alpha = 0.05;
  /// Block-permutation p-value; absent for the asymptotic test.
  std::optional<double> p_value;
};

/// c(α) of the asymptotic two-sample critical value: 1.358 at 0.05, 1.628 at
/// 0.01, sqrt(-ln(α/2)/2) otherwise.
double ks_c_alpha(double alpha);

/// D = sup|F̂x - F̂y| by a merge scan over the pooled sorted values;
/// critical = c(α)·sqrt((n+m)/(n·m)); pass ⇔ D ≤ critical. Both samples
/// need at least 5 values.
KsResult ks_two_sample(std::span<const double> x, std::span<const double> y, double alpha = 0.05);
double ks_statistic(std::span<const double> x, std::span<const double> y);

/// Same statistic with a block-permutation null distribution: each sample is
/// cut into consecutive blocks of `block` values, blocks are reassigned at
/// random between the samples, and the critical value is the (1-α) quantile
/// of the permuted statistics. Serial dependence within a block is kept,
/// which the asymptotic critical value assumes away.
KsResult ks_block_permutation(std::span<const double> x, std::span<const double> y, std::size_t block,
                              double alpha = 0.05, std::size_t permutations = 999, std::uint64_t seed = 1);

struct MonthlyComparison {
  int month = 1;
  double generated_mean = 0.0;
  double reference_mean = 0.0;
  double generated_std = 0.0;
  double reference_std = 0.0;
  double delta_mean = 0.0;  // generated - reference
  double delta_std = 0.0;
  bool pass_mean = true;
  bool pass_std = true;
  bool pass = true;
};

struct MonthlyReport {
  std::vector<MonthlyComparison> months;
  std::vector<std::string> notes;  // skipped months
  bool pass = true;
};

/// Per calendar month: |Δmean| ≤ tol_mean·σ_ref and |Δstd| ≤ tol_std·σ_ref.
MonthlyReport compare_monthly(const ClimateSeries& generated, const ClimateSeries& reference,
                              double tol_mean = 0.25, double tol_std = 0.25);

struct ExtremesResult {
  double generated_min = 0.0;
  double generated_max = 0.0;
  double reference_min = 0.0;
  double reference_max = 0.0;
  double margin = 0.0;  // 0.1·(ref_max - ref_min)
  bool range_pass = true;
  std::optional<Timestamp> offending;  // first value outside the widened range
  double reference_p99 = 0.0;
  double reference_exceedance = 0.0;   // fraction above the reference p99
  double generated_exceedance = 0.0;
  bool frequency_checked = false;      // expected exceedances ≥ 10
  bool frequency_pass = true;
  bool insolation_checked = false;
  bool insolation_pass = true;
  std::optional<Timestamp> insolation_offending;
  bool pass = true;
};

/// Range check with a 10% margin, frequency of exceedance of the reference
/// 99th percentile within a factor 2, and, for insolation with a site, daily
/// totals not above the astronomical day length.
ExtremesResult check_extremes(const ClimateSeries& generated, const ClimateSeries& reference,
                              const SiteMeta* site = nullptr);

struct TwbCheck {
  bool pass = true;
  std::size_t rows_checked = 0;
  std::optional<std::size_t> first_violation;  // row index
  std::optional<Timestamp> first_violation_time;
  std::size_t violations = 0;
};

/// Every row with both values satisfies wet_bulb ≤ dry_bulb + 1e-6.
TwbCheck check_twb_tdb(const WeatherTable& table);

/// Default bin width for occurrence frequencies.
double default_bin_width(Variable v);

struct VariableReport {
  Variable variable;
  KsResult ks;
  MonthlyReport monthly;
  ExtremesResult extremes;
  double occurrence_max_diff = 0.0;  // largest difference of bin hour fractions (informational)
  bool pass = true;
};

struct IndicatorResult {
  std::string name;
  KsResult ks;
};

struct ReportOptions {
  double alpha = 0.05;
  double tol_mean = 0.25;
  double tol_std = 0.25;
  std::optional<SiteMeta> site;
  /// 0: asymptotic KS. Otherwise block length of the permutation KS.
  std::size_t ks_block = 0;
  std::size_t permutations = 999;
  std::uint64_t seed = 1;
  /// Externally computed indicator series (generated, reference) compared
  /// with the same KS machinery.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> indicators;
};

struct ValidationReport {
  double alpha = 0.05;
  std::vector<VariableReport> variables;
  std::optional<TwbCheck> twb;
  std::size_t coherence_repairs = 0;  // repairs a fresh coherence pass would make (informational)
  std::vector<IndicatorResult> indicators;
  bool pass = true;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// KS, monthly comparison and extremes for every variable present in both
/// tables, the wet-bulb check when both temperatures are generated, and the
/// indicator hook. Throws when the tables share no variable.
ValidationReport full_report(const WeatherTable& generated, const WeatherTable& reference,
                             const ReportOptions& options = {});

}  // namespace climgen
