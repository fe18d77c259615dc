#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "climgen/time.hpp"

namespace climgen {

/// Climate variables. Declaration order is the canonical column order of
/// every exported table.
enum class Variable {
  dry_bulb_temp,     // °C
  wet_bulb_temp,     // °C
  rel_humidity,      // %
  wind_speed,        // m/s
  wind_direction,    // deg
  global_rad,        // W/m²
  diffuse_rad,       // W/m²
  beam_rad,          // W/m²
  insolation_hours,  // h
  nebulosity,        // octas
  pressure,          // hPa
  clearness_index,   // –
  sky_temp,          // °C, derived
  solar_height,      // deg, derived from site geometry
};

inline constexpr std::size_t kVariableCount = 14;

std::string_view to_string(Variable v);
std::optional<Variable> parse_variable(std::string_view name);
std::string_view unit_of(Variable v);
/// Physical range check used at ingestion and by coherence repair.
bool in_physical_range(Variable v, double value);

enum class Cadence { hourly, daily };

std::string_view to_string(Cadence c);
std::optional<Cadence> parse_cadence(std::string_view name);
inline Timestamp step_seconds(Cadence c) {
  return c == Cadence::hourly ? kSecondsPerHour : kSecondsPerDay;
}
inline double step_hours(Cadence c) { return c == Cadence::hourly ? 1.0 : 24.0; }

struct SiteMeta {
  std::string name = "site";
  double latitude = 0.0;    // degrees north
  double longitude = 0.0;   // degrees east
  double altitude = 0.0;    // m
  double utc_offset = 0.0;  // hours

  /// Throws climgen::Error when a field is out of range.
  void validate() const;
};

using Value = std::optional<double>;

/// One variable sampled at a fixed cadence. Missing observations are
/// std::nullopt; sentinels never survive ingestion.
struct ClimateSeries {
  Variable variable = Variable::dry_bulb_temp;
  Cadence cadence = Cadence::hourly;
  std::vector<Timestamp> times;
  std::vector<Value> values;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  /// Present values in time order.
  std::vector<double> present() const;
  std::size_t missing_count() const;
  /// Index of an exact timestamp, by binary search.
  std::optional<std::size_t> find(Timestamp t) const;
  /// Throws unless timestamps are strictly increasing and sizes agree.
  void validate() const;
};

/// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v < hi; }
  bool operator==(const Interval&) const = default;
};

struct Predicate {
  Variable variable;
  Interval range;
  bool operator==(const Predicate&) const = default;
};

/// "Climatic conditions": calendar filter plus value bins on companion
/// variables. Used both to condition fits and to key models.
struct SelectionCriteria {
  std::set<int> months{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::optional<std::pair<int, int>> hour_range;  // inclusive, h0 <= h1
  std::vector<Predicate> predicates;

  static SelectionCriteria all() { return {}; }
  static SelectionCriteria for_months(std::set<int> months);

  void validate() const;
  bool matches_calendar(Timestamp t) const;
  /// Compact month descriptor such as "m08" or "m06-m07-m08", "all" for a
  /// full year.
  std::string period() const;
  /// Canonical text form; equal criteria give equal strings.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string digest() const;
  bool operator==(const SelectionCriteria&) const = default;
};

/// Keeps the timestamps of `series` that satisfy the calendar filter and all
/// predicates. Predicates are evaluated on the companion series at the same
/// timestamp; a missing companion value fails the predicate.
ClimateSeries select(const ClimateSeries& series, const SelectionCriteria& criteria,
                     std::span<const ClimateSeries> companions = {});

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // n-1 divisor; 0 when count < 2
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  std::size_t missing_count = 0;
  bool small_sample = false;  // count < 2, std undefined
};

Summary describe(const ClimateSeries& series);
Summary describe(std::span<const double> values);

struct BinRow {
  double lower_edge = 0.0;
  std::size_t count = 0;
  double hours = 0.0;
};

struct BinTable {
  Variable variable;
  double bin_width = 1.0;
  std::vector<BinRow> bins;  // non-empty bins only, ascending
};

/// Histogram anchored on multiples of `bin_width`; `hours` weights each
/// observation by the cadence length.
BinTable bin_data(const ClimateSeries& series, double bin_width);

/// Daily means of the days that have a complete set of present hourly values.
ClimateSeries aggregate_daily(const ClimateSeries& hourly);

// --- multi-variable tables --------------------------------------------------

/// Column-aligned table; columns iterate in canonical variable order.
struct WeatherTable {
  Cadence cadence = Cadence::hourly;
  std::vector<Timestamp> times;
  std::map<Variable, std::vector<Value>> columns;

  std::size_t rows() const { return times.size(); }
  bool has(Variable v) const { return columns.count(v) != 0; }
  std::vector<Value>& column(Variable v);
  const std::vector<Value>& column(Variable v) const;
  ClimateSeries series(Variable v) const;
  std::vector<ClimateSeries> all_series() const;
  /// Joins series on the union of their timestamps.
  static WeatherTable from_series(std::span<const ClimateSeries> series);
};

// --- CSV --------------------------------------------------------------------

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  /// CSV column -> variable. Empty: every non-timestamp header must be a
  /// variable name.
  std::map<std::string, Variable> columns;
  double missing_sentinel = -999.0;
  std::optional<Cadence> cadence;  // auto-detected from the median gap if unset
};

struct Dataset {
  SiteMeta site;
  bool has_site = false;  // site block present in `#` comment lines
  std::vector<ClimateSeries> series;
  std::size_t out_of_range = 0;  // values dropped to missing by range checks
  std::vector<std::pair<std::string, std::string>> comments;

  const ClimateSeries* find(Variable v) const;
  const ClimateSeries& at(Variable v) const;
  WeatherTable table() const;
};

/// Reads a headed CSV. Leading `# key: value` lines are kept as comments;
/// `site.*` keys populate the site block.
Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes header, comments and rows; missing values are empty cells. Numbers
/// use the shortest round-trip representation.
void write_csv(const WeatherTable& table, const std::filesystem::path& path,
               std::span<const std::pair<std::string, std::string>> comments = {});

std::string format_number(double v);

// --- psychrometrics ---------------------------------------------------------

/// Saturation vapour pressure over water (hPa), Magnus form with the
/// Alduchov-Eskridge (1996) constants: 6.1094·exp(17.625·T/(T+243.04)).
double saturation_vapor_pressure(double t_c);
/// Inverse of saturation_vapor_pressure at e = rh/100·es(t).
double dew_point(double t_c, double rh);
/// Thermodynamic wet-bulb temperature from the ventilated psychrometer
/// balance e = es(Twb) - A·p·(T - Twb), A = 6.53e-4·(1 + 9.44e-4·Twb) 1/°C
/// (WMO No. 8), solved by bisection on [dew point, T].
double wet_bulb(double t_c, double rh, double pressure_hpa = 1013.25);
/// Residual of the psychrometric balance at a candidate wet-bulb value.
double psychrometric_residual(double t_c, double rh, double pressure_hpa, double twb);
/// Standard-atmosphere pressure at altitude (hPa).
double standard_pressure(double altitude_m);
/// Sky temperature (°C) from Berdahl-Martin clear-sky emissivity
/// 0.711 + 0.56·(Td/100) + 0.73·(Td/100)², with the cloud factor
/// 1 + 0.0224n - 0.0035n² + 0.00028n³ (n in tenths) when nebulosity is known.
double sky_temperature(double t_c, double rh, std::optional<double> nebulosity_octas = {});

}  // namespace climgen
