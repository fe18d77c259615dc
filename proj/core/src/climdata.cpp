#include "climgen/climdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "climgen/error.hpp"

namespace climgen {

namespace {

struct VariableInfo {
  Variable variable;
  std::string_view name;
  std::string_view unit;
  double lo;
  double hi;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<VariableInfo, kVariableCount> kVariables{{
    {Variable::dry_bulb_temp, "dry_bulb_temp", "degC", -90.0, 70.0},
    {Variable::wet_bulb_temp, "wet_bulb_temp", "degC", -90.0, 70.0},
    {Variable::rel_humidity, "rel_humidity", "%", 0.0, 100.0},
    {Variable::wind_speed, "wind_speed", "m/s", 0.0, 120.0},
    {Variable::wind_direction, "wind_direction", "deg", 0.0, 360.0},
    {Variable::global_rad, "global_rad", "W/m2", 0.0, 1500.0},
    {Variable::diffuse_rad, "diffuse_rad", "W/m2", 0.0, 1500.0},
    {Variable::beam_rad, "beam_rad", "W/m2", 0.0, 1500.0},
    {Variable::insolation_hours, "insolation_hours", "h", 0.0, 24.0},
    {Variable::nebulosity, "nebulosity", "octas", 0.0, 8.0},
    {Variable::pressure, "pressure", "hPa", 300.0, 1100.0},
    {Variable::clearness_index, "clearness_index", "-", 0.0, 1.0},
    {Variable::sky_temp, "sky_temp", "degC", -150.0, 70.0},
    {Variable::solar_height, "solar_height", "deg", -90.0, 90.0},
}};

const VariableInfo& info(Variable v) { return kVariables[static_cast<std::size_t>(v)]; }

}  // namespace

std::string_view to_string(Variable v) { return info(v).name; }

std::optional<Variable> parse_variable(std::string_view name) {
  for (const auto& i : kVariables)
    if (i.name == name) return i.variable;
  return std::nullopt;
}

std::string_view unit_of(Variable v) { return info(v).unit; }

bool in_physical_range(Variable v, double value) {
  const auto& i = info(v);
  return std::isfinite(value) && value >= i.lo && value <= i.hi;
}

std::string_view to_string(Cadence c) { return c == Cadence::hourly ? "hourly" : "daily"; }

std::optional<Cadence> parse_cadence(std::string_view name) {
  if (name == "hourly") return Cadence::hourly;
  if (name == "daily") return Cadence::daily;
  return std::nullopt;
}

void SiteMeta::validate() const {
  if (!(latitude >= -90.0 && latitude <= 90.0)) throw Error("site latitude out of [-90, 90]");
  if (!(longitude >= -180.0 && longitude <= 180.0))
    throw Error("site longitude out of [-180, 180]");
  if (!(utc_offset >= -12.0 && utc_offset <= 14.0)) throw Error("site utc_offset out of [-12, 14]");
  if (!std::isfinite(altitude)) throw Error("site altitude not finite");
}

// --- ClimateSeries ----------------------------------------------------------

std::vector<double> ClimateSeries::present() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values)
    if (v) out.push_back(*v);
  return out;
}

std::size_t ClimateSeries::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const Value& v) { return !v; }));
}

std::optional<std::size_t> ClimateSeries::find(Timestamp t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - times.begin());
}

void ClimateSeries::validate() const {
  if (times.size() != values.size()) throw Error("series timestamps and values differ in length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw Error("series timestamps not strictly increasing at index " + std::to_string(i));
}

// --- SelectionCriteria ------------------------------------------------------

SelectionCriteria SelectionCriteria::for_months(std::set<int> months) {
  SelectionCriteria c;
  c.months = std::move(months);
  return c;
}

void SelectionCriteria::validate() const {
  if (months.empty()) throw Error("criteria: months must be non-empty");
  for (int m : months)
    if (m < 1 || m > 12) throw Error("criteria: month " + std::to_string(m) + " out of 1..12");
  if (hour_range) {
    auto [h0, h1] = *hour_range;
    if (h0 < 0 || h1 > 23 || h0 > h1) throw Error("criteria: hour range must satisfy 0<=h0<=h1<=23");
  }
  for (const auto& p : predicates)
    if (!(p.range.lo < p.range.hi))
      throw Error("criteria: empty interval for " + std::string(to_string(p.variable)));
}

bool SelectionCriteria::matches_calendar(Timestamp t) const {
  if (!months.count(month_of(t))) return false;
  if (hour_range) {
    const int h = hour_of(t);
    if (h < hour_range->first || h > hour_range->second) return false;
  }
  return true;
}

std::string SelectionCriteria::period() const {
  if (months.size() == 12) return "all";
  std::string out;
  for (int m : months) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "m%02d", m);
    if (!out.empty()) out += '-';
    out += buf;
  }
  return out;
}

std::string SelectionCriteria::canonical() const {
  std::string out = "months=";
  bool first = true;
  for (int m : months) {
    if (!first) out += ',';
    out += std::to_string(m);
    first = false;
  }
  if (hour_range)
    out += ";hours=" + std::to_string(hour_range->first) + "-" + std::to_string(hour_range->second);
  auto preds = predicates;
  std::sort(preds.begin(), preds.end(), [](const Predicate& a, const Predicate& b) {
    if (a.variable != b.variable) return a.variable < b.variable;
    if (a.range.lo != b.range.lo) return a.range.lo < b.range.lo;
    return a.range.hi < b.range.hi;
  });
  for (const auto& p : preds)
    out += ";" + std::string(to_string(p.variable)) + "=[" + format_number(p.range.lo) + "," +
           format_number(p.range.hi) + ")";
  return out;
}

std::string SelectionCriteria::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : canonical()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ClimateSeries select(const ClimateSeries& series, const SelectionCriteria& criteria,
                     std::span<const ClimateSeries> companions) {
  criteria.validate();
  std::vector<const ClimateSeries*> sources;
  for (const auto& p : criteria.predicates) {
    const ClimateSeries* found = nullptr;
    for (const auto& c : companions)
      if (c.variable == p.variable) found = &c;
    if (!found && series.variable == p.variable) found = &series;
    if (!found)
      throw Error("select: predicate variable '" + std::string(to_string(p.variable)) +
                  "' absent from companions");
    sources.push_back(found);
  }

  ClimateSeries out{series.variable, series.cadence, {}, {}};
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Timestamp t = series.times[i];
    if (!criteria.matches_calendar(t)) continue;
    bool keep = true;
    for (std::size_t k = 0; k < sources.size() && keep; ++k) {
      const auto idx = sources[k]->find(t);
      keep = idx && sources[k]->values[*idx] &&
             criteria.predicates[k].range.contains(*sources[k]->values[*idx]);
    }
    if (!keep) continue;
    out.times.push_back(t);
    out.values.push_back(series.values[i]);
  }
  return out;
}

// --- statistics -------------------------------------------------------------

Summary describe(std::span<const double> values) {
  if (values.empty()) throw Error("describe: no data");
  Summary s;
  s.count = values.size();
  s.min = values[0];
  s.max = values[0];
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) {
    s.small_sample = true;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  return s;
}

Summary describe(const ClimateSeries& series) {
  const auto values = series.present();
  if (values.empty()) throw Error("describe: no data");
  Summary s = describe(values);
  s.missing_count = series.size() - values.size();
  return s;
}

BinTable bin_data(const ClimateSeries& series, double bin_width) {
  if (!(bin_width > 0.0)) throw Error("bin_data: bin width must be positive");
  const auto values = series.present();
  if (values.empty()) throw Error("bin_data: no data");
  std::map<long long, std::size_t> counts;
  for (double v : values) ++counts[static_cast<long long>(std::floor(v / bin_width))];
  BinTable table{series.variable, bin_width, {}};
  const double hours = step_hours(series.cadence);
  for (const auto& [k, n] : counts)
    table.bins.push_back({static_cast<double>(k) * bin_width, n, static_cast<double>(n) * hours});
  return table;
}

ClimateSeries aggregate_daily(const ClimateSeries& hourly) {
  if (hourly.cadence != Cadence::hourly) throw Error("aggregate_daily: series is not hourly");
  ClimateSeries out{hourly.variable, Cadence::daily, {}, {}};
  std::size_t i = 0;
  while (i < hourly.size()) {
    const Timestamp day = day_start(hourly.times[i]);
    double sum = 0.0;
    int n = 0;
    bool complete = true;
    std::size_t j = i;
    for (; j < hourly.size() && day_start(hourly.times[j]) == day; ++j) {
      if (hourly.values[j]) {
        sum += *hourly.values[j];
        ++n;
      } else {
        complete = false;
      }
    }
    out.times.push_back(day);
    if (complete && n == 24)
      out.values.emplace_back(sum / 24.0);
    else
      out.values.emplace_back(std::nullopt);
    i = j;
  }
  return out;
}

// --- WeatherTable -----------------------------------------------------------

std::vector<Value>& WeatherTable::column(Variable v) {
  auto it = columns.find(v);
  if (it == columns.end()) throw Error("table has no column '" + std::string(to_string(v)) + "'");
  return it->second;
}

const std::vector<Value>& WeatherTable::column(Variable v) const {
  auto it = columns.find(v);
  if (it == columns.end()) throw Error("table has no column '" + std::string(to_string(v)) + "'");
  return it->second;
}

ClimateSeries WeatherTable::series(Variable v) const {
  return ClimateSeries{v, cadence, times, column(v)};
}

std::vector<ClimateSeries> WeatherTable::all_series() const {
  std::vector<ClimateSeries> out;
  for (const auto& [v, col] : columns) out.push_back(ClimateSeries{v, cadence, times, col});
  return out;
}

WeatherTable WeatherTable::from_series(std::span<const ClimateSeries> series) {
  WeatherTable t;
  if (series.empty()) return t;
  t.cadence = series.front().cadence;
  std::set<Timestamp> all;
  for (const auto& s : series) all.insert(s.times.begin(), s.times.end());
  t.times.assign(all.begin(), all.end());
  for (const auto& s : series) {
    std::vector<Value> col(t.times.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      while (t.times[j] < s.times[i]) ++j;
      col[j] = s.values[i];
    }
    t.columns[s.variable] = std::move(col);
  }
  return t;
}

const ClimateSeries* Dataset::find(Variable v) const {
  for (const auto& s : series)
    if (s.variable == v) return &s;
  return nullptr;
}

const ClimateSeries& Dataset::at(Variable v) const {
  if (const auto* s = find(v)) return *s;
  throw Error("dataset has no variable '" + std::string(to_string(v)) + "'");
}

WeatherTable Dataset::table() const { return WeatherTable::from_series(series); }

}  // namespace climgen
