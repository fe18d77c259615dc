#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "climgen/climdata.hpp"
#include "climgen/error.hpp"

namespace climgen {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      cells.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return cells;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void apply_site_key(SiteMeta& site, std::string_view key, std::string_view value) {
  auto num = [&](double& field) {
    auto v = parse_double(value);
    if (!v) throw Error("csv: bad numeric value for " + std::string(key));
    field = *v;
  };
  if (key == "site.name")
    site.name = std::string(value);
  else if (key == "site.latitude")
    num(site.latitude);
  else if (key == "site.longitude")
    num(site.longitude);
  else if (key == "site.altitude")
    num(site.altitude);
  else if (key == "site.utc_offset")
    num(site.utc_offset);
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open " + path.string());

  Dataset ds;
  std::string line;
  bool have_header = false;
  std::vector<std::pair<std::size_t, Variable>> mapped;  // column index -> variable
  std::size_t ts_col = 0;
  std::size_t row = 0;
  std::vector<Timestamp> times;
  std::vector<std::vector<Value>> columns;

  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view.remove_prefix(1);
      const auto colon = view.find(':');
      if (colon != std::string_view::npos) {
        const auto key = trim(view.substr(0, colon));
        const auto value = trim(view.substr(colon + 1));
        ds.comments.emplace_back(std::string(key), std::string(value));
        if (key.starts_with("site.")) {
          apply_site_key(ds.site, key, value);
          ds.has_site = true;
        }
      }
      continue;
    }
    const auto cells = split(view);
    if (!have_header) {
      have_header = true;
      bool found_ts = false;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string name(cells[i]);
        if (name == schema.timestamp_column) {
          ts_col = i;
          found_ts = true;
          continue;
        }
        if (schema.columns.empty()) {
          auto v = parse_variable(name);
          if (!v) throw Error("csv: unknown variable '" + name + "' in header");
          mapped.emplace_back(i, *v);
        } else if (auto it = schema.columns.find(name); it != schema.columns.end()) {
          mapped.emplace_back(i, it->second);
        }
      }
      if (!found_ts) throw Error("csv: no '" + schema.timestamp_column + "' column");
      for (const auto& [name, var] : schema.columns) {
        if (std::find(cells.begin(), cells.end(), std::string_view(name)) == cells.end())
          throw Error("csv: mapped column '" + name + "' not in header");
      }
      if (mapped.empty()) throw Error("csv: no variable columns");
      columns.resize(mapped.size());
      continue;
    }

    ++row;
    if (cells.size() <= ts_col) throw RowError(row, "missing timestamp");
    auto t = parse_iso8601(cells[ts_col]);
    if (!t) throw RowError(row, "unparseable timestamp '" + std::string(cells[ts_col]) + "'");
    if (!times.empty() && *t <= times.back())
      throw RowError(row, "timestamps not strictly increasing");
    times.push_back(*t);
    for (std::size_t k = 0; k < mapped.size(); ++k) {
      const auto [col, var] = mapped[k];
      Value v;
      if (col < cells.size()) v = parse_double(cells[col]);
      if (v && *v == schema.missing_sentinel) v.reset();
      if (v && !in_physical_range(var, *v)) {
        v.reset();
        ++ds.out_of_range;
      }
      columns[k].push_back(v);
    }
  }
  if (!have_header) throw Error("csv: empty file");

  Cadence cadence = Cadence::hourly;
  if (schema.cadence) {
    cadence = *schema.cadence;
  } else if (times.size() >= 2) {
    std::vector<Timestamp> gaps;
    for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const Timestamp median = gaps[gaps.size() / 2];
    if (median == kSecondsPerHour)
      cadence = Cadence::hourly;
    else if (median == kSecondsPerDay)
      cadence = Cadence::daily;
    else
      throw Error("csv: unsupported cadence, median gap " + std::to_string(median) + " s");
  }

  for (std::size_t k = 0; k < mapped.size(); ++k)
    ds.series.push_back(ClimateSeries{mapped[k].second, cadence, times, std::move(columns[k])});
  if (ds.has_site) ds.site.validate();
  return ds;
}

void write_csv(const WeatherTable& table, const std::filesystem::path& path,
               std::span<const std::pair<std::string, std::string>> comments) {
  std::ostringstream out;
  for (const auto& [k, v] : comments) out << "# " << k << ": " << v << '\n';
  out << "timestamp";
  for (const auto& [var, col] : table.columns) out << ',' << to_string(var);
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << format_iso8601(table.times[i]);
    for (const auto& [var, col] : table.columns) {
      out << ',';
      if (col[i]) out << format_number(*col[i]);
    }
    out << '\n';
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << out.str();
  if (!f) throw Error("write failed for " + path.string());
}

}  // namespace climgen
