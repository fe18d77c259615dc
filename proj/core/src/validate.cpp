#include "climgen/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "climgen/error.hpp"
#include "climgen/genseq.hpp"
#include "climgen/random.hpp"
#include "climgen/registry.hpp"
#include "climgen/solargeo.hpp"

namespace climgen {

namespace {

constexpr std::size_t kMinKsSample = 5;

void check_ks_sizes(std::size_t n, std::size_t m) {
  if (n < kMinKsSample || m < kMinKsSample)
    throw Error("ks_two_sample: need at least 5 values per sample (got " + std::to_string(n) + " and " +
                std::to_string(m) + ")");
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::map<double, double> occurrence(const ClimateSeries& s, double width) {
  const auto table = bin_data(s, width);
  double total = 0.0;
  for (const auto& b : table.bins) total += b.hours;
  std::map<double, double> out;
  for (const auto& b : table.bins) out[b.lower_edge] = total > 0.0 ? b.hours / total : 0.0;
  return out;
}

nlohmann::json ks_json(const KsResult& k) {
  nlohmann::json j{{"d", k.d}, {"critical", k.critical}, {"pass", k.pass}, {"n", k.n}, {"m", k.m}, {"alpha", k.alpha}};
  if (k.p_value) j["p_value"] = *k.p_value;
  return j;
}

}  // namespace

double ks_c_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (std::abs(alpha - 0.05) < 1e-12) return 1.358;
  if (std::abs(alpha - 0.01) < 1e-12) return 1.628;
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

double ks_statistic(std::span<const double> xs, std::span<const double> ys) {
  std::vector<double> x(xs.begin(), xs.end()), y(ys.begin(), ys.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

KsResult ks_two_sample(std::span<const double> x, std::span<const double> y, double alpha) {
  check_ks_sizes(x.size(), y.size());
  KsResult r;
  r.n = x.size();
  r.m = y.size();
  r.alpha = alpha;
  r.d = ks_statistic(x, y);
  const double n = static_cast<double>(r.n), m = static_cast<double>(r.m);
  r.critical = ks_c_alpha(alpha) * std::sqrt((n + m) / (n * m));
  r.pass = r.d <= r.critical;
  return r;
}

KsResult ks_block_permutation(std::span<const double> x, std::span<const double> y, std::size_t block,
                              double alpha, std::size_t permutations, std::uint64_t seed) {
  check_ks_sizes(x.size(), y.size());
  if (block == 0) throw Error("ks_block_permutation: block length must be positive");
  if (permutations < 19) throw Error("ks_block_permutation: need at least 19 permutations");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");

  struct Item {
    double value;
    std::size_t block;
  };
  std::vector<Item> pooled;
  std::vector<std::size_t> block_size;
  auto add = [&](std::span<const double> s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i % block == 0) block_size.push_back(0);
      pooled.push_back({s[i], block_size.size() - 1});
      ++block_size.back();
    }
  };
  add(x);
  const std::size_t bx = block_size.size();
  add(y);
  const std::size_t nb = block_size.size();
  std::sort(pooled.begin(), pooled.end(), [](const Item& a, const Item& b) { return a.value < b.value; });

  std::vector<char> in_x(nb, 0);
  auto statistic = [&]() {
    double nx = 0.0, ny = 0.0;
    for (std::size_t b = 0; b < nb; ++b) (in_x[b] ? nx : ny) += static_cast<double>(block_size[b]);
    double cx = 0.0, cy = 0.0, d = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
      const double v = pooled[i].value;
      for (; i < pooled.size() && pooled[i].value == v; ++i) (in_x[pooled[i].block] ? cx : cy) += 1.0;
      d = std::max(d, std::abs(cx / nx - cy / ny));
    }
    return d;
  };

  KsResult r;
  r.n = x.size();
  r.m = y.size();
  r.alpha = alpha;
  r.d = ks_statistic(x, y);

  std::vector<std::size_t> order(nb);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::vector<double> null_d;
  null_d.reserve(permutations);
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = nb; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::fill(in_x.begin(), in_x.end(), 0);
    for (std::size_t i = 0; i < bx; ++i) in_x[order[i]] = 1;
    const double d = statistic();
    null_d.push_back(d);
    if (d >= r.d - 1e-12) ++at_least;
  }
  std::sort(null_d.begin(), null_d.end());
  const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(permutations + 1)));
  r.critical = null_d[std::min(null_d.size(), std::max<std::size_t>(rank, 1)) - 1];
  r.p_value = static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1);
  r.pass = *r.p_value > alpha;
  return r;
}

MonthlyReport compare_monthly(const ClimateSeries& generated, const ClimateSeries& reference, double tol_mean,
                              double tol_std) {
  std::map<int, std::vector<double>> gen, ref;
  for (std::size_t i = 0; i < generated.size(); ++i)
    if (generated.values[i]) gen[month_of(generated.times[i])].push_back(*generated.values[i]);
  for (std::size_t i = 0; i < reference.size(); ++i)
    if (reference.values[i]) ref[month_of(reference.times[i])].push_back(*reference.values[i]);

  MonthlyReport out;
  for (const auto& [month, g] : gen) {
    const auto it = ref.find(month);
    if (it == ref.end()) {
      out.notes.push_back("month " + std::to_string(month) + " absent from reference; skipped");
      continue;
    }
    const auto& r = it->second;
    MonthlyComparison c;
    c.month = month;
    c.generated_mean = mean_of(g);
    c.reference_mean = mean_of(r);
    c.generated_std = sample_std(g);
    c.reference_std = sample_std(r);
    c.delta_mean = c.generated_mean - c.reference_mean;
    c.delta_std = c.generated_std - c.reference_std;
    const double slack = 1e-12 * std::max(1.0, std::abs(c.reference_mean));
    c.pass_mean = std::abs(c.delta_mean) <= tol_mean * c.reference_std + slack;
    c.pass_std = std::abs(c.delta_std) <= tol_std * c.reference_std + slack;
    c.pass = c.pass_mean && c.pass_std;
    out.pass = out.pass && c.pass;
    out.months.push_back(c);
  }
  return out;
}

ExtremesResult check_extremes(const ClimateSeries& generated, const ClimateSeries& reference, const SiteMeta* site) {
  const auto g = generated.present();
  const auto r = reference.present();
  if (g.empty() || r.empty()) throw Error("check_extremes: both series need present values");
  ExtremesResult e;
  std::tie(e.generated_min, e.generated_max) = [&] {
    const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
    return std::pair{*lo, *hi};
  }();
  std::tie(e.reference_min, e.reference_max) = [&] {
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    return std::pair{*lo, *hi};
  }();
  e.margin = 0.1 * (e.reference_max - e.reference_min);
  const double lo = e.reference_min - e.margin, hi = e.reference_max + e.margin;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    if (!generated.values[i]) continue;
    const double v = *generated.values[i];
    if (v < lo || v > hi) {
      e.range_pass = false;
      e.offending = generated.times[i];
      break;
    }
  }

  e.reference_p99 = sample_quantile(r, 0.99);
  const auto above = [&](const std::vector<double>& v) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x > e.reference_p99; })) /
           static_cast<double>(v.size());
  };
  e.reference_exceedance = above(r);
  e.generated_exceedance = above(g);
  e.frequency_checked = e.reference_exceedance * static_cast<double>(g.size()) >= 10.0;
  if (e.frequency_checked)
    e.frequency_pass = e.generated_exceedance <= 2.0 * e.reference_exceedance &&
                       e.generated_exceedance >= 0.5 * e.reference_exceedance;

  if (site && generated.variable == Variable::insolation_hours) {
    e.insolation_checked = true;
    std::map<Timestamp, double> daily;
    for (std::size_t i = 0; i < generated.size(); ++i)
      if (generated.values[i]) daily[day_start(generated.times[i])] += *generated.values[i];
    for (const auto& [day, total] : daily) {
      if (total > solar_day(*site, day).day_length_h + 1e-9) {
        e.insolation_pass = false;
        e.insolation_offending = day;
        break;
      }
    }
  }
  e.pass = e.range_pass && e.frequency_pass && e.insolation_pass;
  return e;
}

TwbCheck check_twb_tdb(const WeatherTable& table) {
  if (!table.has(Variable::wet_bulb_temp) || !table.has(Variable::dry_bulb_temp))
    throw Error("check_twb_tdb: needs dry_bulb_temp and wet_bulb_temp");
  const auto& wb = table.column(Variable::wet_bulb_temp);
  const auto& db = table.column(Variable::dry_bulb_temp);
  TwbCheck c;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    if (!wb[i] || !db[i]) continue;
    ++c.rows_checked;
    if (*wb[i] > *db[i] + 1e-6) {
      ++c.violations;
      if (!c.first_violation) {
        c.first_violation = i;
        c.first_violation_time = table.times[i];
      }
    }
  }
  c.pass = c.violations == 0;
  return c;
}

double default_bin_width(Variable v) {
  switch (v) {
    case Variable::rel_humidity: return 5.0;
    case Variable::global_rad:
    case Variable::diffuse_rad:
    case Variable::beam_rad: return 50.0;
    case Variable::clearness_index: return 0.05;
    case Variable::pressure: return 2.0;
    case Variable::wind_direction: return 30.0;
    case Variable::solar_height: return 5.0;
    default: return 1.0;
  }
}

ValidationReport full_report(const WeatherTable& generated, const WeatherTable& reference,
                             const ReportOptions& opt) {
  ValidationReport rep;
  rep.alpha = opt.alpha;
  std::size_t common = 0;
  for (const auto& [var, col] : generated.columns) {
    if (!reference.has(var)) continue;
    ++common;
    const auto g = generated.series(var);
    const auto r = reference.series(var);
    const auto gv = g.present();
    const auto rv = r.present();
    if (gv.size() < kMinKsSample || rv.size() < kMinKsSample) continue;
    VariableReport vr{var, {}, {}, {}, 0.0, true};
    vr.ks = opt.ks_block == 0
                ? ks_two_sample(gv, rv, opt.alpha)
                : ks_block_permutation(gv, rv, opt.ks_block, opt.alpha, opt.permutations,
                                       Rng::splitmix(opt.seed + static_cast<std::uint64_t>(var)));
    vr.monthly = compare_monthly(g, r, opt.tol_mean, opt.tol_std);
    vr.extremes = check_extremes(g, r, opt.site ? &*opt.site : nullptr);
    const double width = default_bin_width(var);
    const auto og = occurrence(g, width), orf = occurrence(r, width);
    for (const auto& [edge, f] : og) {
      const auto it = orf.find(edge);
      vr.occurrence_max_diff = std::max(vr.occurrence_max_diff, std::abs(f - (it == orf.end() ? 0.0 : it->second)));
    }
    for (const auto& [edge, f] : orf)
      if (!og.count(edge)) vr.occurrence_max_diff = std::max(vr.occurrence_max_diff, f);
    vr.pass = vr.ks.pass && vr.monthly.pass && vr.extremes.pass;
    rep.pass = rep.pass && vr.pass;
    rep.variables.push_back(std::move(vr));
  }
  if (common == 0) throw Error("full_report: generated and reference tables share no variable");

  if (generated.has(Variable::wet_bulb_temp) && generated.has(Variable::dry_bulb_temp)) {
    rep.twb = check_twb_tdb(generated);
    rep.pass = rep.pass && rep.twb->pass;
  }
  if (opt.site) {
    WeatherTable copy = generated;
    rep.coherence_repairs = enforce_coherence(copy, *opt.site).total();
  }
  for (const auto& [name, samples] : opt.indicators) {
    IndicatorResult ir{name, ks_two_sample(samples.first, samples.second, opt.alpha)};
    rep.pass = rep.pass && ir.ks.pass;
    rep.indicators.push_back(std::move(ir));
  }
  return rep;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["pass"] = pass;
  j["coherence_repairs"] = coherence_repairs;
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : variables) {
    nlohmann::json months = nlohmann::json::array();
    for (const auto& m : v.monthly.months)
      months.push_back({{"month", m.month},
                        {"generated_mean", m.generated_mean},
                        {"reference_mean", m.reference_mean},
                        {"generated_std", m.generated_std},
                        {"reference_std", m.reference_std},
                        {"delta_mean", m.delta_mean},
                        {"delta_std", m.delta_std},
                        {"pass", m.pass}});
    const auto& e = v.extremes;
    nlohmann::json ex{{"generated_min", e.generated_min}, {"generated_max", e.generated_max},
                      {"reference_min", e.reference_min}, {"reference_max", e.reference_max},
                      {"margin", e.margin},               {"range_pass", e.range_pass},
                      {"reference_p99", e.reference_p99}, {"reference_exceedance", e.reference_exceedance},
                      {"generated_exceedance", e.generated_exceedance},
                      {"frequency_checked", e.frequency_checked},
                      {"frequency_pass", e.frequency_pass}, {"pass", e.pass}};
    if (e.offending) ex["offending"] = format_iso8601(*e.offending);
    if (e.insolation_checked) {
      ex["insolation_pass"] = e.insolation_pass;
      if (e.insolation_offending) ex["insolation_offending"] = format_iso8601(*e.insolation_offending);
    }
    vars.push_back({{"variable", std::string(to_string(v.variable))},
                    {"ks", ks_json(v.ks)},
                    {"monthly", months},
                    {"monthly_notes", v.monthly.notes},
                    {"extremes", ex},
                    {"occurrence_max_diff", v.occurrence_max_diff},
                    {"pass", v.pass}});
  }
  j["variables"] = vars;
  if (twb) {
    nlohmann::json t{{"pass", twb->pass}, {"rows_checked", twb->rows_checked}, {"violations", twb->violations}};
    if (twb->first_violation) t["first_violation_row"] = *twb->first_violation;
    j["twb_tdb"] = t;
  }
  nlohmann::json ind = nlohmann::json::array();
  for (const auto& i : indicators) ind.push_back({{"name", i.name}, {"ks", ks_json(i.ks)}});
  j["indicators"] = ind;
  return j;
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  out << "validation at alpha=" << format_number(alpha) << ": " << (pass ? "PASS" : "FAIL") << '\n';
  for (const auto& v : variables) {
    out << "  " << to_string(v.variable) << ": KS D=" << format_number(v.ks.d)
        << " critical=" << format_number(v.ks.critical) << (v.ks.pass ? " ok" : " FAIL");
    out << "; monthly " << (v.monthly.pass ? "ok" : "FAIL");
    out << "; extremes " << (v.extremes.pass ? "ok" : "FAIL");
    if (v.extremes.offending) out << " (" << format_iso8601(*v.extremes.offending) << ")";
    out << '\n';
    for (const auto& m : v.monthly.months)
      out << "    month " << m.month << ": dmean=" << format_number(m.delta_mean)
          << " dstd=" << format_number(m.delta_std) << (m.pass ? "" : " FAIL") << '\n';
    for (const auto& n : v.monthly.notes) out << "    " << n << '\n';
  }
  if (twb) {
    out << "  wet bulb <= dry bulb: " << (twb->pass ? "ok" : "FAIL");
    if (twb->first_violation) out << " (row " << *twb->first_violation << ")";
    out << '\n';
  }
  out << "  coherence repairs on re-run: " << coherence_repairs << '\n';
  for (const auto& i : indicators)
    out << "  indicator " << i.name << ": KS D=" << format_number(i.ks.d) << (i.ks.pass ? " ok" : " FAIL") << '\n';
  return out.str();
}

}  // namespace climgen
