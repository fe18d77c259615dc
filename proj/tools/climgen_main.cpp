// climgen: describe, fit, generate and validate climate sequences.
//
// Exit codes: 0 ok, 1 usage, 2 data or model error, 3 validation failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "climgen/arma.hpp"
#include "climgen/climdata.hpp"
#include "climgen/corrfit.hpp"
#include "climgen/distfit.hpp"
#include "climgen/error.hpp"
#include "climgen/genseq.hpp"
#include "climgen/neuralfit.hpp"
#include "climgen/registry.hpp"
#include "climgen/solargeo.hpp"
#include "climgen/validate.hpp"

namespace fs = std::filesystem;
using namespace climgen;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitValidation = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- argument parsing -------------------------------------------------------

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

Variable variable_arg(const std::string& name) {
  const auto v = parse_variable(name);
  if (!v) throw UsageError("unknown variable '" + name + "'");
  return *v;
}

std::vector<Variable> variable_list(const std::string& text) {
  std::vector<Variable> out;
  for (const auto& name : split(text, ',')) out.push_back(variable_arg(name));
  if (out.empty()) throw UsageError("empty variable list");
  return out;
}

int int_arg(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("bad " + what + " '" + text + "'");
}

double double_arg(const std::string& text, const std::string& what) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("bad " + what + " '" + text + "'");
}

// "a-b" or "a..b" into an inclusive pair.
std::pair<int, int> int_range(const std::string& text, const std::string& what) {
  for (const std::string sep : {"..", "-"}) {
    const auto pos = text.find(sep);
    if (pos != std::string::npos && pos > 0)
      return {int_arg(text.substr(0, pos), what), int_arg(text.substr(pos + sep.size()), what)};
  }
  const int v = int_arg(text, what);
  return {v, v};
}

struct CriteriaArgs {
  std::string months = "all";
  std::string hours;
  std::vector<std::string> where;
};

void add_criteria(CLI::App* cmd, CriteriaArgs& args) {
  cmd->add_option("--months", args.months, "months, e.g. 8, 6,7,8 or 6-8 (default all)");
  cmd->add_option("--hours", args.hours, "inclusive hour range h0-h1");
  cmd->add_option("--where", args.where, "predicate var:lo:hi on a companion variable (repeatable)");
}

SelectionCriteria build_criteria(const CriteriaArgs& args) {
  SelectionCriteria c;
  if (args.months != "all") {
    c.months.clear();
    for (const auto& item : split(args.months, ',')) {
      const auto [a, b] = int_range(item, "month");
      for (int m = a; m <= b; ++m) c.months.insert(m);
    }
  }
  if (!args.hours.empty()) c.hour_range = int_range(args.hours, "hour range");
  for (const auto& w : args.where) {
    const auto parts = split(w, ':');
    if (parts.size() != 3) throw UsageError("--where expects var:lo:hi, got '" + w + "'");
    c.predicates.push_back({variable_arg(parts[0]), {double_arg(parts[1], "bound"), double_arg(parts[2], "bound")}});
  }
  try {
    c.validate();
  } catch (const Error& ex) {
    throw UsageError(ex.what());
  }
  return c;
}

std::uint64_t resolve_seed(CLI::Option* opt, std::uint64_t value) {
  if (opt->count() > 0) return value;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cout << "seed: " << seed << " (pass --seed " << seed << " to reproduce)\n";
  return seed;
}

// --- data access ------------------------------------------------------------

struct DataArgs {
  std::string path;
  std::string site;
  double sentinel = -999.0;
};

void add_data(CLI::App* cmd, DataArgs& args, bool positional) {
  if (positional)
    cmd->add_option("data", args.path, "measured CSV")->required();
  else
    cmd->add_option("--data", args.path, "measured CSV")->required();
  cmd->add_option("--site", args.site, "site JSON (overrides the CSV site block)");
  cmd->add_option("--sentinel", args.sentinel, "missing-value sentinel")->default_val(-999.0);
}

struct Loaded {
  Dataset data;
  std::optional<SiteMeta> site;
};

Loaded load(const DataArgs& args) {
  CsvSchema schema;
  schema.missing_sentinel = args.sentinel;
  Loaded out{ingest_csv(args.path, schema), std::nullopt};
  if (out.data.has_site) out.site = out.data.site;
  if (!args.site.empty()) {
    std::ifstream in(args.site);
    if (!in) throw Error("cannot open site file " + args.site);
    try {
      out.site = site_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& ex) {
      throw Error("site file " + args.site + ": " + ex.what());
    }
  }
  return out;
}

const SiteMeta& need_site(const Loaded& d, const std::string& why) {
  if (!d.site) throw Error(why + " needs a site (site.* comment lines in the CSV or --site)");
  return *d.site;
}

// Series for `v`; clearness index is derived from global radiation when absent.
ClimateSeries series_of(const Loaded& d, Variable v, bool daily) {
  if (v == Variable::clearness_index && !d.data.find(v)) {
    const auto* g = d.data.find(Variable::global_rad);
    if (!g) throw Error("data has neither clearness_index nor global_rad");
    const auto& site = need_site(d, "clearness index");
    return clearness_index(daily && g->cadence == Cadence::hourly ? aggregate_daily(*g) : *g, site);
  }
  if (v == Variable::solar_height && !d.data.find(v)) {
    const auto& any = d.data.series.front();
    auto s = solar_height_series(need_site(d, "solar height"), any.times, any.cadence);
    return daily && s.cadence == Cadence::hourly ? aggregate_daily(s) : s;
  }
  const auto& s = d.data.at(v);
  return daily && s.cadence == Cadence::hourly ? aggregate_daily(s) : s;
}

std::vector<ClimateSeries> companions_for(const Loaded& d, const SelectionCriteria& c, bool daily) {
  std::vector<ClimateSeries> out;
  for (const auto& s : d.data.series)
    out.push_back(daily && s.cadence == Cadence::hourly ? aggregate_daily(s) : s);
  for (const auto& p : c.predicates) {
    const bool present = std::any_of(out.begin(), out.end(), [&](const ClimateSeries& s) { return s.variable == p.variable; });
    if (!present && (p.variable == Variable::clearness_index || p.variable == Variable::solar_height))
      out.push_back(series_of(d, p.variable, daily));
  }
  return out;
}

std::string data_span(const ClimateSeries& s) {
  if (s.empty()) return "";
  return format_iso8601(s.times.front()) + "/" + format_iso8601(s.times.back());
}

ModelRegistry open_registry(const std::string& root) {
  return ModelRegistry(root.empty() ? default_registry_root() : fs::path(root));
}

void store(ModelRegistry reg, const FittedModel& model, const std::string& span, nlohmann::json diagnostics) {
  Provenance prov;
  prov.data_span = span;
  prov.diagnostics = std::move(diagnostics);
  const auto key = reg.put(model, prov);
  std::cout << "registry: stored " << key.id() << " in " << reg.path_of(key).string() << "\n";
}

std::string num(double v) { return format_number(v); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string bin_csv(const BinTable& bins) {
  std::ostringstream out;
  out << "lower_edge,upper_edge,count,hours\n";
  for (const auto& b : bins.bins)
    out << num(b.lower_edge) << ',' << num(b.lower_edge + bins.bin_width) << ',' << b.count << ',' << num(b.hours)
        << '\n';
  return out.str();
}

std::string series_csv(const ClimateSeries& s) {
  std::ostringstream out;
  out << "timestamp," << to_string(s.variable) << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_iso8601(s.times[i]) << ',';
    if (s.values[i]) out << num(*s.values[i]);
    out << '\n';
  }
  return out.str();
}

// Collapses missing values; ARMA fitting works on the present values in order.
ClimateSeries compact(const ClimateSeries& s, std::size_t* dropped) {
  ClimateSeries out{s.variable, s.cadence, {}, {}};
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.values[i]) {
      out.times.push_back(s.times[i]);
      out.values.push_back(s.values[i]);
    }
  *dropped = s.size() - out.size();
  return out;
}

// --- commands ---------------------------------------------------------------

struct DescribeArgs {
  DataArgs data;
  std::string var;
  CriteriaArgs criteria;
  bool daily = false;
  double width = 0.0;
  std::string plotdata;
};

int run_describe(const DescribeArgs& a) {
  const auto d = load(a.data);
  const auto v = variable_arg(a.var);
  const auto c = build_criteria(a.criteria);
  const auto comps = companions_for(d, c, a.daily);
  const auto sel = select(series_of(d, v, a.daily), c, comps);
  const auto s = describe(sel);
  std::cout << "variable: " << to_string(v) << " [" << unit_of(v) << "]\n"
            << "cadence: " << to_string(sel.cadence) << "\n"
            << "period: " << c.period() << "\n"
            << "count: " << s.count << "\n"
            << "missing: " << s.missing_count << "\n"
            << "mean: " << num(s.mean) << "\n"
            << "std: " << (s.small_sample ? "undefined (n < 2)" : num(s.std)) << "\n"
            << "min: " << num(s.min) << "\n"
            << "max: " << num(s.max) << "\n";
  if (!a.plotdata.empty()) {
    const double width = a.width > 0.0 ? a.width : default_bin_width(v);
    const fs::path dir(a.plotdata);
    write_text(dir / (std::string(to_string(v)) + "_histogram.csv"), bin_csv(bin_data(sel, width)));
    write_text(dir / (std::string(to_string(v)) + "_series.csv"), series_csv(sel));
    std::cout << "plotdata: " << dir.string() << "\n";
  }
  return 0;
}

struct BinsArgs {
  DataArgs data;
  std::string var;
  CriteriaArgs criteria;
  bool daily = false;
  double width = 0.0;
  std::string out;
};

int run_bins(const BinsArgs& a) {
  const auto d = load(a.data);
  const auto v = variable_arg(a.var);
  const auto c = build_criteria(a.criteria);
  const auto sel = select(series_of(d, v, a.daily), c, companions_for(d, c, a.daily));
  const double width = a.width > 0.0 ? a.width : default_bin_width(v);
  const auto text = bin_csv(bin_data(sel, width));
  if (a.out.empty())
    std::cout << text;
  else {
    write_text(a.out, text);
    std::cout << "bins: " << a.out << "\n";
  }
  return 0;
}

struct FitCommon {
  DataArgs data;
  std::string var;
  CriteriaArgs criteria;
  bool daily = false;
  std::string registry;
  std::string plotdata;
  double alpha = 0.05;
};

void add_fit_common(CLI::App* cmd, FitCommon& f) {
  add_data(cmd, f.data, false);
  cmd->add_option("--var", f.var, "variable to model")->required();
  add_criteria(cmd, f.criteria);
  cmd->add_flag("--daily", f.daily, "aggregate hourly data to daily means first");
  cmd->add_option("--registry", f.registry, "registry root (default $CLIMGEN_REGISTRY or ./registry)");
  cmd->add_option("--plotdata", f.plotdata, "directory for plot data");
  cmd->add_option("--alpha", f.alpha, "significance level")->default_val(0.05)->check(CLI::Range(1e-6, 0.999999));
}

struct FitDistArgs {
  FitCommon f;
  std::string law = "weibull";
  double kt_max = 0.0;
  std::size_t gof_bins = 10;
};

int run_fit_dist(const FitDistArgs& a) {
  const auto d = load(a.f.data);
  const auto v = variable_arg(a.f.var);
  const auto c = build_criteria(a.f.criteria);
  const auto sel = select(series_of(d, v, a.f.daily), c, companions_for(d, c, a.f.daily));
  const auto values = sel.present();
  if (values.empty()) throw Error("no data for " + std::string(to_string(v)) + " in " + c.period());
  DistributionModel m{v, sel.cadence, GaussianParams{}, c};
  nlohmann::json diag;
  if (a.law == "weibull") {
    const auto fit = weibull_fit(sel);
    m.law = fit.params;
    std::cout << "weibull: k = " << num(fit.params.k) << ", c = " << num(fit.params.c) << " (n = " << fit.n
              << ", calms excluded " << num(fit.zero_fraction * 100.0) << "%)\n";
    if (fit.small_sample) std::cout << "warning: fewer than 30 positive values\n";
    diag["zero_fraction"] = fit.zero_fraction;
  } else if (a.law == "saunier") {
    const auto p = saunier_fit(sel, a.kt_max > 0.0 ? std::optional<double>(a.kt_max) : std::nullopt);
    m.law = p;
    std::cout << "saunier: gamma1 = " << num(p.gamma1) << ", C1 = " << num(p.c1) << ", x_moy = " << num(p.x_moy)
              << ", Kt_moy = " << num(p.kt_moy) << ", Kt_max = " << num(p.kt_max) << "\n";
  } else if (a.law == "gaussian") {
    const auto p = gaussian_fit(sel);
    m.law = p;
    std::cout << "gaussian: mu = " << num(p.mu) << ", sigma = " << num(p.sigma) << "\n";
  } else {
    throw UsageError("unknown law '" + a.law + "' (weibull, saunier or gaussian)");
  }
  try {
    const auto gof = chi2_gof(values, m.law, a.gof_bins, a.f.alpha);
    std::cout << "chi-square: " << num(gof.statistic) << " on " << gof.dof << " dof, p = " << num(gof.p_value)
              << (gof.pass ? " (pass)" : " (reject)") << " at alpha " << num(a.f.alpha) << "\n";
    diag["chi2"] = {{"statistic", gof.statistic}, {"dof", gof.dof}, {"p_value", gof.p_value}, {"pass", gof.pass}};
    if (!a.f.plotdata.empty()) {
      std::ostringstream out;
      out << "lo,hi,observed,expected\n";
      for (const auto& b : gof.bins)
        out << num(b.lo) << ',' << num(b.hi) << ',' << num(b.observed) << ',' << num(b.expected) << '\n';
      write_text(fs::path(a.f.plotdata) / (std::string(to_string(v)) + "_gof.csv"), out.str());
    }
  } catch (const Error& ex) {
    std::cout << "chi-square: not computed (" << ex.what() << ")\n";
  }
  diag["n"] = values.size();
  store(open_registry(a.f.registry), m, data_span(sel), diag);
  return 0;
}

struct FitCorrArgs {
  FitCommon f;
  std::string predictors;
  std::string templ = "poly1";
  std::size_t surface_bins = 0;
};

int run_fit_corr(const FitCorrArgs& a) {
  const auto d = load(a.f.data);
  const auto v = variable_arg(a.f.var);
  const auto c = build_criteria(a.f.criteria);
  const auto preds = variable_list(a.predictors);
  std::vector<ClimateSeries> pred_series;
  for (auto p : preds) pred_series.push_back(series_of(d, p, a.f.daily));
  const auto response = series_of(d, v, a.f.daily);
  const auto comps = companions_for(d, c, a.f.daily);
  const auto m = fit_correlation(a.templ, response, pred_series, c, comps);
  const auto sig = significance(m, a.f.alpha);
  std::vector<std::string> names;
  for (auto p : preds) names.emplace_back(to_string(p));
  const auto tpl = m.regression_template();
  std::cout << "template: " << m.template_id << "\n"
            << "response: " << to_string(v) << " ~ " << a.predictors << " (n = " << m.diagnostics.n << ")\n";
  std::cout << std::left << std::setw(28) << "term" << std::setw(16) << "coefficient" << std::setw(14) << "std_error"
            << std::setw(12) << "t" << "p\n";
  for (std::size_t i = 0; i < m.coefficients.size(); ++i) {
    std::cout << std::setw(28) << tpl.terms[i].label(names) << std::setw(16) << num(m.coefficients[i]);
    if (sig.testable)
      std::cout << std::setw(14) << num(m.diagnostics.std_errors[i]) << std::setw(12)
                << num(m.diagnostics.t_statistics[i]) << num(sig.t_p_values[i]) << (sig.t_pass[i] ? "" : " (n.s.)");
    std::cout << "\n";
  }
  std::cout << std::right << "R2: " << num(m.diagnostics.r2) << "\n"
            << "residual std: " << num(m.diagnostics.residual_std) << "\n";
  if (sig.testable)
    std::cout << "F: " << num(m.diagnostics.f_statistic) << ", p = " << num(sig.f_p_value)
              << (sig.f_pass ? " (significant)" : " (not significant)") << " at alpha " << num(a.f.alpha) << "\n";
  else
    std::cout << "F and t tests: not testable (no residual degrees of freedom)\n";
  if (m.diagnostics.low_dof) std::cout << "warning: fewer than parameter count + 2 samples\n";
  if (a.surface_bins > 0) {
    std::vector<std::vector<double>> edges;
    for (const auto& [lo, hi] : m.predictor_ranges) {
      std::vector<double> e;
      for (std::size_t k = 0; k <= a.surface_bins; ++k)
        e.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(a.surface_bins));
      e.back() = std::nextafter(hi, std::numeric_limits<double>::infinity());
      edges.push_back(std::move(e));
    }
    const auto surface = error_surface(m, edges);
    if (a.f.plotdata.empty())
      std::cout << "error surface (mean relative error %):\n" << surface.to_csv();
    else
      write_text(fs::path(a.f.plotdata) / (std::string(to_string(v)) + "_error_surface.csv"), surface.to_csv());
  }
  nlohmann::json diag{{"r2", m.diagnostics.r2},
                      {"f_statistic", json_number(m.diagnostics.f_statistic)},
                      {"f_p_value", sig.f_p_value},
                      {"residual_std", m.diagnostics.residual_std},
                      {"n", m.diagnostics.n}};
  store(open_registry(a.f.registry), m, data_span(response), diag);
  return 0;
}

struct FitArmaArgs {
  FitCommon f;
  int p = -1;
  int q = -1;
  std::size_t max_lag = 20;
  std::string profile;
};

int run_fit_arma(const FitArmaArgs& a) {
  const auto d = load(a.f.data);
  const auto v = variable_arg(a.f.var);
  const auto c = build_criteria(a.f.criteria);
  std::size_t dropped = 0;
  const auto sel = compact(select(series_of(d, v, a.f.daily), c, companions_for(d, c, a.f.daily)), &dropped);
  if (sel.size() < 10) throw Error("too few values for an ARMA fit (" + std::to_string(sel.size()) + ")");
  if (dropped > 0) std::cout << "note: " << dropped << " missing values skipped\n";
  const ProfileKind kind = !a.profile.empty() ? parse_profile_kind(a.profile)
                           : sel.cadence == Cadence::hourly ? ProfileKind::hour_of_day
                                                            : ProfileKind::day_of_year;
  const auto z = standardize(SeasonalProfile::fit(sel, kind), sel);
  const auto acf = acf_pacf(z, a.max_lag);
  const auto id = identify(acf);
  std::cout << "standardization: " << to_string(kind) << " profile, N = " << acf.n << "\n";
  if (acf.short_series) std::cout << "warning: N < 4L, correlograms are unreliable\n";
  std::cout << "lag  acf        bartlett   pacf       quenouille\n";
  for (std::size_t k = 1; k <= acf.max_lag(); ++k) {
    std::cout << std::left << std::setw(5) << k << std::setw(11) << num(std::round(acf.r[k] * 1e4) / 1e4)
              << std::setw(11) << num(std::round(acf.bartlett[k] * 1e4) / 1e4) << std::setw(11)
              << num(std::round(acf.pacf[k] * 1e4) / 1e4) << num(std::round(acf.quenouille_bound * 1e4) / 1e4)
              << (std::abs(acf.r[k]) > acf.bartlett[k] ? " acf*" : "")
              << (std::abs(acf.pacf[k]) > acf.quenouille_bound ? " pacf*" : "") << "\n";
  }
  std::cout << std::right;
  if (id.white_noise)
    std::cout << "identified: white noise\n";
  else
    std::cout << "identified: " << to_string(id.kind) << "(" << (id.kind == ArmaKind::ma ? id.q : id.p)
              << (id.kind == ArmaKind::arma ? "," + std::to_string(id.q) : "") << ")\n";
  const int p = a.p >= 0 ? a.p : id.p;
  const int q = a.q >= 0 ? a.q : id.q;
  if (a.p >= 0 || a.q >= 0) std::cout << "orders from the command line: p = " << p << ", q = " << q << "\n";
  auto m = estimate(sel, p, q, kind);
  m.criteria = c;
  const auto diag = diagnose(m, sel);
  for (int i = 0; i < m.p; ++i) std::cout << "phi" << i + 1 << " = " << num(m.phi[i]) << "\n";
  for (int i = 0; i < m.q; ++i) std::cout << "theta" << i + 1 << " = " << num(m.theta[i]) << "\n";
  std::cout << "noise sigma = " << num(m.noise_sigma) << (m.projected ? " (roots reflected into the unit disc)" : "")
            << "\n";
  std::cout << "residual ACF: " << diag.exceedances << " of " << kDiagnoseLags << " lags outside the band (allowed "
            << diag.allowed << ") -> " << (diag.pass ? "adequate" : "inadequate") << "\n"
            << "Ljung-Box Q = " << num(diag.ljung_box) << " on " << diag.ljung_box_dof << " dof, p = "
            << num(diag.ljung_box_p) << "\n";
  if (!a.f.plotdata.empty()) {
    std::ostringstream out;
    out << "lag,acf,bartlett,pacf,quenouille\n";
    for (std::size_t k = 0; k <= acf.max_lag(); ++k)
      out << k << ',' << num(acf.r[k]) << ',' << num(acf.bartlett[k]) << ',' << num(acf.pacf[k]) << ','
          << num(acf.quenouille_bound) << '\n';
    write_text(fs::path(a.f.plotdata) / (std::string(to_string(v)) + "_correlogram.csv"), out.str());
  }
  nlohmann::json dj{{"identified", id.white_noise ? "white noise" : std::string(to_string(id.kind))},
                    {"exceedances", diag.exceedances},
                    {"adequate", diag.pass},
                    {"ljung_box", diag.ljung_box},
                    {"ljung_box_p", diag.ljung_box_p},
                    {"n", m.n}};
  store(open_registry(a.f.registry), m, data_span(sel), dj);
  return 0;
}

struct FitNnArgs {
  FitCommon f;
  std::string inputs;
  std::size_t hidden = 3;
  int max_iter = 200;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string hidden_range = "1..8";
};

AlignedSamples nn_samples(const FitNnArgs& a, const Loaded& d, Variable v, const SelectionCriteria& c,
                          std::vector<Variable>& inputs, std::string* span) {
  inputs = variable_list(a.inputs);
  std::vector<ClimateSeries> in_series;
  for (auto in : inputs) in_series.push_back(series_of(d, in, a.f.daily));
  const auto out = series_of(d, v, a.f.daily);
  *span = data_span(out);
  auto s = align_samples(out, in_series, c, companions_for(d, c, a.f.daily));
  if (s.y.empty()) throw Error("no complete samples for " + std::string(to_string(v)) + " in " + c.period());
  return s;
}

int run_fit_nn(const FitNnArgs& a) {
  const auto d = load(a.f.data);
  const auto v = variable_arg(a.f.var);
  const auto c = build_criteria(a.f.criteria);
  std::vector<Variable> inputs;
  std::string span;
  const auto s = nn_samples(a, d, v, c, inputs, &span);
  const auto seed = resolve_seed(a.seed_opt, a.seed);
  auto m = train_lm(s.x, s.y, TrainOptions{a.hidden, seed, a.max_iter});
  m.inputs = inputs;
  m.output = v;
  m.criteria = c;
  const auto& r = m.report;
  std::cout << "network: " << inputs.size() << " inputs, " << m.n_hidden << " hidden tanh units, "
            << m.weights.size() << " weights, " << s.y.size() << " samples\n"
            << "eqm: " << num(r.eqm_history.front()) << " -> " << num(r.eqm_history.back()) << " after "
            << r.iterations << " accepted steps (" << r.rejected_steps << " rejected, stop: " << r.stop_reason
            << ", lambda " << num(r.final_lambda) << ")\n";
  if (r.few_samples) std::cout << "warning: fewer than 10 samples per weight\n";
  if (!a.f.plotdata.empty()) {
    std::ostringstream out;
    out << "step,eqm\n";
    for (std::size_t i = 0; i < r.eqm_history.size(); ++i) out << i << ',' << num(r.eqm_history[i]) << '\n';
    write_text(fs::path(a.f.plotdata) / (std::string(to_string(v)) + "_eqm.csv"), out.str());
  }
  nlohmann::json diag{{"eqm", r.eqm_history.back()}, {"stop_reason", r.stop_reason}, {"seed", seed}, {"n", s.y.size()}};
  store(open_registry(a.f.registry), m, span, diag);
  return 0;
}

int run_sweep_nn(const FitNnArgs& a) {
  const auto d = load(a.f.data);
  const auto v = variable_arg(a.f.var);
  const auto c = build_criteria(a.f.criteria);
  const auto [lo, hi] = int_range(a.hidden_range, "hidden range");
  if (lo < 0 || hi < lo) throw UsageError("bad hidden range '" + a.hidden_range + "'");
  std::vector<Variable> inputs;
  std::string span;
  const auto s = nn_samples(a, d, v, c, inputs, &span);
  const auto seed = resolve_seed(a.seed_opt, a.seed);
  TrainOptions opt;
  opt.seed = seed;
  opt.max_iter = a.max_iter;
  auto sweep = sweep_hidden(s.x, s.y, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), opt);
  std::ostringstream table;
  table << "n_hidden,train_eqm,validation_eqm\n";
  for (const auto& row : sweep.rows)
    table << row.n_hidden << ',' << num(row.train_eqm) << ',' << num(row.validation_eqm) << '\n';
  std::cout << table.str() << "best: " << sweep.rows[sweep.best].n_hidden << " hidden units\n";
  if (!a.f.plotdata.empty())
    write_text(fs::path(a.f.plotdata) / (std::string(to_string(v)) + "_sweep.csv"), table.str());
  auto& m = sweep.model;
  m.inputs = inputs;
  m.output = v;
  m.criteria = c;
  nlohmann::json diag{{"validation_eqm", sweep.rows[sweep.best].validation_eqm}, {"seed", seed}, {"n", s.y.size()}};
  store(open_registry(a.f.registry), m, span, diag);
  return 0;
}

struct GenerateArgs {
  std::string plan;
  std::string registry;
  std::string out = "sequence.csv";
  std::string format = "csv";
  std::string reference;
  bool rejection = false;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_generate(const GenerateArgs& a) {
  auto plan = load_plan(a.plan);
  if (a.seed_opt->count() > 0) {
    plan.seed = a.seed;
    plan.seed_given = true;
  } else if (!plan.seed_given) {
    plan.seed = resolve_seed(a.seed_opt, 0);
    plan.seed_given = true;
  }
  if (a.threads > 0) plan.options.threads = a.threads;
  if (a.rejection) plan.options.rejection = true;
  std::optional<WeatherTable> reference;
  if (!a.reference.empty()) reference = ingest_csv(a.reference).table();
  if (plan.options.rejection && !reference) throw UsageError("rejection sampling needs --reference");
  const auto registry = open_registry(a.registry);
  const auto seq = generate(plan, registry, reference ? &*reference : nullptr);
  for (const auto& line : seq.decisions) std::cout << "model " << line << "\n";
  std::cout << "rows: " << seq.table.rows() << ", variables: " << seq.table.columns.size()
            << ", coherence repairs: " << seq.coherence.total() << "\n";
  if (plan.options.rejection) std::cout << "attempts: " << seq.attempts << "\n";
  for (const auto& path : export_sequence(seq, parse_export_format(a.format), a.out))
    std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct ValidateArgs {
  std::string generated;
  std::string reference;
  std::string json_out;
  std::string site;
  double alpha = 0.05;
  double tol = 0.25;
  std::size_t ks_block = 0;
  std::size_t permutations = 999;
  std::uint64_t seed = 1;
  CLI::Option* seed_opt = nullptr;
};

int run_validate(const ValidateArgs& a) {
  const auto gen = load(DataArgs{a.generated, a.site, -999.0});
  const auto ref = ingest_csv(a.reference);
  ReportOptions opt;
  opt.alpha = a.alpha;
  opt.tol_mean = a.tol;
  opt.tol_std = a.tol;
  opt.site = gen.site;
  if (!opt.site && ref.has_site) opt.site = ref.site;
  opt.ks_block = a.ks_block;
  opt.permutations = a.permutations;
  if (a.ks_block > 0) opt.seed = resolve_seed(a.seed_opt, a.seed);
  const auto report = full_report(gen.data.table(), ref.table(), opt);
  std::cout << report.to_text();
  if (!a.json_out.empty()) write_text(a.json_out, report.to_json().dump(2) + "\n");
  return report.pass ? 0 : kExitValidation;
}

struct ExportArgs {
  std::string input;
  std::string format = "csv";
  std::string out;
};

int run_export(const ExportArgs& a) {
  const auto ds = ingest_csv(a.input);
  GeneratedSequence seq;
  seq.table = ds.table();
  seq.provenance = ds.comments;
  for (const auto& path : export_sequence(seq, parse_export_format(a.format), a.out))
    std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int run_models(const std::string& root) {
  const auto reg = open_registry(root);
  const auto entries = reg.list();
  if (entries.empty()) std::cout << "registry " << reg.root().string() << " is empty\n";
  for (const auto& e : entries)
    std::cout << e.key.id() << "  " << e.provenance.fit_date << "  " << e.provenance.data_span << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"climgen: climate series characterisation, model fitting and sequence generation"};
  app.set_version_flag("--version", std::string(software_version()));
  app.require_subcommand(1);
  std::function<int()> action;

  DescribeArgs describe_args;
  auto* describe_cmd = app.add_subcommand("describe", "summary statistics and histogram of one variable");
  add_data(describe_cmd, describe_args.data, true);
  describe_cmd->add_option("--var", describe_args.var, "variable")->required();
  add_criteria(describe_cmd, describe_args.criteria);
  describe_cmd->add_flag("--daily", describe_args.daily, "aggregate hourly data to daily means first");
  describe_cmd->add_option("--width", describe_args.width, "histogram bin width");
  describe_cmd->add_option("--plotdata", describe_args.plotdata, "directory for histogram and series CSV");
  describe_cmd->callback([&] { action = [&] { return run_describe(describe_args); }; });

  BinsArgs bins_args;
  auto* bins_cmd = app.add_subcommand("bins", "bin table (hours per value interval)");
  add_data(bins_cmd, bins_args.data, true);
  bins_cmd->add_option("--var", bins_args.var, "variable")->required();
  add_criteria(bins_cmd, bins_args.criteria);
  bins_cmd->add_flag("--daily", bins_args.daily, "aggregate hourly data to daily means first");
  bins_cmd->add_option("--width", bins_args.width, "bin width (default per variable)");
  bins_cmd->add_option("--out", bins_args.out, "output CSV (default stdout)");
  bins_cmd->callback([&] { action = [&] { return run_bins(bins_args); }; });

  auto* fit_cmd = app.add_subcommand("fit", "fit a model and store it in the registry");
  fit_cmd->require_subcommand(1);

  FitDistArgs dist_args;
  auto* dist_cmd = fit_cmd->add_subcommand("dist", "distribution law (weibull, saunier, gaussian)");
  add_fit_common(dist_cmd, dist_args.f);
  dist_cmd->add_option("--law", dist_args.law, "weibull, saunier or gaussian")->default_val("weibull");
  dist_cmd->add_option("--kt-max", dist_args.kt_max, "Kt_max for the saunier law (default 98th percentile)");
  dist_cmd->add_option("--gof-bins", dist_args.gof_bins, "chi-square bins")->default_val(10);
  dist_cmd->callback([&] { action = [&] { return run_fit_dist(dist_args); }; });

  FitCorrArgs corr_args;
  auto* corr_cmd = fit_cmd->add_subcommand("corr", "regression correlation");
  add_fit_common(corr_cmd, corr_args.f);
  corr_cmd->add_option("--predictors", corr_args.predictors, "comma-separated predictors")->required();
  corr_cmd->add_option("--template", corr_args.templ, "template id or custom:<terms>")->default_val("poly1");
  corr_cmd->add_option("--surface-bins", corr_args.surface_bins, "bins per predictor for the error surface");
  corr_cmd->callback([&] { action = [&] { return run_fit_corr(corr_args); }; });

  FitArmaArgs arma_args;
  auto* arma_cmd = fit_cmd->add_subcommand("arma", "ARMA model after seasonal standardization");
  add_fit_common(arma_cmd, arma_args.f);
  arma_cmd->add_option("--p", arma_args.p, "AR order (default identified)");
  arma_cmd->add_option("--q", arma_args.q, "MA order (default identified)");
  arma_cmd->add_option("--max-lag", arma_args.max_lag, "correlogram lags")->default_val(20);
  arma_cmd->add_option("--profile", arma_args.profile, "flat, hour_of_day or day_of_year");
  arma_cmd->callback([&] { action = [&] { return run_fit_arma(arma_args); }; });

  FitNnArgs nn_args;
  auto* nn_cmd = fit_cmd->add_subcommand("nn", "one-hidden-layer network trained by Levenberg-Marquardt");
  add_fit_common(nn_cmd, nn_args.f);
  nn_cmd->add_option("--inputs", nn_args.inputs, "comma-separated input variables")->required();
  nn_cmd->add_option("--hidden", nn_args.hidden, "hidden units")->default_val(3);
  nn_cmd->add_option("--max-iter", nn_args.max_iter, "iteration cap")->default_val(200);
  nn_args.seed_opt = nn_cmd->add_option("--seed", nn_args.seed, "weight initialisation seed");
  nn_cmd->callback([&] { action = [&] { return run_fit_nn(nn_args); }; });

  auto* sweep_cmd = app.add_subcommand("sweep", "model-size sweeps");
  sweep_cmd->require_subcommand(1);
  FitNnArgs sweep_args;
  auto* sweep_nn_cmd = sweep_cmd->add_subcommand("nn", "validation eqm per hidden-layer size; stores the best");
  add_fit_common(sweep_nn_cmd, sweep_args.f);
  sweep_nn_cmd->add_option("--inputs", sweep_args.inputs, "comma-separated input variables")->required();
  sweep_nn_cmd->add_option("--hidden", sweep_args.hidden_range, "hidden-unit range, e.g. 1..8")->default_val("1..8");
  sweep_nn_cmd->add_option("--max-iter", sweep_args.max_iter, "iteration cap")->default_val(200);
  sweep_args.seed_opt = sweep_nn_cmd->add_option("--seed", sweep_args.seed, "split and initialisation seed");
  sweep_nn_cmd->callback([&] { action = [&] { return run_sweep_nn(sweep_args); }; });

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "synthesize a sequence from a plan and the registry");
  gen_cmd->add_option("--plan", gen_args.plan, "plan JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--registry", gen_args.registry, "registry root (default $CLIMGEN_REGISTRY or ./registry)");
  gen_cmd->add_option("--out", gen_args.out, "output CSV, or directory for plotdata")->default_val("sequence.csv");
  gen_cmd->add_option("--format", gen_args.format, "csv or plotdata")->default_val("csv");
  gen_cmd->add_option("--reference", gen_args.reference, "reference CSV for rejection sampling");
  gen_cmd->add_flag("--rejection", gen_args.rejection, "regenerate until the KS gate passes");
  gen_cmd->add_option("--threads", gen_args.threads, "worker threads (output does not depend on it)");
  gen_args.seed_opt = gen_cmd->add_option("--seed", gen_args.seed, "seed (overrides the plan)");
  gen_cmd->callback([&] { action = [&] { return run_generate(gen_args); }; });

  ValidateArgs val_args;
  auto* val_cmd = app.add_subcommand("validate", "compare a generated sequence with reference data");
  val_cmd->add_option("--generated", val_args.generated, "generated CSV")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--reference", val_args.reference, "reference CSV")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--json", val_args.json_out, "write the report as JSON");
  val_cmd->add_option("--site", val_args.site, "site JSON");
  val_cmd->add_option("--alpha", val_args.alpha, "KS significance level")->default_val(0.05)->check(CLI::Range(1e-6, 0.999999));
  val_cmd->add_option("--tolerance", val_args.tol, "monthly mean/std tolerance in reference std units")->default_val(0.25);
  val_cmd->add_option("--ks-block", val_args.ks_block, "block length for a permutation KS (0: asymptotic)")->default_val(0);
  val_cmd->add_option("--permutations", val_args.permutations, "permutations for the block KS")->default_val(999);
  val_args.seed_opt = val_cmd->add_option("--seed", val_args.seed, "permutation seed");
  val_cmd->callback([&] { action = [&] { return run_validate(val_args); }; });

  ExportArgs exp_args;
  auto* exp_cmd = app.add_subcommand("export", "convert a sequence CSV to csv or plotdata");
  exp_cmd->add_option("--input", exp_args.input, "sequence CSV")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--format", exp_args.format, "csv or plotdata")->default_val("csv");
  exp_cmd->add_option("--out", exp_args.out, "output file or directory")->required();
  exp_cmd->callback([&] { action = [&] { return run_export(exp_args); }; });

  std::string models_root;
  auto* models_cmd = app.add_subcommand("models", "list registry entries");
  models_cmd->add_option("--registry", models_root, "registry root (default $CLIMGEN_REGISTRY or ./registry)");
  models_cmd->callback([&] { action = [&] { return run_models(models_root); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    return action ? action() : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
