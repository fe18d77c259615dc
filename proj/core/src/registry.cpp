#include "climgen/registry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "climgen/error.hpp"

#ifndef CLIMGEN_VERSION
#define CLIMGEN_VERSION "0.0.0"
#endif

namespace climgen {

using nlohmann::json;

std::string_view software_version() { return CLIMGEN_VERSION; }

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::weibull: return "weibull";
    case ModelKind::saunier: return "saunier";
    case ModelKind::gaussian: return "gaussian";
    case ModelKind::liu_jordan: return "liu_jordan";
    case ModelKind::arma: return "arma";
    case ModelKind::correlation: return "correlation";
    case ModelKind::neural: return "neural";
  }
  return "arma";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::weibull, ModelKind::saunier, ModelKind::gaussian, ModelKind::liu_jordan, ModelKind::arma,
                 ModelKind::correlation, ModelKind::neural})
    if (to_string(k) == name) return k;
  throw Error("unknown model kind '" + std::string(name) + "'");
}

ModelKind kind_of(const FittedModel& m) {
  if (const auto* d = std::get_if<DistributionModel>(&m)) {
    if (std::holds_alternative<WeibullParams>(d->law)) return ModelKind::weibull;
    if (std::holds_alternative<SaunierParams>(d->law)) return ModelKind::saunier;
    return ModelKind::gaussian;
  }
  if (std::holds_alternative<ArmaModel>(m)) return ModelKind::arma;
  if (std::holds_alternative<CorrelationModel>(m)) return ModelKind::correlation;
  return ModelKind::neural;
}

Variable variable_of(const FittedModel& m) {
  return std::visit(
      [](const auto& x) -> Variable {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CorrelationModel>) return x.response;
        else if constexpr (std::is_same_v<T, NeuralModel>) return x.output;
        else return x.variable;
      },
      m);
}

const SelectionCriteria& criteria_of(const FittedModel& m) {
  return std::visit([](const auto& x) -> const SelectionCriteria& { return x.criteria; }, m);
}

std::vector<Variable> inputs_of(const FittedModel& m) {
  if (const auto* c = std::get_if<CorrelationModel>(&m)) return c->predictors;
  if (const auto* n = std::get_if<NeuralModel>(&m)) return n->inputs;
  return {};
}

ModelKey ModelKey::of(const FittedModel& m) {
  const auto& c = criteria_of(m);
  return ModelKey{variable_of(m), c.period(), c.digest(), kind_of(m)};
}

std::string ModelKey::id() const {
  return std::string(to_string(variable)) + "__" + period + "__" + digest + "__" + std::string(to_string(kind));
}

ModelKey ModelKey::parse(std::string_view id) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = id.find("__", start);
    parts.emplace_back(id.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 2;
  }
  if (parts.size() != 4) throw Error("malformed model id '" + std::string(id) + "'");
  const auto v = parse_variable(parts[0]);
  if (!v) throw Error("malformed model id '" + std::string(id) + "': unknown variable");
  return ModelKey{*v, parts[1], parts[2], parse_model_kind(parts[3])};
}

std::string utc_now_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- JSON helpers -----------------------------------------------------------

json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

namespace {

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

std::vector<double> numbers_from(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from_json(x));
  return out;
}

Variable variable_from(const json& j) {
  const auto name = j.get<std::string>();
  const auto v = parse_variable(name);
  if (!v) throw Error("unknown variable '" + name + "'");
  return *v;
}

json variables(const std::vector<Variable>& v) {
  json out = json::array();
  for (auto x : v) out.push_back(std::string(to_string(x)));
  return out;
}

std::vector<Variable> variables_from(const json& j) {
  std::vector<Variable> out;
  for (const auto& x : j) out.push_back(variable_from(x));
  return out;
}

Cadence cadence_from(const json& j) {
  const auto name = j.get<std::string>();
  const auto c = parse_cadence(name);
  if (!c) throw Error("unknown cadence '" + name + "'");
  return *c;
}

}  // namespace

json to_json(const SiteMeta& s) {
  return json{{"name", s.name},           {"latitude", s.latitude}, {"longitude", s.longitude},
              {"altitude", s.altitude}, {"utc_offset", s.utc_offset}};
}

SiteMeta site_from_json(const json& j) {
  SiteMeta s;
  s.name = j.value("name", s.name);
  s.latitude = j.at("latitude").get<double>();
  s.longitude = j.at("longitude").get<double>();
  s.altitude = j.value("altitude", 0.0);
  s.utc_offset = j.value("utc_offset", 0.0);
  s.validate();
  return s;
}

json to_json(const SelectionCriteria& c) {
  json j;
  j["months"] = std::vector<int>(c.months.begin(), c.months.end());
  if (c.hour_range) j["hour_range"] = {c.hour_range->first, c.hour_range->second};
  else j["hour_range"] = nullptr;
  json preds = json::array();
  for (const auto& p : c.predicates)
    preds.push_back({{"variable", std::string(to_string(p.variable))}, {"lo", json_number(p.range.lo)}, {"hi", json_number(p.range.hi)}});
  j["predicates"] = preds;
  return j;
}

SelectionCriteria criteria_from_json(const json& j) {
  SelectionCriteria c;
  if (j.contains("months")) {
    const auto m = j.at("months").get<std::vector<int>>();
    c.months = std::set<int>(m.begin(), m.end());
  }
  if (j.contains("hour_range") && !j.at("hour_range").is_null()) {
    const auto& h = j.at("hour_range");
    c.hour_range = std::pair{h.at(0).get<int>(), h.at(1).get<int>()};
  }
  if (j.contains("predicates"))
    for (const auto& p : j.at("predicates"))
      c.predicates.push_back(
          {variable_from(p.at("variable")), Interval{number_from_json(p.at("lo")), number_from_json(p.at("hi"))}});
  c.validate();
  return c;
}

json to_json(const Distribution& d) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, WeibullParams>) return {{"law", "weibull"}, {"k", p.k}, {"c", p.c}};
        else if constexpr (std::is_same_v<T, SaunierParams>)
          return {{"law", "saunier"}, {"gamma1", p.gamma1}, {"c1", p.c1},         {"x_moy", p.x_moy},
                  {"kt_moy", p.kt_moy}, {"kt_max", p.kt_max}};
        else return {{"law", "gaussian"}, {"mu", p.mu}, {"sigma", p.sigma}};
      },
      d);
}

Distribution distribution_from_json(const json& j) {
  const auto law = j.at("law").get<std::string>();
  if (law == "weibull") return WeibullParams{j.at("k").get<double>(), j.at("c").get<double>()};
  if (law == "saunier")
    return SaunierParams{j.at("gamma1").get<double>(), j.at("c1").get<double>(), j.at("x_moy").get<double>(),
                         j.at("kt_moy").get<double>(), j.at("kt_max").get<double>()};
  if (law == "gaussian") return GaussianParams{j.at("mu").get<double>(), j.at("sigma").get<double>()};
  throw Error("unknown law '" + law + "'");
}

json to_json(const SeasonalProfile& p) {
  return {{"kind", std::string(to_string(p.kind))}, {"mean", numbers(p.mean)}, {"std", numbers(p.std)}};
}

SeasonalProfile profile_from_json(const json& j) {
  SeasonalProfile p{parse_profile_kind(j.at("kind").get<std::string>()), numbers_from(j.at("mean")),
                    numbers_from(j.at("std"))};
  const std::size_t slots = p.kind == ProfileKind::flat ? 1 : p.kind == ProfileKind::hour_of_day ? 24 : 366;
  if (p.mean.size() != slots || p.std.size() != slots) throw Error("profile: wrong slot count");
  return p;
}

json to_json(const FittedModel& model) {
  json j;
  j["kind"] = std::string(to_string(kind_of(model)));
  j["variable"] = std::string(to_string(variable_of(model)));
  j["criteria"] = to_json(criteria_of(model));
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DistributionModel>) {
          j["cadence"] = std::string(to_string(m.cadence));
          j["parameters"] = to_json(m.law);
        } else if constexpr (std::is_same_v<T, ArmaModel>) {
          j["cadence"] = std::string(to_string(m.cadence));
          j["p"] = m.p;
          j["q"] = m.q;
          j["phi"] = numbers(m.phi);
          j["theta"] = numbers(m.theta);
          j["noise_sigma"] = m.noise_sigma;
          j["profile"] = to_json(m.profile);
          j["standardized"] = true;
          j["clip"] = m.clip;
          j["n"] = m.n;
          j["projected"] = m.projected;
          j["iterations"] = m.iterations;
        } else if constexpr (std::is_same_v<T, CorrelationModel>) {
          j["template"] = m.template_id;
          j["predictors"] = variables(m.predictors);
          j["coefficients"] = numbers(m.coefficients);
          const auto& d = m.diagnostics;
          j["diagnostics"] = {{"r2", json_number(d.r2)},
                              {"f_statistic", json_number(d.f_statistic)},
                              {"t_statistics", numbers(d.t_statistics)},
                              {"std_errors", numbers(d.std_errors)},
                              {"residual_std", json_number(d.residual_std)},
                              {"n", d.n},
                              {"dof", d.dof},
                              {"low_dof", d.low_dof}};
          json ranges = json::array();
          for (const auto& [lo, hi] : m.predictor_ranges) ranges.push_back({lo, hi});
          j["predictor_ranges"] = ranges;
        } else {
          j["inputs"] = variables(m.inputs);
          j["n_hidden"] = m.n_hidden;
          j["weights"] = numbers(m.weights);
          j["input_mean"] = numbers(m.input_mean);
          j["input_std"] = numbers(m.input_std);
          j["output_mean"] = m.output_mean;
          j["output_std"] = m.output_std;
          j["residual_sigma"] = m.residual_sigma;
          j["training"] = {{"eqm_history", numbers(m.report.eqm_history)},
                           {"final_lambda", json_number(m.report.final_lambda)},
                           {"iterations", m.report.iterations},
                           {"rejected_steps", m.report.rejected_steps},
                           {"stop_reason", m.report.stop_reason},
                           {"few_samples", m.report.few_samples}};
        }
      },
      model);
  return j;
}

FittedModel model_from_json(const json& j) {
  const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
  const Variable var = variable_from(j.at("variable"));
  SelectionCriteria criteria = criteria_from_json(j.at("criteria"));
  switch (kind) {
    case ModelKind::weibull:
    case ModelKind::saunier:
    case ModelKind::gaussian: {
      DistributionModel m{var, cadence_from(j.at("cadence")), distribution_from_json(j.at("parameters")),
                          std::move(criteria)};
      return m;
    }
    case ModelKind::arma: {
      ArmaModel m;
      m.variable = var;
      m.criteria = std::move(criteria);
      m.cadence = cadence_from(j.at("cadence"));
      m.p = j.at("p").get<int>();
      m.q = j.at("q").get<int>();
      m.phi = numbers_from(j.at("phi"));
      m.theta = numbers_from(j.at("theta"));
      if (static_cast<int>(m.phi.size()) != m.p || static_cast<int>(m.theta.size()) != m.q)
        throw Error("arma model: coefficient counts do not match orders");
      m.noise_sigma = j.at("noise_sigma").get<double>();
      m.profile = profile_from_json(j.at("profile"));
      m.clip = j.value("clip", false);
      m.n = j.value("n", std::size_t{0});
      m.projected = j.value("projected", false);
      m.iterations = j.value("iterations", 0);
      return m;
    }
    case ModelKind::correlation: {
      CorrelationModel m;
      m.response = var;
      m.criteria = std::move(criteria);
      m.template_id = j.at("template").get<std::string>();
      m.predictors = variables_from(j.at("predictors"));
      m.coefficients = numbers_from(j.at("coefficients"));
      if (m.coefficients.size() != m.regression_template().parameter_count())
        throw Error("correlation model: coefficient count does not match the template");
      const auto& d = j.at("diagnostics");
      m.diagnostics.r2 = number_from_json(d.at("r2"));
      m.diagnostics.f_statistic = number_from_json(d.at("f_statistic"));
      m.diagnostics.t_statistics = numbers_from(d.at("t_statistics"));
      m.diagnostics.std_errors = numbers_from(d.at("std_errors"));
      m.diagnostics.residual_std = number_from_json(d.at("residual_std"));
      m.diagnostics.n = d.at("n").get<std::size_t>();
      m.diagnostics.dof = d.at("dof").get<std::size_t>();
      m.diagnostics.low_dof = d.at("low_dof").get<bool>();
      for (const auto& r : j.at("predictor_ranges"))
        m.predictor_ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
      return m;
    }
    case ModelKind::neural: {
      NeuralModel m;
      m.output = var;
      m.criteria = std::move(criteria);
      m.inputs = variables_from(j.at("inputs"));
      m.n_hidden = j.at("n_hidden").get<std::size_t>();
      m.weights = numbers_from(j.at("weights"));
      m.input_mean = numbers_from(j.at("input_mean"));
      m.input_std = numbers_from(j.at("input_std"));
      m.output_mean = j.at("output_mean").get<double>();
      m.output_std = j.at("output_std").get<double>();
      m.residual_sigma = j.value("residual_sigma", 0.0);
      if (m.input_mean.size() != m.inputs.size() || m.input_std.size() != m.inputs.size() ||
          m.weights.size() != NeuralModel::parameter_count(m.inputs.size(), m.n_hidden))
        throw Error("neural model: weight or scaler dimensions inconsistent with inputs");
      if (j.contains("training")) {
        const auto& t = j.at("training");
        m.report.eqm_history = numbers_from(t.at("eqm_history"));
        m.report.final_lambda = number_from_json(t.at("final_lambda"));
        m.report.iterations = t.at("iterations").get<int>();
        m.report.rejected_steps = t.value("rejected_steps", 0);
        m.report.stop_reason = t.value("stop_reason", "");
        m.report.few_samples = t.value("few_samples", false);
      }
      return m;
    }
    case ModelKind::liu_jordan:
      break;
  }
  throw Error("model kind '" + std::string(to_string(kind)) + "' is reserved and cannot be loaded");
}

json to_json(const RegistryEntry& e) {
  return {{"key", e.key.id()},
          {"model", to_json(e.model)},
          {"provenance",
           {{"fit_date", e.provenance.fit_date},
            {"data_span", e.provenance.data_span},
            {"software_version", e.provenance.software_version},
            {"diagnostics", e.provenance.diagnostics}}}};
}

RegistryEntry entry_from_json(const json& j) {
  RegistryEntry e{ModelKey::parse(j.at("key").get<std::string>()), model_from_json(j.at("model")), {}};
  if (!(ModelKey::of(e.model) == e.key)) throw Error("registry entry key does not match its model");
  const auto& p = j.at("provenance");
  e.provenance.fit_date = p.value("fit_date", "");
  e.provenance.data_span = p.value("data_span", "");
  e.provenance.software_version = p.value("software_version", "");
  e.provenance.diagnostics = p.value("diagnostics", json::object());
  return e;
}

// --- registry ---------------------------------------------------------------

ModelRegistry::ModelRegistry(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ModelRegistry::path_of(const ModelKey& key) const { return root_ / (key.id() + ".json"); }

ModelKey ModelRegistry::put(const FittedModel& model, Provenance provenance) {
  if (provenance.fit_date.empty()) provenance.fit_date = utc_now_iso8601();
  if (provenance.software_version.empty()) provenance.software_version = std::string(software_version());
  RegistryEntry e{ModelKey::of(model), model, std::move(provenance)};
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error("registry: cannot create " + root_.string() + ": " + ec.message());
  const auto path = path_of(e.key);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("registry: cannot write " + tmp.string());
    out << to_json(e).dump(2) << '\n';
    if (!out) throw Error("registry: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("registry: cannot replace " + path.string() + ": " + ec.message());
  return e.key;
}

std::optional<RegistryEntry> ModelRegistry::get(const ModelKey& key) const {
  const auto path = path_of(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("registry: cannot read " + path.string());
  try {
    return entry_from_json(json::parse(in));
  } catch (const json::exception& ex) {
    throw Error("registry: " + path.string() + ": " + ex.what());
  }
}

std::optional<RegistryEntry> ModelRegistry::get(std::string_view id) const { return get(ModelKey::parse(id)); }

RegistryEntry ModelRegistry::at(const ModelKey& key) const {
  auto e = get(key);
  if (!e) throw Error("registry: no entry " + key.id());
  return std::move(*e);
}

std::vector<RegistryEntry> ModelRegistry::list() const {
  std::vector<RegistryEntry> out;
  if (!std::filesystem::is_directory(root_)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(root_))
    if (de.is_regular_file() && de.path().extension() == ".json") files.push_back(de.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    try {
      out.push_back(entry_from_json(json::parse(in)));
    } catch (const json::exception& ex) {
      throw Error("registry: " + f.string() + ": " + ex.what());
    }
  }
  return out;
}

std::filesystem::path default_registry_root() {
  if (const char* env = std::getenv("CLIMGEN_REGISTRY"); env && *env) return env;
  return "registry";
}

}  // namespace climgen
