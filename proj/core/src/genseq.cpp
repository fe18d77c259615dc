#include "climgen/genseq.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "climgen/error.hpp"
#include "climgen/random.hpp"
#include "climgen/solargeo.hpp"
#include "climgen/validate.hpp"

namespace climgen {

using nlohmann::json;

// --- coherence --------------------------------------------------------------

std::size_t CoherenceReport::total() const {
  std::size_t n = 0;
  for (const auto& [rule, count] : repairs) n += count;
  return n;
}

double CoherenceReport::violation_rate() const {
  return rows == 0 ? 0.0 : static_cast<double>(rows_repaired) / static_cast<double>(rows);
}

namespace {

std::vector<double> extraterrestrial_column(const SiteMeta& site, std::span<const Timestamp> times, Cadence cadence) {
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = extraterrestrial(site, times[i], cadence);
  return out;
}

bool is_radiation(Variable v) {
  return v == Variable::global_rad || v == Variable::diffuse_rad || v == Variable::beam_rad ||
         v == Variable::insolation_hours;
}

double pressure_at(const WeatherTable& table, std::size_t i, const SiteMeta& site) {
  if (table.has(Variable::pressure)) {
    const auto& p = table.column(Variable::pressure)[i];
    if (p && *p > 0.0) return *p;
  }
  return standard_pressure(site.altitude);
}

}  // namespace

CoherenceReport enforce_coherence(WeatherTable& table, const SiteMeta& site) {
  CoherenceReport rep;
  const std::size_t n = table.rows();
  rep.rows = n;
  std::vector<char> touched(n, 0);
  auto fix = [&](const char* rule, std::size_t i, Value& cell, double value) {
    cell = value;
    ++rep.repairs[rule];
    touched[i] = 1;
  };
  auto col = [&](Variable v) -> std::vector<Value>* { return table.has(v) ? &table.column(v) : nullptr; };

  auto* global = col(Variable::global_rad);
  auto* diffuse = col(Variable::diffuse_rad);
  auto* beam = col(Variable::beam_rad);

  for (auto* c : {global, diffuse, beam})
    if (c)
      for (std::size_t i = 0; i < n; ++i)
        if ((*c)[i] && *(*c)[i] < 0.0) fix("radiation_nonnegative", i, (*c)[i], 0.0);

  if (global) {
    const auto i0 = extraterrestrial_column(site, table.times, table.cadence);
    for (std::size_t i = 0; i < n; ++i)
      if ((*global)[i] && *(*global)[i] > 0.0 && i0[i] <= 0.0) fix("night_global", i, (*global)[i], 0.0);
  }
  if (global && diffuse)
    for (std::size_t i = 0; i < n; ++i)
      if ((*global)[i] && (*diffuse)[i] && *(*diffuse)[i] > *(*global)[i])
        fix("diffuse_le_global", i, (*diffuse)[i], *(*global)[i]);
  if (global && diffuse && beam)
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*global)[i] || !(*diffuse)[i]) continue;
      const double expected = *(*global)[i] - *(*diffuse)[i];
      if (!(*beam)[i] || std::abs(*(*beam)[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
        fix("beam_balance", i, (*beam)[i], expected);
    }
  if (auto* rh = col(Variable::rel_humidity))
    for (std::size_t i = 0; i < n; ++i)
      if ((*rh)[i] && (*(*rh)[i] < 0.0 || *(*rh)[i] > 100.0))
        fix("humidity_range", i, (*rh)[i], std::clamp(*(*rh)[i], 0.0, 100.0));
  if (auto* w = col(Variable::wind_speed))
    for (std::size_t i = 0; i < n; ++i)
      if ((*w)[i] && *(*w)[i] < 0.0) fix("wind_nonnegative", i, (*w)[i], 0.0);
  if (auto* s = col(Variable::insolation_hours))
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*s)[i]) continue;
      const double cap =
          table.cadence == Cadence::hourly ? 1.0 : solar_day(site, table.times[i]).day_length_h;
      if (*(*s)[i] < 0.0 || *(*s)[i] > cap) fix("insolation_range", i, (*s)[i], std::clamp(*(*s)[i], 0.0, cap));
    }
  if (auto* c = col(Variable::nebulosity))
    for (std::size_t i = 0; i < n; ++i)
      if ((*c)[i] && (*(*c)[i] < 0.0 || *(*c)[i] > 8.0))
        fix("nebulosity_range", i, (*c)[i], std::clamp(*(*c)[i], 0.0, 8.0));
  if (auto* wb = col(Variable::wet_bulb_temp); wb && table.has(Variable::dry_bulb_temp)) {
    const auto& db = table.column(Variable::dry_bulb_temp);
    const auto* rh = col(Variable::rel_humidity);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*wb)[i] || !db[i] || *(*wb)[i] <= *db[i] + 1e-9) continue;
      const double value = rh && (*rh)[i]
                               ? wet_bulb(*db[i], std::clamp(*(*rh)[i], 0.0, 100.0), pressure_at(table, i, site))
                               : *db[i];
      fix("wet_bulb_le_dry_bulb", i, (*wb)[i], std::min(value, *db[i]));
    }
  }
  if (auto* kt = col(Variable::clearness_index))
    for (std::size_t i = 0; i < n; ++i)
      if ((*kt)[i] && (*(*kt)[i] < 0.0 || *(*kt)[i] > 1.0))
        fix("kt_range", i, (*kt)[i], std::clamp(*(*kt)[i], 0.0, 1.0));

  rep.rows_repaired = static_cast<std::size_t>(std::count(touched.begin(), touched.end(), 1));
  return rep;
}

void derive_variables(WeatherTable& table, const SiteMeta& site, bool with_sky) {
  if (!table.has(Variable::dry_bulb_temp) || !table.has(Variable::rel_humidity))
    throw Error("derive_variables: needs dry_bulb_temp and rel_humidity");
  const auto& db = table.column(Variable::dry_bulb_temp);
  const auto& rh = table.column(Variable::rel_humidity);
  const std::size_t n = table.rows();
  std::vector<Value> wb(n), sky;
  for (std::size_t i = 0; i < n; ++i)
    if (db[i] && rh[i]) wb[i] = wet_bulb(*db[i], std::clamp(*rh[i], 0.0, 100.0), pressure_at(table, i, site));
  if (with_sky) {
    sky.resize(n);
    const auto* neb = table.has(Variable::nebulosity) ? &table.column(Variable::nebulosity) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      if (!db[i] || !rh[i]) continue;
      std::optional<double> octas;
      if (neb && (*neb)[i]) octas = *(*neb)[i];
      sky[i] = sky_temperature(*db[i], std::clamp(*rh[i], 0.0, 100.0), octas);
    }
  }
  table.columns[Variable::wet_bulb_temp] = std::move(wb);
  if (with_sky) table.columns[Variable::sky_temp] = std::move(sky);
}

// --- plan -------------------------------------------------------------------

void GenerationPlan::validate() const {
  site.validate();
  criteria.validate();
  if (variables.empty()) throw Error("plan: no target variables");
  if (duration < 1) throw Error("plan: duration must be at least 1");
  if (options.threads < 1) throw Error("plan: threads must be at least 1");
  if (options.max_attempts < 1) throw Error("plan: max_attempts must be at least 1");
  if (!(options.max_violation_rate >= 0.0 && options.max_violation_rate <= 1.0))
    throw Error("plan: max_violation_rate must lie in [0, 1]");
}

GenerationPlan GenerationPlan::from_json(const json& j) {
  try {
    GenerationPlan plan;
    plan.site = site_from_json(j.at("site"));
    for (const auto& v : j.at("variables")) {
      const auto name = v.get<std::string>();
      const auto var = parse_variable(name);
      if (!var) throw Error("plan: unknown variable '" + name + "'");
      plan.variables.push_back(*var);
    }
    const auto start_text = j.at("start").get<std::string>();
    const auto start = parse_iso8601(start_text);
    if (!start) throw Error("plan: bad start '" + start_text + "'");
    plan.start = *start;
    if (j.contains("cadence")) {
      const auto name = j.at("cadence").get<std::string>();
      const auto c = parse_cadence(name);
      if (!c) throw Error("plan: unknown cadence '" + name + "'");
      plan.cadence = *c;
    }
    const auto amount = j.at("duration").get<long long>();
    if (amount < 1) throw Error("plan: duration must be at least 1");
    const auto unit = j.value("duration_unit", std::string("steps"));
    const auto count = static_cast<std::size_t>(amount);
    if (unit == "steps") plan.duration = count;
    else if (unit == "hours") plan.duration = plan.cadence == Cadence::hourly ? count : (count + 23) / 24;
    else if (unit == "days") plan.duration = plan.cadence == Cadence::hourly ? count * 24 : count;
    else throw Error("plan: duration_unit must be steps, hours or days");
    if (j.contains("criteria")) plan.criteria = criteria_from_json(j.at("criteria"));
    if (j.contains("seed") && !j.at("seed").is_null()) {
      plan.seed = j.at("seed").get<std::uint64_t>();
      plan.seed_given = true;
    }
    if (j.contains("overrides"))
      for (const auto& [name, id] : j.at("overrides").items()) {
        const auto var = parse_variable(name);
        if (!var) throw Error("plan: unknown override variable '" + name + "'");
        plan.overrides[*var] = id.get<std::string>();
      }
    if (j.contains("options")) {
      const auto& o = j.at("options");
      plan.options.residual_noise = o.value("residual_noise", plan.options.residual_noise);
      plan.options.sky_temperature = o.value("sky_temperature", plan.options.sky_temperature);
      plan.options.threads = o.value("threads", plan.options.threads);
      plan.options.rejection = o.value("rejection", plan.options.rejection);
      plan.options.max_attempts = o.value("max_attempts", plan.options.max_attempts);
      plan.options.max_violation_rate = o.value("max_violation_rate", plan.options.max_violation_rate);
    }
    plan.validate();
    return plan;
  } catch (const json::exception& ex) {
    throw Error(std::string("plan: ") + ex.what());
  }
}

json GenerationPlan::to_json() const {
  json vars = json::array();
  for (auto v : variables) vars.push_back(std::string(to_string(v)));
  json ov = json::object();
  for (const auto& [v, id] : overrides) ov[std::string(to_string(v))] = id;
  json j{{"site", climgen::to_json(site)},
         {"variables", vars},
         {"start", format_iso8601(start)},
         {"duration", duration},
         {"duration_unit", "steps"},
         {"cadence", std::string(to_string(cadence))},
         {"criteria", climgen::to_json(criteria)},
         {"overrides", ov},
         {"options",
          {{"residual_noise", options.residual_noise},
           {"sky_temperature", options.sky_temperature},
           {"threads", options.threads},
           {"rejection", options.rejection},
           {"max_attempts", options.max_attempts},
           {"max_violation_rate", options.max_violation_rate}}}};
  if (seed_given) j["seed"] = seed;
  return j;
}

GenerationPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open plan " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error("plan " + path.string() + ": " + ex.what());
  }
  return GenerationPlan::from_json(j);
}

std::vector<Timestamp> timeline(const GenerationPlan& plan) {
  if (plan.criteria.months.empty()) throw Error("plan: criteria select no month");
  std::vector<Timestamp> out;
  out.reserve(plan.duration);
  const Timestamp step = step_seconds(plan.cadence);
  for (Timestamp t = plan.start; out.size() < plan.duration; t += step)
    if (plan.criteria.months.count(month_of(t))) out.push_back(t);
  return out;
}

// --- resolution -------------------------------------------------------------

namespace {

std::vector<ModelKind> preferred_kinds(Variable v) {
  switch (v) {
    case Variable::wind_speed: return {ModelKind::arma, ModelKind::weibull, ModelKind::gaussian};
    case Variable::clearness_index: return {ModelKind::arma, ModelKind::saunier};
    case Variable::dry_bulb_temp:
    case Variable::rel_humidity: return {ModelKind::neural, ModelKind::correlation};
    case Variable::diffuse_rad:
    case Variable::beam_rad:
    case Variable::insolation_hours:
    case Variable::nebulosity: return {ModelKind::correlation, ModelKind::neural};
    default:
      return {ModelKind::arma, ModelKind::correlation, ModelKind::neural, ModelKind::gaussian, ModelKind::weibull};
  }
}

int stage_of(Variable v) {
  switch (v) {
    case Variable::solar_height:
    case Variable::pressure: return 0;
    case Variable::wind_speed:
    case Variable::wind_direction:
    case Variable::clearness_index: return 1;
    case Variable::global_rad:
    case Variable::diffuse_rad:
    case Variable::beam_rad:
    case Variable::insolation_hours:
    case Variable::nebulosity: return 2;
    case Variable::dry_bulb_temp:
    case Variable::rel_humidity: return 3;
    case Variable::wet_bulb_temp:
    case Variable::sky_temp: return 5;
  }
  return 4;
}

bool same_conditions(const SelectionCriteria& a, const SelectionCriteria& b) {
  if (a.hour_range != b.hour_range || a.predicates.size() != b.predicates.size()) return false;
  for (std::size_t i = 0; i < a.predicates.size(); ++i)
    if (a.predicates[i].variable != b.predicates[i].variable || a.predicates[i].range.lo != b.predicates[i].range.lo ||
        a.predicates[i].range.hi != b.predicates[i].range.hi)
      return false;
  return true;
}

std::string months_arg(const SelectionCriteria& c) {
  std::string out;
  for (int m : c.months) out += (out.empty() ? "" : ",") + std::to_string(m);
  return out;
}

}  // namespace

const VariableSource* Resolution::find(Variable v) const {
  for (const auto& s : order)
    if (s.variable == v) return &s;
  return nullptr;
}

std::string fit_command_hint(Variable v, const SelectionCriteria& c) {
  std::string cmd = "climgen fit ";
  const std::string var(to_string(v));
  switch (v) {
    case Variable::wind_speed: cmd += "arma --data <measured.csv> --var wind_speed"; break;
    case Variable::clearness_index:
      cmd += "dist --data <measured.csv> --var clearness_index --law saunier --daily";
      break;
    case Variable::diffuse_rad:
    case Variable::beam_rad:
      cmd += "corr --data <measured.csv> --var " + var + " --predictors global_rad,clearness_index --template multilinear";
      break;
    case Variable::insolation_hours:
    case Variable::nebulosity:
      cmd += "corr --data <measured.csv> --var " + var + " --predictors clearness_index --template poly1";
      break;
    case Variable::dry_bulb_temp:
      cmd += "nn --data <measured.csv> --var dry_bulb_temp --inputs global_rad,diffuse_rad,wind_speed";
      break;
    case Variable::rel_humidity: cmd += "nn --data <measured.csv> --var rel_humidity --inputs dry_bulb_temp"; break;
    default: cmd += "dist --data <measured.csv> --var " + var + " --law gaussian"; break;
  }
  if (c.months.size() != 12) cmd += " --months " + months_arg(c);
  if (c.hour_range) cmd += " --hours " + std::to_string(c.hour_range->first) + "-" + std::to_string(c.hour_range->second);
  for (const auto& p : c.predicates)
    cmd += " --where " + std::string(to_string(p.variable)) + ":" + format_number(p.range.lo) + ":" +
           format_number(p.range.hi);
  return cmd;
}

Resolution resolve(const GenerationPlan& plan, std::span<const RegistryEntry> entries) {
  std::map<Variable, VariableSource> sources;
  std::vector<std::string> unresolved;
  std::vector<std::string> decisions;
  std::deque<Variable> work(plan.variables.begin(), plan.variables.end());
  if (plan.options.sky_temperature) work.push_back(Variable::sky_temp);

  auto choose = [&](Variable v) -> std::optional<RegistryEntry> {
    if (const auto it = plan.overrides.find(v); it != plan.overrides.end()) {
      for (const auto& e : entries)
        if (e.key.id() == it->second) {
          if (e.key.variable != v)
            throw Error("override for " + std::string(to_string(v)) + " names a model of " +
                        std::string(to_string(e.key.variable)));
          decisions.push_back(std::string(to_string(v)) + ": " + it->second + " (override)");
          return e;
        }
      throw Error("override for " + std::string(to_string(v)) + ": no registry entry " + it->second);
    }
    const auto kinds = preferred_kinds(v);
    std::vector<const RegistryEntry*> cands;
    for (const auto& e : entries) {
      if (e.key.variable != v || std::find(kinds.begin(), kinds.end(), e.key.kind) == kinds.end()) continue;
      const auto& months = criteria_of(e.model).months;
      if (!std::includes(months.begin(), months.end(), plan.criteria.months.begin(), plan.criteria.months.end()))
        continue;
      cands.push_back(&e);
    }
    if (cands.empty()) return std::nullopt;
    auto rank = [&](const RegistryEntry* e) {
      const auto k = static_cast<int>(std::find(kinds.begin(), kinds.end(), e->key.kind) - kinds.begin());
      return std::pair{k, same_conditions(criteria_of(e->model), plan.criteria) ? 0 : 1};
    };
    std::sort(cands.begin(), cands.end(), [&](const RegistryEntry* a, const RegistryEntry* b) {
      if (rank(a) != rank(b)) return rank(a) < rank(b);
      if (a->provenance.fit_date != b->provenance.fit_date) return a->provenance.fit_date > b->provenance.fit_date;
      return a->key.id() < b->key.id();
    });
    std::string note = std::string(to_string(v)) + ": " + cands.front()->key.id();
    if (cands.size() > 1) {
      note += " chosen over";
      for (std::size_t i = 1; i < cands.size(); ++i) note += " " + cands[i]->key.id();
      note += " (kind preference, matching conditions, then newest fit " + cands.front()->provenance.fit_date + ")";
    }
    decisions.push_back(note);
    return *cands.front();
  };

  while (!work.empty()) {
    const Variable v = work.front();
    work.pop_front();
    if (sources.count(v)) continue;
    VariableSource src{v, Producer::model, std::nullopt, {}};
    switch (v) {
      case Variable::global_rad:
        src.producer = Producer::clear_sky_product;
        src.inputs = {Variable::clearness_index};
        break;
      case Variable::wet_bulb_temp:
        src.producer = Producer::psychrometric;
        src.inputs = {Variable::dry_bulb_temp, Variable::rel_humidity};
        break;
      case Variable::sky_temp:
        src.producer = Producer::sky_model;
        src.inputs = {Variable::dry_bulb_temp, Variable::rel_humidity};
        break;
      case Variable::solar_height: src.producer = Producer::geometry; break;
      default:
        if (auto e = choose(v)) {
          src.inputs = inputs_of(e->model);
          src.entry = std::move(e);
        } else if (v == Variable::beam_rad) {
          src.producer = Producer::beam_difference;
          src.inputs = {Variable::global_rad, Variable::diffuse_rad};
          decisions.push_back("beam_rad: global_rad - diffuse_rad (no beam correlation)");
        } else if (v == Variable::pressure) {
          src.producer = Producer::standard_pressure;
          decisions.push_back("pressure: standard atmosphere at the site altitude");
        } else {
          unresolved.push_back(std::string(to_string(v)));
          continue;
        }
    }
    for (auto in : src.inputs) work.push_back(in);
    sources.emplace(v, std::move(src));
  }
  if (!unresolved.empty()) {
    std::string msg = "no model for";
    for (const auto& u : unresolved) msg += " (" + u + ", " + plan.criteria.period() + ")";
    msg += "; create with:";
    for (const auto& u : unresolved) msg += "\n  " + fit_command_hint(*parse_variable(u), plan.criteria);
    throw Error(msg);
  }
  if (sources.count(Variable::dry_bulb_temp) && sources.count(Variable::rel_humidity) &&
      !sources.count(Variable::wet_bulb_temp))
    sources.emplace(Variable::wet_bulb_temp,
                    VariableSource{Variable::wet_bulb_temp, Producer::psychrometric, std::nullopt,
                                   {Variable::dry_bulb_temp, Variable::rel_humidity}});

  Resolution res;
  res.decisions = std::move(decisions);
  std::set<Variable> done;
  while (done.size() < sources.size()) {
    const VariableSource* next = nullptr;
    for (const auto& [v, s] : sources) {
      if (done.count(v)) continue;
      const bool ready = std::all_of(s.inputs.begin(), s.inputs.end(), [&](Variable in) { return done.count(in) > 0; });
      if (ready && (!next || std::pair{stage_of(v), v} < std::pair{stage_of(next->variable), next->variable})) next = &s;
    }
    if (!next) throw Error("resolve: circular model dependencies");
    done.insert(next->variable);
    res.order.push_back(*next);
  }
  return res;
}

Resolution resolve(const GenerationPlan& plan, const ModelRegistry& registry) {
  const auto entries = registry.list();
  return resolve(plan, entries);
}

// --- generation -------------------------------------------------------------

namespace {

void parallel_rows(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(1, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mu;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> noise_draws(std::uint64_t seed, Variable v, std::size_t n, double sigma, bool enabled) {
  std::vector<double> out(n, 0.0);
  if (!enabled || !(sigma > 0.0)) return out;
  Rng rng = Rng::derive(seed, "noise:" + std::string(to_string(v)));
  for (double& x : out) x = sigma * rng.normal();
  return out;
}

// Unique day starts of the timeline and, for each step, its day index.
std::pair<std::vector<Timestamp>, std::vector<std::size_t>> day_index(std::span<const Timestamp> times) {
  std::vector<Timestamp> days;
  std::vector<std::size_t> idx(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Timestamp d = day_start(times[i]);
    if (days.empty() || days.back() != d) days.push_back(d);
    idx[i] = days.size() - 1;
  }
  return {std::move(days), std::move(idx)};
}

struct Context {
  const GenerationPlan& plan;
  std::uint64_t seed;
  const std::vector<Timestamp>& times;
  const std::vector<double>& i0;
  std::vector<std::pair<std::string, std::string>>& provenance;
};

// Daily values broadcast over the timeline; hourly clearness index only in daylight.
std::vector<Value> spread_daily(const Context& ctx, Variable v, const std::vector<double>& per_day,
                                const std::vector<std::size_t>& idx) {
  std::vector<Value> col(ctx.times.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (v == Variable::clearness_index && ctx.plan.cadence == Cadence::hourly && ctx.i0[i] <= 0.0) continue;
    col[i] = per_day[idx[i]];
  }
  if (v == Variable::clearness_index && ctx.plan.cadence == Cadence::hourly)
    ctx.provenance.emplace_back("kt_disaggregation", "daily clearness index applied to every daylight hour (global = Kt x hourly I0)");
  return col;
}

std::vector<Value> run_arma(const Context& ctx, Variable v, const ArmaModel& m) {
  Rng rng = Rng::derive(ctx.seed, "arma:" + std::string(to_string(v)));
  ctx.provenance.emplace_back("arma_standardization." + std::string(to_string(v)), std::string(to_string(m.profile.kind)));
  if (m.cadence == ctx.plan.cadence) {
    auto sim = simulate(m, ctx.times, rng);
    std::vector<Value> col = std::move(sim.series.values);
    if (v == Variable::clearness_index && ctx.plan.cadence == Cadence::hourly)
      for (std::size_t i = 0; i < col.size(); ++i)
        if (ctx.i0[i] <= 0.0) col[i].reset();
    return col;
  }
  if (m.cadence == Cadence::daily && ctx.plan.cadence == Cadence::hourly) {
    const auto [days, idx] = day_index(ctx.times);
    const auto sim = simulate(m, days, rng);
    std::vector<double> per_day;
    for (const auto& x : sim.series.values) per_day.push_back(*x);
    return spread_daily(ctx, v, per_day, idx);
  }
  throw Error("generate: hourly ARMA model for " + std::string(to_string(v)) + " cannot drive a daily plan");
}

std::vector<Value> run_distribution(const Context& ctx, Variable v, const DistributionModel& m) {
  const std::uint64_t stream = Rng::derive(ctx.seed, "law:" + std::string(to_string(v))).next();
  if (v == Variable::clearness_index || std::holds_alternative<SaunierParams>(m.law)) {
    const auto [days, idx] = day_index(ctx.times);
    const auto per_day = sample_dist(m.law, days.size(), stream);
    return spread_daily(ctx, v, per_day, idx);
  }
  const auto draws = sample_dist(m.law, ctx.times.size(), stream);
  return std::vector<Value>(draws.begin(), draws.end());
}

template <class Eval>
std::vector<Value> run_rows(const Context& ctx, const WeatherTable& table, Variable v,
                            const std::vector<Variable>& inputs, double sigma, Eval eval) {
  const std::size_t n = ctx.times.size();
  std::vector<const std::vector<Value>*> cols;
  for (auto in : inputs) cols.push_back(&table.column(in));
  const auto noise = noise_draws(ctx.seed, v, n, sigma, ctx.plan.options.residual_noise);
  std::vector<Value> out(n);
  const bool radiation = is_radiation(v);
  parallel_rows(n, ctx.plan.options.threads, [&](std::size_t i) {
    if (radiation && ctx.i0[i] <= 0.0) {
      out[i] = 0.0;
      return;
    }
    std::vector<double> x;
    x.reserve(cols.size());
    for (const auto* c : cols) {
      if (!(*c)[i]) return;
      x.push_back(*(*c)[i]);
    }
    out[i] = eval(x) + noise[i];
  });
  return out;
}

GeneratedSequence generate_once(const GenerationPlan& plan, const Resolution& res, std::uint64_t seed) {
  GeneratedSequence seq;
  seq.decisions = res.decisions;
  const auto times = timeline(plan);
  const auto i0 = extraterrestrial_column(plan.site, times, plan.cadence);
  WeatherTable& table = seq.table;
  table.cadence = plan.cadence;
  table.times = times;
  std::vector<std::pair<std::string, std::string>> notes;
  Context ctx{plan, seed, times, i0, notes};
  bool want_sky = false;

  for (const auto& src : res.order) {
    const Variable v = src.variable;
    std::vector<Value> col(times.size());
    switch (src.producer) {
      case Producer::geometry: col = solar_height_series(plan.site, times, plan.cadence).values; break;
      case Producer::standard_pressure: std::fill(col.begin(), col.end(), standard_pressure(plan.site.altitude)); break;
      case Producer::clear_sky_product: {
        const auto& kt = table.column(Variable::clearness_index);
        for (std::size_t i = 0; i < col.size(); ++i) {
          if (i0[i] <= 0.0) col[i] = 0.0;
          else if (kt[i]) col[i] = *kt[i] * i0[i];
        }
        break;
      }
      case Producer::beam_difference: {
        const auto& g = table.column(Variable::global_rad);
        const auto& d = table.column(Variable::diffuse_rad);
        for (std::size_t i = 0; i < col.size(); ++i)
          if (g[i] && d[i]) col[i] = std::max(0.0, *g[i] - *d[i]);
        break;
      }
      case Producer::psychrometric: continue;
      case Producer::sky_model: want_sky = true; continue;
      case Producer::model:
        std::visit(
            [&](const auto& m) {
              using T = std::decay_t<decltype(m)>;
              if constexpr (std::is_same_v<T, ArmaModel>) col = run_arma(ctx, v, m);
              else if constexpr (std::is_same_v<T, DistributionModel>) col = run_distribution(ctx, v, m);
              else if constexpr (std::is_same_v<T, CorrelationModel>)
                col = run_rows(ctx, table, v, m.predictors, m.diagnostics.residual_std,
                               [&m](const std::vector<double>& x) { return evaluate(m, x); });
              else
                col = run_rows(ctx, table, v, m.inputs, m.residual_sigma,
                               [&m](const std::vector<double>& x) { return forward(m, x); });
            },
            src.entry->model);
        break;
    }
    table.columns[v] = std::move(col);
  }

  seq.coherence = enforce_coherence(table, plan.site);
  if (seq.coherence.violation_rate() > plan.options.max_violation_rate)
    throw Error("models inconsistent with criteria: " +
                format_number(std::round(seq.coherence.violation_rate() * 1000.0) / 10.0) +
                "% of rows needed coherence repairs");
  if (table.has(Variable::dry_bulb_temp) && table.has(Variable::rel_humidity))
    derive_variables(table, plan.site, want_sky || plan.options.sky_temperature);

  auto& prov = seq.provenance;
  prov.emplace_back("generator", "climgen " + std::string(software_version()));
  prov.emplace_back("site.name", plan.site.name);
  prov.emplace_back("site.latitude", format_number(plan.site.latitude));
  prov.emplace_back("site.longitude", format_number(plan.site.longitude));
  prov.emplace_back("site.altitude", format_number(plan.site.altitude));
  prov.emplace_back("site.utc_offset", format_number(plan.site.utc_offset));
  auto plan_json = plan.to_json();
  plan_json["options"].erase("threads");
  prov.emplace_back("plan", plan_json.dump());
  prov.emplace_back("seed", std::to_string(seed));
  for (const auto& src : res.order) {
    const std::string name(to_string(src.variable));
    if (src.entry) prov.emplace_back("model." + name, src.entry->key.id());
    else {
      static const std::map<Producer, std::string> method{
          {Producer::clear_sky_product, "clearness_index x extraterrestrial irradiance"},
          {Producer::beam_difference, "global_rad - diffuse_rad"},
          {Producer::geometry, "solar geometry"},
          {Producer::standard_pressure, "standard atmosphere"},
          {Producer::psychrometric, "psychrometric wet bulb"},
          {Producer::sky_model, "clear-sky emissivity with cloud factor"}};
      prov.emplace_back("derived." + name, method.at(src.producer));
    }
  }
  std::set<std::string> seen;
  for (auto& n : notes)
    if (seen.insert(n.first).second) prov.push_back(std::move(n));
  prov.emplace_back("coherence.repairs", std::to_string(seq.coherence.total()));
  return seq;
}

bool passes_gate(const WeatherTable& generated, const WeatherTable& reference) {
  for (const auto& [v, col] : generated.columns) {
    if (!reference.has(v)) continue;
    const auto g = generated.series(v).present();
    const auto r = reference.series(v).present();
    if (g.size() < 5 || r.size() < 5) continue;
    if (!ks_two_sample(g, r, 0.05).pass) return false;
  }
  return true;
}

}  // namespace

GeneratedSequence generate(const GenerationPlan& plan, const Resolution& res, const WeatherTable* reference) {
  plan.validate();
  if (!plan.options.rejection) return generate_once(plan, res, plan.seed);
  if (!reference) throw Error("generate: rejection mode needs reference data");
  GeneratedSequence seq;
  for (int attempt = 0; attempt < plan.options.max_attempts; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? plan.seed : Rng::splitmix(plan.seed + static_cast<std::uint64_t>(attempt));
    seq = generate_once(plan, res, seed);
    seq.attempts = attempt + 1;
    if (passes_gate(seq.table, *reference)) {
      seq.provenance.emplace_back("rejection", "accepted at attempt " + std::to_string(attempt + 1));
      return seq;
    }
  }
  seq.provenance.emplace_back("rejection", "no attempt passed the KS gate in " +
                                               std::to_string(plan.options.max_attempts) + "; last attempt kept");
  return seq;
}

GeneratedSequence generate(const GenerationPlan& plan, const ModelRegistry& registry, const WeatherTable* reference) {
  return generate(plan, resolve(plan, registry), reference);
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "plotdata") return ExportFormat::plotdata;
  throw Error("unknown export format '" + std::string(name) + "' (csv or plotdata)");
}

void export_plotdata(const WeatherTable& table, const std::filesystem::path& dir,
                     std::vector<std::filesystem::path>* written) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [v, col] : table.columns) {
    const auto path = dir / (std::string(to_string(v)) + ".csv");
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "timestamp," << to_string(v) << '\n';
    for (std::size_t i = 0; i < table.rows(); ++i) {
      out << format_iso8601(table.times[i]) << ',';
      if (col[i]) out << format_number(*col[i]);
      out << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
    if (written) written->push_back(path);
  }
}

std::vector<std::filesystem::path> export_sequence(const GeneratedSequence& seq, ExportFormat format,
                                                   const std::filesystem::path& path) {
  std::vector<std::filesystem::path> written;
  if (format == ExportFormat::csv) {
    write_csv(seq.table, path, seq.provenance);
    written.push_back(path);
  } else {
    export_plotdata(seq.table, path, &written);
  }
  return written;
}

}  // namespace climgen
