#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "climgen/climdata.hpp"
#include "climgen/registry.hpp"

namespace climgen {

// --- coherence and derived variables ----------------------------------------

struct CoherenceReport {
  std::map<std::string, std::size_t> repairs;  // rule -> repaired cells
  std::size_t rows = 0;
  std::size_t rows_repaired = 0;

  std::size_t total() const;
  double violation_rate() const;
};

/// Repairs, in this order: radiation ≥ 0; global_rad = 0 when the
/// extraterrestrial irradiance is 0; diffuse_rad ≤ global_rad;
/// beam_rad = global - diffuse; rel_humidity ∈ [0, 100]; wind_speed ≥ 0;
/// insolation within [0, step length]; nebulosity ∈ [0, 8]; wet bulb
/// recomputed where it exceeds dry bulb; clearness_index ∈ [0, 1].
/// Idempotent: a second pass reports no repair.
CoherenceReport enforce_coherence(WeatherTable& table, const SiteMeta& site);

/// Adds wet_bulb_temp from dry_bulb_temp and rel_humidity (pressure column,
/// else the standard pressure at the site altitude) and, when asked,
/// sky_temp. Throws when the inputs are missing.
void derive_variables(WeatherTable& table, const SiteMeta& site, bool with_sky = false);

// --- plan -------------------------------------------------------------------

struct GenerationOptions {
  bool residual_noise = true;   // add N(0, residual σ) to correlation and network outputs
  bool sky_temperature = false;
  unsigned threads = 1;         // row-parallel evaluation; output does not depend on it
  bool rejection = false;       // regenerate until a KS gate against a reference passes
  int max_attempts = 20;
  double max_violation_rate = 0.2;
};

struct GenerationPlan {
  SiteMeta site;
  std::vector<Variable> variables;
  Timestamp start = 0;
  std::size_t duration = 1;  // steps at `cadence`
  Cadence cadence = Cadence::hourly;
  SelectionCriteria criteria;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::map<Variable, std::string> overrides;  // variable -> registry id
  GenerationOptions options;

  void validate() const;
  static GenerationPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

GenerationPlan load_plan(const std::filesystem::path& path);

/// Timestamps from `start` at the plan cadence, skipping those whose month is
/// outside the criteria, until `duration` are collected.
std::vector<Timestamp> timeline(const GenerationPlan& plan);

// --- resolution -------------------------------------------------------------

enum class Producer { model, clear_sky_product, beam_difference, geometry, standard_pressure, psychrometric, sky_model };

struct VariableSource {
  Variable variable;
  Producer producer = Producer::model;
  std::optional<RegistryEntry> entry;
  std::vector<Variable> inputs;
};

struct Resolution {
  std::vector<VariableSource> order;  // generation order
  std::vector<std::string> decisions;

  const VariableSource* find(Variable v) const;
};

/// Picks a model per variable of the dependency closure. Candidates must
/// cover every plan month; entries whose predicates and hour range equal the
/// plan's rank first, then the newest fit date, then the key. Overrides name
/// registry ids directly. Throws one error listing every unresolved variable
/// with the fit command that would create its model.
Resolution resolve(const GenerationPlan& plan, std::span<const RegistryEntry> entries);
Resolution resolve(const GenerationPlan& plan, const ModelRegistry& registry);

std::string fit_command_hint(Variable v, const SelectionCriteria& criteria);

// --- generation -------------------------------------------------------------

struct GeneratedSequence {
  WeatherTable table;
  std::vector<std::pair<std::string, std::string>> provenance;
  CoherenceReport coherence;
  std::vector<std::string> decisions;
  int attempts = 1;
};

/// Staged synthesis: stochastic drivers (ARMA or sampled laws, with daily
/// clearness index spread over the day by the hourly extraterrestrial shape),
/// then correlations, then networks, then coherence repair and derived
/// variables. Deterministic per plan and registry snapshot. With
/// options.rejection, `reference` supplies the KS gate.
GeneratedSequence generate(const GenerationPlan& plan, const Resolution& resolution,
                           const WeatherTable* reference = nullptr);
GeneratedSequence generate(const GenerationPlan& plan, const ModelRegistry& registry,
                           const WeatherTable* reference = nullptr);

enum class ExportFormat { csv, plotdata };
ExportFormat parse_export_format(std::string_view name);

/// csv: one file at `path` with provenance comments. plotdata: `path` is a
/// directory receiving one `<variable>.csv` (timestamp, value) per column.
std::vector<std::filesystem::path> export_sequence(const GeneratedSequence& seq, ExportFormat format,
                                                   const std::filesystem::path& path);
void export_plotdata(const WeatherTable& table, const std::filesystem::path& dir,
                     std::vector<std::filesystem::path>* written = nullptr);

}  // namespace climgen
