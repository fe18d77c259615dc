#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "climgen/arma.hpp"
#include "climgen/climdata.hpp"
#include "climgen/corrfit.hpp"
#include "climgen/distfit.hpp"
#include "climgen/neuralfit.hpp"

namespace climgen {

std::string_view software_version();

enum class ModelKind { weibull, saunier, gaussian, liu_jordan, arma, correlation, neural };
std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view name);

/// A fitted marginal law with the data it describes.
struct DistributionModel {
  Variable variable = Variable::wind_speed;
  Cadence cadence = Cadence::hourly;
  Distribution law;
  SelectionCriteria criteria;
};

using FittedModel = std::variant<DistributionModel, ArmaModel, CorrelationModel, NeuralModel>;

ModelKind kind_of(const FittedModel& m);
Variable variable_of(const FittedModel& m);
const SelectionCriteria& criteria_of(const FittedModel& m);
/// Variables the model needs as inputs (predictors of correlations and networks).
std::vector<Variable> inputs_of(const FittedModel& m);

struct ModelKey {
  Variable variable = Variable::wind_speed;
  std::string period;  // SelectionCriteria::period()
  std::string digest;  // SelectionCriteria::digest()
  ModelKind kind = ModelKind::arma;

  static ModelKey of(const FittedModel& m);
  /// "<variable>__<period>__<digest>__<kind>", also the file stem.
  std::string id() const;
  static ModelKey parse(std::string_view id);
  auto operator<=>(const ModelKey&) const = default;
};

struct Provenance {
  std::string fit_date;   // ISO-8601 UTC, e.g. 2026-10-16T09:30:00Z
  std::string data_span;  // "<first timestamp>/<last timestamp>"
  std::string software_version;
  nlohmann::json diagnostics = nlohmann::json::object();
};

/// Current UTC time as ISO-8601 with a `Z` suffix.
std::string utc_now_iso8601();

struct RegistryEntry {
  ModelKey key;
  FittedModel model;
  Provenance provenance;
};

/// Directory of JSON documents, one per model. Single writer, many readers:
/// put writes to a temporary file and renames it into place.
class ModelRegistry {
 public:
  explicit ModelRegistry(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path_of(const ModelKey& key) const;

  /// Stores the entry under ModelKey::of(model), replacing any previous one.
  ModelKey put(const FittedModel& model, Provenance provenance);
  std::optional<RegistryEntry> get(const ModelKey& key) const;
  RegistryEntry at(const ModelKey& key) const;
  std::optional<RegistryEntry> get(std::string_view id) const;
  /// Every entry, ordered by key id.
  std::vector<RegistryEntry> list() const;

 private:
  std::filesystem::path root_;
};

/// Default root: $CLIMGEN_REGISTRY if set, else ./registry.
std::filesystem::path default_registry_root();

// --- JSON -------------------------------------------------------------------

nlohmann::json to_json(const SiteMeta& s);
SiteMeta site_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelectionCriteria& c);
SelectionCriteria criteria_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Distribution& d);
Distribution distribution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SeasonalProfile& p);
SeasonalProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedModel& m);
FittedModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RegistryEntry& e);
RegistryEntry entry_from_json(const nlohmann::json& j);

/// Non-finite doubles are stored as the strings "inf", "-inf" and "nan".
nlohmann::json json_number(double v);
double number_from_json(const nlohmann::json& j);

}  // namespace climgen
