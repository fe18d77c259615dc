#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "climgen/climdata.hpp"
#include "climgen/random.hpp"

namespace climgen {

struct AcfResult {
  std::vector<double> r;         // r[0..L], r[0] = 1
  std::vector<double> pacf;      // pacf[0..L], pacf[0] = 1
  std::vector<double> bartlett;  // bartlett[k] = 1.96·sqrt((1 + 2·Σ_{i<k} r_i²)/N); bartlett[0] = 0
  double quenouille_bound = 0.0; // 1.96/sqrt(N)
  std::size_t n = 0;
  bool short_series = false;     // N < 4L

  std::size_t max_lag() const { return r.empty() ? 0 : r.size() - 1; }
};

/// Sample autocorrelations r[0..max_lag] with the biased (1/N) estimator.
/// Throws "zero variance" for a constant series.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

/// Partial autocorrelations from autocorrelations r[0..L] by the
/// Durbin-Levinson recursion. Returns pacf[0..L] with pacf[0] = 1.
std::vector<double> durbin_levinson(std::span<const double> r);

/// Builds the full result (PACF and both bands) from given autocorrelations.
AcfResult acf_from_autocorrelations(std::vector<double> r, std::size_t n);
AcfResult acf_pacf(std::span<const double> x, std::size_t max_lag);
/// Throws when the series has missing values.
AcfResult acf_pacf(const ClimateSeries& series, std::size_t max_lag);

enum class ArmaKind { ar, ma, arma };
std::string_view to_string(ArmaKind k);

struct Identification {
  ArmaKind kind = ArmaKind::ar;
  int p = 0;
  int q = 0;
  bool white_noise = false;
};

/// Order selection. Significant PACF lags are those beyond the Quenouille
/// bound, significant ACF lags those beyond the Bartlett band. The order of
/// each function is the last significant lag before three consecutive
/// insignificant ones; a lone significant lag after a gap counts only when
/// the following lag is significant too. A function "cuts off" when that
/// run is reached with an order of at most 5. PACF cutoff → AR(p); ACF
/// cutoff → MA(q); both → the smaller order (AR on ties); neither →
/// ARMA(1,1). No significant lag at all gives AR(0) flagged white noise.
Identification identify(const AcfResult& acf);

enum class ProfileKind { flat, hour_of_day, day_of_year };
std::string_view to_string(ProfileKind k);
ProfileKind parse_profile_kind(std::string_view name);

/// Calendar-slot mean and standard deviation used to standardize a series
/// before ARMA fitting and to restore it after simulation. Slots are the
/// hour of day (24) or the day of year (366, each pooling a ±15 day window).
/// Slots without data fall back to the overall mean and std.
struct SeasonalProfile {
  ProfileKind kind = ProfileKind::flat;
  std::vector<double> mean{0.0};
  std::vector<double> std{1.0};

  static SeasonalProfile constant(double mean, double std);
  static SeasonalProfile fit(const ClimateSeries& series, ProfileKind kind);

  std::size_t slot(Timestamp t) const;
  double mean_at(Timestamp t) const { return mean[slot(t)]; }
  double std_at(Timestamp t) const { return std[slot(t)]; }
};

/// X(n) = Σ φ_τ·X(n-τ) + w(n) - Σ θ_τ·w(n-τ) on the standardized series.
struct ArmaModel {
  int p = 0;
  int q = 0;
  std::vector<double> phi;
  std::vector<double> theta;
  double noise_sigma = 1.0;
  SeasonalProfile profile;
  Variable variable = Variable::wind_speed;
  Cadence cadence = Cadence::hourly;
  SelectionCriteria criteria;
  std::size_t n = 0;        // estimation sample size
  bool clip = false;        // clip simulated values to the variable's physical range
  bool projected = false;   // roots were reflected into the admissible region
  int iterations = 0;       // CSS iterations (0 for Yule-Walker)
};

/// True when every root of 1 - Σ c_i·z^i lies outside the unit circle.
bool roots_outside_unit_circle(std::span<const double> coefficients);
/// Reflects roots inside or on the unit circle; returns true if it changed
/// anything.
bool reflect_roots(std::vector<double>& coefficients);

/// Fits ARMA(p, q) to an already standardized sequence. Pure AR uses
/// Yule-Walker with σ² = c0·Π(1 - α_k²); q > 0 minimizes the conditional
/// sum of squares (pre-sample innovations zero) by damped Gauss-Newton from
/// the Yule-Walker AR start, σ² = mean squared residual.
ArmaModel estimate(std::span<const double> z, int p, int q);
/// Standardizes by a fitted profile (hour of day for hourly series, day of
/// year for daily ones unless `profile` is given), then fits. The returned
/// model clips simulated values to the variable's range.
ArmaModel estimate(const ClimateSeries& series, int p, int q, std::optional<ProfileKind> profile = {});

/// One-step innovations of a standardized sequence under the model.
std::vector<double> innovations(const ArmaModel& model, std::span<const double> z);
std::vector<double> standardize(const SeasonalProfile& profile, const ClimateSeries& series);

struct ResidualReport {
  std::vector<double> r;         // residual ACF, lags 0..20
  std::vector<double> bartlett;  // band per lag
  int exceedances = 0;           // lags 1..20 outside the band
  int allowed = 0;
  bool pass = false;
  double ljung_box = 0.0;
  int ljung_box_dof = 0;
  double ljung_box_p = 1.0;
};

inline constexpr std::size_t kDiagnoseLags = 20;

/// Residual whiteness check. Pass when the number of lags 1..20 outside the
/// Bartlett band is at most the 95% quantile of Binomial(20, 0.05), i.e. 3.
/// The Ljung-Box statistic is reported alongside.
ResidualReport diagnose(const ArmaModel& model, std::span<const double> z);
ResidualReport diagnose(const ArmaModel& model, const ClimateSeries& series);

struct Simulation {
  ClimateSeries series;
  std::size_t clipped = 0;
  double clip_rate = 0.0;
};

/// Gaussian innovations with std noise_sigma, 10·(p+q)+50 discarded burn-in
/// steps, profile re-applied at each timestamp. With `clip`, values are
/// clipped to the variable's physical range (0 for wind and radiation).
/// Throws for a non-stationary model.
Simulation simulate(const ArmaModel& model, std::span<const Timestamp> times, Rng& rng);
Simulation simulate(const ArmaModel& model, std::span<const Timestamp> times, std::uint64_t seed);
/// n consecutive steps at the model cadence from `start`.
Simulation simulate(const ArmaModel& model, std::size_t n, std::uint64_t seed, Timestamp start = 0);

}  // namespace climgen
