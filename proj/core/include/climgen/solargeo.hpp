#pragma once

#include <array>
#include <span>

#include "climgen/climdata.hpp"

namespace climgen {

/// Solar constant (W/m²).
inline constexpr double kSolarConstant = 1367.0;

/// Per-day geometry. Relations (Duffie & Beckman):
///   declination   δ  = 23.45·sin(360·(284+n)/365)            (Cooper)
///   eccentricity  E0 = 1 + 0.033·cos(360·n/365)
///   sunset angle  ωs = acos(-tanφ·tanδ), clamped to [0°, 180°] at polar latitudes
///   day length    S0 = 2·ωs/15
///   daily H0 (Wh/m²) = (24/π)·Gsc·E0·(cosφ·cosδ·sinωs + (π·ωs/180)·sinφ·sinδ)
/// Clock hours map to solar time through the longitude correction
/// 4·(λ - 15·utc_offset) min and Spencer's equation of time.
struct SolarDay {
  int day_of_year = 1;
  double declination_deg = 0.0;
  double sunset_hour_angle_deg = 0.0;
  double day_length_h = 0.0;
  double extraterrestrial_daily_wh = 0.0;
  /// Mean extraterrestrial horizontal irradiance (W/m²) over each clock hour
  /// [h, h+1); integrates the cosine of the zenith angle exactly.
  std::array<double, 24> hourly_i0{};
};

double declination_deg(int day_of_year);
double eccentricity_factor(int day_of_year);
/// Minutes, Spencer (1971).
double equation_of_time_min(int day_of_year);
double sunset_hour_angle_deg(double latitude_deg, double declination_deg);

SolarDay solar_day(const SiteMeta& site, Timestamp date);

/// Mean extraterrestrial horizontal irradiance over [t, t + 1 h).
double extraterrestrial_hourly(const SiteMeta& site, Timestamp hour_start);
/// H0/24: daily mean extraterrestrial irradiance (W/m²).
double extraterrestrial_daily_mean(const SiteMeta& site, Timestamp day);
/// Extraterrestrial irradiance at one cadence step starting at t.
double extraterrestrial(const SiteMeta& site, Timestamp t, Cadence cadence);

/// Solar elevation at an instant, degrees (negative below the horizon).
double solar_height_deg(const SiteMeta& site, Timestamp t);
/// Elevation at mid-interval (hourly) or at solar noon (daily).
ClimateSeries solar_height_series(const SiteMeta& site, std::span<const Timestamp> times,
                                  Cadence cadence);

/// Kt = global / extraterrestrial at the series cadence, clamped to [0, 1];
/// steps with zero extraterrestrial irradiance are missing.
ClimateSeries clearness_index(const ClimateSeries& global, const SiteMeta& site);

/// Daily insolation divided by the astronomical day length, clamped to [0, 1].
ClimateSeries sunshine_fraction(const ClimateSeries& insolation, const SiteMeta& site);

/// Default Kt_max: 98th percentile of the present Kt values.
double kt_max_default(const ClimateSeries& kt);
/// Linear-interpolated quantile (Hyndman-Fan type 7) of unsorted values.
double sample_quantile(std::vector<double> values, double p);

}  // namespace climgen
