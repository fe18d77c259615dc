#include "climgen/solargeo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "climgen/error.hpp"

namespace climgen {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Clock-hour to solar-hour shift for a day, hours.
double solar_time_shift_h(const SiteMeta& site, int doy) {
  return (4.0 * (site.longitude - 15.0 * site.utc_offset) + equation_of_time_min(doy)) / 60.0;
}

double hour_mean_i0(double lat, double decl, double ws, double e0, double w1, double w2) {
  w1 = std::clamp(w1, -ws, ws);
  w2 = std::clamp(w2, -ws, ws);
  if (w2 <= w1) return 0.0;
  const double v = 12.0 / std::numbers::pi * kSolarConstant * e0 *
                   (std::cos(lat) * std::cos(decl) * (std::sin(w2 * kDeg) - std::sin(w1 * kDeg)) +
                    (w2 - w1) * kDeg * std::sin(lat) * std::sin(decl));
  return std::max(0.0, v);
}

}  // namespace

double declination_deg(int n) { return 23.45 * std::sin(2.0 * std::numbers::pi * (284 + n) / 365.0); }

double eccentricity_factor(int n) { return 1.0 + 0.033 * std::cos(2.0 * std::numbers::pi * n / 365.0); }

double equation_of_time_min(int n) {
  const double b = 2.0 * std::numbers::pi * (n - 1) / 365.0;
  return 229.18 * (0.000075 + 0.001868 * std::cos(b) - 0.032077 * std::sin(b) -
                   0.014615 * std::cos(2 * b) - 0.04089 * std::sin(2 * b));
}

double sunset_hour_angle_deg(double latitude_deg, double decl_deg) {
  const double c = -std::tan(latitude_deg * kDeg) * std::tan(decl_deg * kDeg);
  return std::acos(std::clamp(c, -1.0, 1.0)) / kDeg;
}

SolarDay solar_day(const SiteMeta& site, Timestamp date) {
  site.validate();
  SolarDay d;
  d.day_of_year = day_of_year(date);
  d.declination_deg = declination_deg(d.day_of_year);
  d.sunset_hour_angle_deg = sunset_hour_angle_deg(site.latitude, d.declination_deg);
  d.day_length_h = 2.0 * d.sunset_hour_angle_deg / 15.0;
  const double lat = site.latitude * kDeg;
  const double decl = d.declination_deg * kDeg;
  const double ws = d.sunset_hour_angle_deg;
  const double e0 = eccentricity_factor(d.day_of_year);
  d.extraterrestrial_daily_wh =
      24.0 / std::numbers::pi * kSolarConstant * e0 *
      (std::cos(lat) * std::cos(decl) * std::sin(ws * kDeg) + ws * kDeg * std::sin(lat) * std::sin(decl));
  d.extraterrestrial_daily_wh = std::max(0.0, d.extraterrestrial_daily_wh);
  const double shift = solar_time_shift_h(site, d.day_of_year);
  for (int h = 0; h < 24; ++h) {
    const double w1 = 15.0 * (h + shift - 12.0);
    d.hourly_i0[static_cast<std::size_t>(h)] = hour_mean_i0(lat, decl, ws, e0, w1, w1 + 15.0);
  }
  return d;
}

double extraterrestrial_hourly(const SiteMeta& site, Timestamp t) {
  const int doy = day_of_year(t);
  const double decl = declination_deg(doy);
  const double ws = sunset_hour_angle_deg(site.latitude, decl);
  const double clock_h = static_cast<double>(t - day_start(t)) / kSecondsPerHour;
  const double w1 = 15.0 * (clock_h + solar_time_shift_h(site, doy) - 12.0);
  return hour_mean_i0(site.latitude * kDeg, decl * kDeg, ws, eccentricity_factor(doy), w1, w1 + 15.0);
}

double extraterrestrial_daily_mean(const SiteMeta& site, Timestamp day) {
  return solar_day(site, day).extraterrestrial_daily_wh / 24.0;
}

double extraterrestrial(const SiteMeta& site, Timestamp t, Cadence cadence) {
  return cadence == Cadence::hourly ? extraterrestrial_hourly(site, t)
                                    : extraterrestrial_daily_mean(site, t);
}

double solar_height_deg(const SiteMeta& site, Timestamp t) {
  const int doy = day_of_year(t);
  const double decl = declination_deg(doy) * kDeg;
  const double lat = site.latitude * kDeg;
  const double clock_h = static_cast<double>(t - day_start(t)) / kSecondsPerHour;
  const double w = 15.0 * (clock_h + solar_time_shift_h(site, doy) - 12.0) * kDeg;
  const double s = std::cos(lat) * std::cos(decl) * std::cos(w) + std::sin(lat) * std::sin(decl);
  return std::asin(std::clamp(s, -1.0, 1.0)) / kDeg;
}

ClimateSeries solar_height_series(const SiteMeta& site, std::span<const Timestamp> times,
                                  Cadence cadence) {
  site.validate();
  ClimateSeries out{Variable::solar_height, cadence, {times.begin(), times.end()}, {}};
  out.values.reserve(times.size());
  for (Timestamp t : times) {
    if (cadence == Cadence::hourly) {
      out.values.emplace_back(solar_height_deg(site, t + kSecondsPerHour / 2));
    } else {
      const double decl = declination_deg(day_of_year(t));
      out.values.emplace_back(90.0 - std::abs(site.latitude - decl));
    }
  }
  return out;
}

ClimateSeries clearness_index(const ClimateSeries& global, const SiteMeta& site) {
  if (global.variable != Variable::global_rad)
    throw Error("clearness_index: input series must be global_rad");
  site.validate();
  ClimateSeries out{Variable::clearness_index, global.cadence, global.times, {}};
  out.values.reserve(global.size());
  for (std::size_t i = 0; i < global.size(); ++i) {
    const double i0 = extraterrestrial(site, global.times[i], global.cadence);
    if (!(i0 > 0.0) || !global.values[i]) {
      out.values.emplace_back(std::nullopt);
      continue;
    }
    out.values.emplace_back(std::clamp(*global.values[i] / i0, 0.0, 1.0));
  }
  return out;
}

ClimateSeries sunshine_fraction(const ClimateSeries& insolation, const SiteMeta& site) {
  if (insolation.cadence != Cadence::daily)
    throw Error("sunshine_fraction: insolation must be daily");
  site.validate();
  ClimateSeries out{Variable::insolation_hours, Cadence::daily, insolation.times, {}};
  for (std::size_t i = 0; i < insolation.size(); ++i) {
    const double s0 = solar_day(site, insolation.times[i]).day_length_h;
    if (!insolation.values[i] || !(s0 > 0.0)) {
      out.values.emplace_back(std::nullopt);
      continue;
    }
    out.values.emplace_back(std::clamp(*insolation.values[i] / s0, 0.0, 1.0));
  }
  return out;
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double kt_max_default(const ClimateSeries& kt) {
  const auto v = kt.present();
  if (v.empty()) throw Error("kt_max_default: no clearness-index values");
  return sample_quantile(v, 0.98);
}

}  // namespace climgen
