#include <algorithm>
#include <cmath>

#include "climgen/climdata.hpp"
#include "climgen/error.hpp"

namespace climgen {

namespace {

constexpr double kMagnusA = 6.1094;
constexpr double kMagnusB = 17.625;
constexpr double kMagnusC = 243.04;

void check_inputs(double t_c, double rh, double pressure_hpa) {
  if (!(rh >= 0.0 && rh <= 100.0)) throw Error("relative humidity out of [0, 100]");
  if (!(pressure_hpa > 0.0)) throw Error("pressure must be positive");
  if (!std::isfinite(t_c)) throw Error("temperature not finite");
}

}  // namespace

double saturation_vapor_pressure(double t_c) {
  return kMagnusA * std::exp(kMagnusB * t_c / (t_c + kMagnusC));
}

double dew_point(double t_c, double rh) {
  if (!(rh > 0.0 && rh <= 100.0)) throw Error("dew point needs relative humidity in (0, 100]");
  const double g = std::log(rh / 100.0) + kMagnusB * t_c / (t_c + kMagnusC);
  return kMagnusC * g / (kMagnusB - g);
}

double psychrometric_residual(double t_c, double rh, double pressure_hpa, double twb) {
  const double e = rh / 100.0 * saturation_vapor_pressure(t_c);
  const double a = 6.53e-4 * (1.0 + 9.44e-4 * twb);
  return saturation_vapor_pressure(twb) - a * pressure_hpa * (t_c - twb) - e;
}

double wet_bulb(double t_c, double rh, double pressure_hpa) {
  check_inputs(t_c, rh, pressure_hpa);
  if (rh == 100.0) return t_c;
  // residual is increasing in twb, <= 0 at the dew point and >= 0 at t_c
  double lo = rh > 0.0 ? std::min(dew_point(t_c, rh), t_c) : t_c - 150.0;
  double hi = t_c;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double r = psychrometric_residual(t_c, rh, pressure_hpa, mid);
    if (r == 0.0) return mid;
    (r < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double standard_pressure(double altitude_m) {
  return 1013.25 * std::pow(1.0 - 2.25577e-5 * altitude_m, 5.25588);
}

double sky_temperature(double t_c, double rh, std::optional<double> nebulosity_octas) {
  const double td = rh > 0.0 ? dew_point(t_c, rh) : t_c - 60.0;
  double emissivity = 0.711 + 0.56 * (td / 100.0) + 0.73 * (td / 100.0) * (td / 100.0);
  if (nebulosity_octas) {
    const double n = std::clamp(*nebulosity_octas, 0.0, 8.0) * 10.0 / 8.0;
    emissivity *= 1.0 + 0.0224 * n - 0.0035 * n * n + 0.00028 * n * n * n;
  }
  emissivity = std::clamp(emissivity, 0.0, 1.0);
  const double ta = t_c + 273.15;
  return ta * std::pow(emissivity, 0.25) - 273.15;
}

}  // namespace climgen
