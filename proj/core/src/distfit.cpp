#include "climgen/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "climgen/error.hpp"
#include "climgen/random.hpp"
#include "climgen/solargeo.hpp"

namespace climgen {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Below this |γ| the closed forms suffer 0/0 cancellation; the moment series
// is used instead. 30 terms reach double precision for |γ| < 1.
constexpr double kSeriesBelow = 1.0;
constexpr int kSeriesTerms = 30;

/// ∫0^1 x^a·(1-x)·e^(γx) dx = Σ γ^j/j! · 1/((j+a+1)(j+a+2)).
double kernel_moment_series(double gamma, int a) {
  double term = 1.0;  // γ^j / j!
  double sum = 0.0;
  for (int j = 0; j < kSeriesTerms; ++j) {
    sum += term / ((j + a + 1.0) * (j + a + 2.0));
    term *= gamma / (j + 1.0);
  }
  return sum;
}

}  // namespace

// --- Weibull ----------------------------------------------------------------

WeibullFit weibull_fit(std::span<const double> sample) {
  std::vector<double> pos;
  std::size_t zeros = 0;
  for (double v : sample) {
    if (!std::isfinite(v) || v < 0.0) throw Error("weibull_fit: negative or non-finite value");
    if (v == 0.0)
      ++zeros;
    else
      pos.push_back(v);
  }
  if (pos.empty()) throw Error("weibull_fit: degenerate sample (all zero)");
  const double vmax = *std::max_element(pos.begin(), pos.end());
  const double vmin = *std::min_element(pos.begin(), pos.end());
  if (vmin == vmax) throw Error("weibull_fit: degenerate sample (fewer than 2 distinct positive values)");

  const std::size_t n = pos.size();
  std::vector<double> logs(n);
  double mean_log = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = std::log(pos[i] / vmax);  // <= 0, avoids overflow of v^k
    mean_log += logs[i];
  }
  mean_log /= static_cast<double>(n);

  struct Eval {
    double g, dg;
  };
  auto profile = [&](double k) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (double l : logs) {
      const double w = std::exp(k * l);
      s0 += w;
      s1 += w * l;
      s2 += w * l * l;
    }
    const double ratio = s1 / s0;
    return Eval{ratio - 1.0 / k - mean_log, s2 / s0 - ratio * ratio + 1.0 / (k * k)};
  };

  double lo = 0.5, hi = 2.0;
  while (profile(lo).g > 0.0 && lo > 1e-6) lo *= 0.5;
  while (profile(hi).g < 0.0 && hi < 1e4) hi *= 2.0;
  double k = 0.5 * (lo + hi);
  int it = 0;
  for (; it < 200; ++it) {
    const auto e = profile(k);
    if (e.g == 0.0) break;
    (e.g < 0.0 ? lo : hi) = k;
    double next = k - e.g / e.dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - k);
    k = next;
    if (step < 1e-8) break;
  }
  double s0 = 0.0;
  for (double l : logs) s0 += std::exp(k * l);
  const double c = vmax * std::pow(s0 / static_cast<double>(n), 1.0 / k);

  WeibullFit fit;
  fit.params = {k, c};
  fit.n = n;
  fit.zero_fraction = static_cast<double>(zeros) / static_cast<double>(sample.size());
  fit.small_sample = n < 30;
  fit.iterations = it + 1;
  return fit;
}

WeibullFit weibull_fit(const ClimateSeries& sample) { return weibull_fit(sample.present()); }

double weibull_pdf(const WeibullParams& p, double v) {
  if (v < 0.0) return 0.0;
  if (v == 0.0) return p.k == 1.0 ? 1.0 / p.c : (p.k > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
  const double z = v / p.c;
  return p.k / p.c * std::pow(z, p.k - 1.0) * std::exp(-std::pow(z, p.k));
}

double weibull_cdf(const WeibullParams& p, double v) {
  if (v <= 0.0) return 0.0;
  return -std::expm1(-std::pow(v / p.c, p.k));
}

double weibull_quantile(const WeibullParams& p, double prob) {
  if (prob <= 0.0) return 0.0;
  if (prob >= 1.0) return std::numeric_limits<double>::infinity();
  return p.c * std::pow(-std::log1p(-prob), 1.0 / p.k);
}

double weibull_mean(const WeibullParams& p) { return p.c * std::tgamma(1.0 + 1.0 / p.k); }

// --- Saunier ----------------------------------------------------------------

double saunier_c1(double g) {
  if (std::abs(g) < kSeriesBelow) return 1.0 / kernel_moment_series(g, 1);
  return g * g * g / ((g - 2.0) * std::exp(g) + g + 2.0);
}

double saunier_x_moy(double g) {
  if (std::abs(g) < kSeriesBelow) return kernel_moment_series(g, 2) / kernel_moment_series(g, 1);
  const double e = std::exp(g);
  return ((g * g - 4.0 * g + 6.0) * e - 2.0 * g - 6.0) / (g * ((g - 2.0) * e + g + 2.0));
}

SaunierParams saunier_from_gamma(double gamma1, double kt_max) {
  if (!(kt_max > 0.0 && kt_max <= 1.0)) throw Error("saunier: kt_max must lie in (0, 1]");
  if (!(std::abs(gamma1) <= kSaunierGammaLimit)) throw Error("saunier: gamma1 outside supported range");
  SaunierParams p;
  p.gamma1 = gamma1;
  p.c1 = saunier_c1(gamma1);
  p.x_moy = saunier_x_moy(gamma1);
  p.kt_max = kt_max;
  p.kt_moy = p.x_moy * kt_max;
  return p;
}

SaunierParams saunier_solve(double kt_moy, double kt_max) {
  if (!(kt_max > 0.0 && kt_max <= 1.0)) throw Error("saunier_solve: kt_max must lie in (0, 1]");
  if (!(kt_moy > 0.0 && kt_moy < kt_max)) throw Error("saunier_solve: need 0 < kt_moy < kt_max");
  const double target = kt_moy / kt_max;
  double lo = -kSaunierGammaLimit, hi = kSaunierGammaLimit;
  if (!(target > saunier_x_moy(lo) && target < saunier_x_moy(hi)))
    throw Error("saunier_solve: x_moy target " + format_number(target) + " not attainable");
  // Regula falsi with a bisection every third step; x_moy is monotone so the
  // bracket always holds the root.
  double flo = saunier_x_moy(lo) - target, fhi = saunier_x_moy(hi) - target;
  int it = 0;
  for (; it < 200 && hi - lo >= 1e-9; ++it) {
    double mid = lo - flo * (hi - lo) / (fhi - flo);
    if (!(mid > lo + 0.01 * (hi - lo) && mid < hi - 0.01 * (hi - lo)) || it % 3 == 2)
      mid = 0.5 * (lo + hi);
    const double fm = saunier_x_moy(mid) - target;
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  if (hi - lo >= 1e-8) throw Error("saunier_solve: no convergence in 200 iterations");
  auto p = saunier_from_gamma(0.5 * (lo + hi), kt_max);
  p.kt_moy = kt_moy;
  return p;
}

SaunierParams saunier_fit(const ClimateSeries& kt, std::optional<double> kt_max) {
  const auto values = kt.present();
  if (values.size() < 2) throw Error("saunier_fit: need at least 2 clearness-index values");
  const double top = kt_max ? *kt_max : sample_quantile(values, 0.98);
  double sum = 0.0;
  for (double v : values) sum += std::clamp(v, 0.0, top);
  return saunier_solve(sum / static_cast<double>(values.size()), top);
}

double saunier_pdf(const SaunierParams& p, double x, SaunierForm form) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (form == SaunierForm::printed) return p.c1 * (x - p.x_moy) * std::exp(p.gamma1 * x);
  if (x == 0.0 || x == 1.0) return 0.0;
  return std::exp(std::log(p.c1) + p.gamma1 * x) * x * (1.0 - x);
}

double saunier_cdf(const SaunierParams& p, double x, SaunierForm form) {
  if (form == SaunierForm::printed)
    throw Error("saunier: the printed (x - x_moy) form is not a probability density");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double g = p.gamma1;
  double f;
  if (std::abs(g) < kSeriesBelow) {
    double term = 1.0, sum = 0.0, xp = x * x;  // xp = x^(j+2)
    for (int j = 0; j < kSeriesTerms; ++j) {
      sum += term * (xp / (j + 2.0) - xp * x / (j + 3.0));
      term *= g / (j + 1.0);
      xp *= x;
    }
    f = p.c1 * sum;
  } else {
    // antiderivative of x(1-x)e^(γx): e^(γx)·((x-x²)/γ - (1-2x)/γ² - 2/γ³)
    const double q = (x - x * x) / g - (1.0 - 2.0 * x) / (g * g) - 2.0 / (g * g * g);
    const double q0 = -1.0 / (g * g) - 2.0 / (g * g * g);
    f = std::exp(std::log(p.c1) + g * x) * q - p.c1 * q0;
  }
  return std::clamp(f, 0.0, 1.0);
}

double saunier_peak_density(const SaunierParams& p) {
  const double g = p.gamma1;
  const double x = 2.0 / ((2.0 - g) + std::sqrt(g * g + 4.0));
  return saunier_pdf(p, x);
}

// --- Gaussian ---------------------------------------------------------------

GaussianParams gaussian_fit(std::span<const double> sample) {
  if (sample.size() < 2) throw Error("gaussian_fit: need at least 2 values");
  const auto s = describe(sample);
  return {s.mean, s.std};
}

GaussianParams gaussian_fit(const ClimateSeries& sample) { return gaussian_fit(sample.present()); }

// --- generic ----------------------------------------------------------------

double pdf(const Distribution& d, double v) {
  return std::visit(
      overloaded{[&](const WeibullParams& p) { return weibull_pdf(p, v); },
                 [&](const SaunierParams& p) {
                   return v < 0.0 || v > p.kt_max ? 0.0 : saunier_pdf(p, v / p.kt_max) / p.kt_max;
                 },
                 [&](const GaussianParams& p) {
                   if (p.sigma == 0.0) return v == p.mu ? std::numeric_limits<double>::infinity() : 0.0;
                   const double z = (v - p.mu) / p.sigma;
                   return std::exp(-0.5 * z * z) / (p.sigma * std::sqrt(2.0 * std::numbers::pi));
                 }},
      d);
}

double cdf(const Distribution& d, double v) {
  return std::visit(overloaded{[&](const WeibullParams& p) { return weibull_cdf(p, v); },
                               [&](const SaunierParams& p) { return saunier_cdf(p, v / p.kt_max); },
                               [&](const GaussianParams& p) {
                                 if (p.sigma == 0.0) return v < p.mu ? 0.0 : 1.0;
                                 return 0.5 * std::erfc(-(v - p.mu) / (p.sigma * std::sqrt(2.0)));
                               }},
                    d);
}

double quantile(const Distribution& d, double prob) {
  return std::visit(
      overloaded{[&](const WeibullParams& p) { return weibull_quantile(p, prob); },
                 [&](const SaunierParams& p) {
                   if (prob <= 0.0) return 0.0;
                   if (prob >= 1.0) return p.kt_max;
                   double lo = 0.0, hi = 1.0;
                   for (int i = 0; i < 100 && hi - lo > 1e-14; ++i) {
                     const double mid = 0.5 * (lo + hi);
                     (saunier_cdf(p, mid) < prob ? lo : hi) = mid;
                   }
                   return 0.5 * (lo + hi) * p.kt_max;
                 },
                 [&](const GaussianParams& p) {
                   if (prob <= 0.0) return -std::numeric_limits<double>::infinity();
                   if (prob >= 1.0) return std::numeric_limits<double>::infinity();
                   return p.mu - p.sigma * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * prob);
                 }},
      d);
}

double mean(const Distribution& d) {
  return std::visit(overloaded{[](const WeibullParams& p) { return weibull_mean(p); },
                               [](const SaunierParams& p) { return p.x_moy * p.kt_max; },
                               [](const GaussianParams& p) { return p.mu; }},
                    d);
}

int parameter_count(const Distribution& d) {
  return std::visit(overloaded{[](const WeibullParams&) { return 2; },
                               [](const SaunierParams&) { return 1; },
                               [](const GaussianParams&) { return 2; }},
                    d);
}

std::string_view law_name(const Distribution& d) {
  return std::visit(overloaded{[](const WeibullParams&) { return std::string_view("weibull"); },
                               [](const SaunierParams&) { return std::string_view("saunier"); },
                               [](const GaussianParams&) { return std::string_view("gaussian"); }},
                    d);
}

std::vector<double> sample_dist(const Distribution& d, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error("sample_dist: n must be >= 1");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  std::visit(overloaded{[&](const WeibullParams& p) {
                          for (std::size_t i = 0; i < n; ++i)
                            out.push_back(weibull_quantile(p, rng.uniform()));
                        },
                        [&](const SaunierParams& p) {
                          const double peak = saunier_peak_density(p);
                          while (out.size() < n) {
                            const double x = rng.uniform();
                            if (rng.uniform() * peak < saunier_pdf(p, x)) out.push_back(x * p.kt_max);
                          }
                        },
                        [&](const GaussianParams& p) {
                          for (std::size_t i = 0; i < n; ++i)
                            out.push_back(p.sigma == 0.0 ? p.mu : p.mu + p.sigma * rng.normal());
                        }},
             d);
  return out;
}

// --- χ² ---------------------------------------------------------------------

std::vector<GofBin> merge_sparse_bins(std::vector<GofBin> bins) {
  auto merge = [&](std::size_t i) {  // bins[i] absorbs bins[i + 1]
    bins[i].hi = bins[i + 1].hi;
    bins[i].observed += bins[i + 1].observed;
    bins[i].expected += bins[i + 1].expected;
    bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(i) + 1);
  };
  while (bins.size() >= 2) {
    if (bins.front().expected < kMinExpectedCount) {
      merge(0);
    } else if (bins.back().expected < kMinExpectedCount) {
      merge(bins.size() - 2);
    } else {
      std::size_t worst = 0;
      double lowest = kMinExpectedCount;
      for (std::size_t i = 1; i + 1 < bins.size(); ++i)
        if (bins[i].expected < lowest) {
          lowest = bins[i].expected;
          worst = i;
        }
      if (worst == 0) break;
      merge(bins[worst - 1].expected <= bins[worst + 1].expected ? worst - 1 : worst);
    }
  }
  return bins;
}

namespace {

GofResult finish_chi2(std::vector<GofBin> bins, int fitted_parameters, double alpha) {
  bins = merge_sparse_bins(std::move(bins));
  if (bins.size() < 2) throw Error("chi2: fewer than 2 bins survive merging");
  if (bins.front().expected < kMinExpectedCount)
    throw Error("chi2: total expected count too small for any valid bin");
  GofResult r;
  r.alpha = alpha;
  r.dof = static_cast<int>(bins.size()) - 1 - fitted_parameters;
  if (r.dof < 1) throw Error("chi2: no degrees of freedom left after fitted parameters");
  for (const auto& b : bins) r.statistic += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
  boost::math::chi_squared_distribution<double> chi2(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(chi2, r.statistic));
  r.pass = r.p_value >= alpha;
  r.bins = std::move(bins);
  return r;
}

}  // namespace

GofResult chi2_from_counts(std::span<const double> observed, std::span<const double> expected,
                           int fitted_parameters, double alpha) {
  if (observed.size() != expected.size()) throw Error("chi2: observed/expected length mismatch");
  std::vector<GofBin> bins;
  for (std::size_t i = 0; i < observed.size(); ++i)
    bins.push_back({static_cast<double>(i), static_cast<double>(i + 1), observed[i], expected[i]});
  return finish_chi2(std::move(bins), fitted_parameters, alpha);
}

GofResult chi2_gof(std::span<const double> sample, const Distribution& model, std::size_t n_bins,
                   double alpha, std::optional<int> fitted_parameters) {
  if (n_bins < 2) throw Error("chi2: need at least 2 bins");
  if (sample.empty()) throw Error("chi2: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double expected = static_cast<double>(sorted.size()) / static_cast<double>(n_bins);
  std::vector<GofBin> bins;
  double lo = -std::numeric_limits<double>::infinity();
  auto first = sorted.begin();
  for (std::size_t i = 1; i <= n_bins; ++i) {
    const double hi = i == n_bins ? std::numeric_limits<double>::infinity()
                                  : quantile(model, static_cast<double>(i) / static_cast<double>(n_bins));
    auto last = i == n_bins ? sorted.end() : std::upper_bound(first, sorted.end(), hi);
    bins.push_back({lo, hi, static_cast<double>(last - first), expected});
    first = last;
    lo = hi;
  }
  return finish_chi2(std::move(bins), fitted_parameters.value_or(parameter_count(model)), alpha);
}

}  // namespace climgen
