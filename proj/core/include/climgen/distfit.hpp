#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "climgen/climdata.hpp"

namespace climgen {

/// f(v) = (k/c)·(v/c)^(k-1)·exp(-(v/c)^k), v >= 0.
struct WeibullParams {
  double k = 1.0;  // shape
  double c = 1.0;  // scale, same units as v
};

/// Clearness-index law on x = Kt/Kt_max ∈ [0, 1]:
///   P(x) = C1·x·(1-x)·exp(γ1·x)
///   C1   = γ1³ / ((γ1-2)·e^γ1 + γ1 + 2)
///   xmoy = ((γ1²-4γ1+6)·e^γ1 - 2γ1 - 6) / (γ1·((γ1-2)·e^γ1 + γ1 + 2))
/// C1 normalises the x(1-x) kernel and xmoy is its first moment; both have
/// the limits 6 and 1/2 at γ1 = 0.
struct SaunierParams {
  double gamma1 = 0.0;
  double c1 = 6.0;
  double x_moy = 0.5;
  double kt_moy = 0.5;
  double kt_max = 1.0;
};

struct GaussianParams {
  double mu = 0.0;
  double sigma = 1.0;
};

using Distribution = std::variant<WeibullParams, SaunierParams, GaussianParams>;

// --- Weibull ----------------------------------------------------------------

struct WeibullFit {
  WeibullParams params;
  std::size_t n = 0;           // positive values used by the likelihood
  double zero_fraction = 0.0;  // calms excluded from the likelihood
  bool small_sample = false;   // n < 30
  int iterations = 0;
};

/// Maximum likelihood. The shape solves the profile equation
///   Σ v^k·ln v / Σ v^k - 1/k - mean(ln v) = 0
/// by Newton's method safeguarded with bisection, then c = (mean v^k)^(1/k).
/// Zero values are excluded from the likelihood and reported as a fraction.
WeibullFit weibull_fit(std::span<const double> sample);
WeibullFit weibull_fit(const ClimateSeries& sample);

double weibull_pdf(const WeibullParams& p, double v);
double weibull_cdf(const WeibullParams& p, double v);
double weibull_quantile(const WeibullParams& p, double prob);
double weibull_mean(const WeibullParams& p);

// --- Saunier ----------------------------------------------------------------

/// Largest |γ1| handled; beyond it the normaliser leaves double range.
inline constexpr double kSaunierGammaLimit = 600.0;

double saunier_c1(double gamma1);
double saunier_x_moy(double gamma1);
SaunierParams saunier_from_gamma(double gamma1, double kt_max);

/// Finds γ1 such that xmoy(γ1) = kt_moy/kt_max by bracketed root finding
/// (xmoy is strictly increasing), to |Δγ| < 1e-8.
SaunierParams saunier_solve(double kt_moy, double kt_max);

/// Fits from a clearness-index sample: Kt_moy is the sample mean of the
/// values clipped to Kt_max; Kt_max defaults to the 98th percentile.
SaunierParams saunier_fit(const ClimateSeries& kt, std::optional<double> kt_max = {});

enum class SaunierForm {
  product,  // C1·x·(1-x)·e^(γx), the normalised density
  printed,  // C1·(x - xmoy)·e^(γx), kept for comparison only; not a density
};

/// Density on the normalised variable x ∈ [0, 1].
double saunier_pdf(const SaunierParams& p, double x, SaunierForm form = SaunierForm::product);
/// CDF on x ∈ [0, 1]. Throws for the printed form, which does not normalise.
double saunier_cdf(const SaunierParams& p, double x, SaunierForm form = SaunierForm::product);
/// Maximum of the product density, at x* = 2 / ((2 - γ) + sqrt(γ² + 4)).
double saunier_peak_density(const SaunierParams& p);

// --- Gaussian ---------------------------------------------------------------

GaussianParams gaussian_fit(std::span<const double> sample);
GaussianParams gaussian_fit(const ClimateSeries& sample);

// --- any distribution (values in variable units; Kt for Saunier) -------------

double pdf(const Distribution& d, double value);
double cdf(const Distribution& d, double value);
double quantile(const Distribution& d, double prob);
double mean(const Distribution& d);
int parameter_count(const Distribution& d);
std::string_view law_name(const Distribution& d);

/// Inverse-CDF draws for Weibull and Gaussian, rejection under a uniform
/// envelope at the peak density for Saunier. Deterministic for a seed.
std::vector<double> sample_dist(const Distribution& d, std::size_t n, std::uint64_t seed);

// --- χ² goodness of fit -----------------------------------------------------

struct GofBin {
  double lo = 0.0;
  double hi = 0.0;
  double observed = 0.0;
  double expected = 0.0;
};

struct GofResult {
  double statistic = 0.0;
  int dof = 1;
  double p_value = 1.0;
  bool pass = true;  // p_value >= alpha
  double alpha = 0.05;
  std::vector<GofBin> bins;
};

inline constexpr double kMinExpectedCount = 5.0;

/// Merges bins from the tails inward until every expected count is >= 5.
std::vector<GofBin> merge_sparse_bins(std::vector<GofBin> bins);

/// Pearson χ² on given counts (bins are merged first).
GofResult chi2_from_counts(std::span<const double> observed, std::span<const double> expected,
                           int fitted_parameters, double alpha = 0.05);

/// Pearson χ² with `n_bins` equiprobable bins under the model. The dof
/// deducts `fitted_parameters`, which defaults to the law's parameter count.
GofResult chi2_gof(std::span<const double> sample, const Distribution& model, std::size_t n_bins,
                   double alpha = 0.05, std::optional<int> fitted_parameters = {});

}  // namespace climgen
