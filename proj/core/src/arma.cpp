#include "climgen/arma.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "climgen/error.hpp"

namespace climgen {

namespace {

constexpr double kZ95 = 1.96;
constexpr int kCutoffRun = 3;
constexpr int kMaxCutOrder = 5;
constexpr int kMaxIterations = 500;

struct LevinsonResult {
  std::vector<double> pacf;  // [0..L]
  std::vector<double> phi;   // AR coefficients at the final order
  double variance_ratio = 1.0;  // Π(1 - α_k²)
};

LevinsonResult levinson(std::span<const double> r, std::size_t order) {
  if (r.empty() || r[0] != 1.0) throw Error("durbin_levinson: r[0] must be 1");
  if (order >= r.size()) throw Error("durbin_levinson: not enough autocorrelations");
  LevinsonResult out;
  out.pacf.assign(order + 1, 0.0);
  out.pacf[0] = 1.0;
  std::vector<double> prev;
  std::vector<double> cur;
  double v = 1.0;
  for (std::size_t k = 1; k <= order; ++k) {
    double num = r[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j - 1] * r[k - j];
    if (!(v > 0.0)) throw Error("durbin_levinson: autocorrelations are not positive definite");
    const double a = num / v;
    cur.assign(k, 0.0);
    for (std::size_t j = 1; j < k; ++j) cur[j - 1] = prev[j - 1] - a * prev[k - j - 1];
    cur[k - 1] = a;
    out.pacf[k] = a;
    v *= 1.0 - a * a;
    prev.swap(cur);
  }
  out.phi = prev;
  out.variance_ratio = v;
  return out;
}

struct Order {
  int order = 0;
  bool cut = false;
};

Order significant_order(const std::vector<bool>& sig) {
  const int L = static_cast<int>(sig.size()) - 1;
  Order out;
  int gap = 0;
  for (int k = 1; k <= L; ++k) {
    if (sig[static_cast<std::size_t>(k)] &&
        (gap == 0 || (k + 1 <= L && sig[static_cast<std::size_t>(k + 1)]))) {
      out.order = k;
      gap = 0;
    } else {
      ++gap;
    }
    if (gap >= kCutoffRun) {
      out.cut = out.order <= kMaxCutOrder;
      return out;
    }
  }
  return out;
}

std::vector<std::complex<double>> reciprocal_roots(std::span<const double> c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) companion(0, j) = c[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()(i));
  return out;
}

void clip_to_range(Variable v, double& x, std::size_t& clipped) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  switch (v) {
    case Variable::wind_speed:
    case Variable::global_rad:
    case Variable::diffuse_rad:
    case Variable::beam_rad:
    case Variable::insolation_hours:
      lo = 0.0;
      break;
    case Variable::clearness_index:
      lo = 0.0;
      hi = 1.0;
      break;
    case Variable::rel_humidity:
      lo = 0.0;
      hi = 100.0;
      break;
    case Variable::nebulosity:
      lo = 0.0;
      hi = 8.0;
      break;
    default:
      break;
  }
  if (x < lo) {
    x = lo;
    ++clipped;
  } else if (x > hi) {
    x = hi;
    ++clipped;
  }
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct Css {
  double sse = 0.0;
  Eigen::VectorXd w;
  Eigen::MatrixXd jac;
};

// Conditional residuals from t = p with zero pre-sample innovations, plus
// their derivatives with respect to (φ, θ).
Css css_residuals(std::span<const double> z, int p, int q, const Eigen::VectorXd& beta, bool with_jacobian) {
  const std::size_t n = z.size();
  const std::size_t m = n - static_cast<std::size_t>(p);
  const auto k = static_cast<Eigen::Index>(p + q);
  Css out;
  out.w.resize(static_cast<Eigen::Index>(m));
  if (with_jacobian) out.jac.resize(static_cast<Eigen::Index>(m), k);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t t = i + static_cast<std::size_t>(p);
    double w = z[t];
    for (int a = 1; a <= p; ++a) w -= beta(a - 1) * z[t - static_cast<std::size_t>(a)];
    for (int b = 1; b <= q && static_cast<std::size_t>(b) <= i; ++b)
      w += beta(p + b - 1) * out.w(static_cast<Eigen::Index>(i) - b);
    out.w(static_cast<Eigen::Index>(i)) = w;
    if (!with_jacobian) continue;
    const auto row = static_cast<Eigen::Index>(i);
    for (int a = 1; a <= p; ++a) out.jac(row, a - 1) = -z[t - static_cast<std::size_t>(a)];
    for (int b = 1; b <= q; ++b)
      out.jac(row, p + b - 1) = static_cast<std::size_t>(b) <= i ? out.w(row - b) : 0.0;
    for (int b = 1; b <= q && static_cast<std::size_t>(b) <= i; ++b)
      out.jac.row(row) += beta(p + b - 1) * out.jac.row(row - b);
  }
  out.sse = out.w.squaredNorm();
  return out;
}

ArmaModel fit_centered(std::span<const double> z, int p, int q) {
  if (p < 0 || q < 0 || p + q < 1) throw Error("estimate: need p + q >= 1");
  const std::size_t n = z.size();
  if (n <= static_cast<std::size_t>(10 * (p + q)))
    throw Error("estimate: N = " + std::to_string(n) + " too small for ARMA(" + std::to_string(p) + "," +
                std::to_string(q) + "), need N > " + std::to_string(10 * (p + q)));
  ArmaModel model;
  model.p = p;
  model.q = q;
  model.n = n;

  const auto r = autocorrelation(z, static_cast<std::size_t>(p));
  double c0 = 0.0;
  for (double v : z) c0 += v * v;
  c0 /= static_cast<double>(n);
  if (p > 0) {
    const auto lev = levinson(r, static_cast<std::size_t>(p));
    model.phi = lev.phi;
    model.noise_sigma = std::sqrt(c0 * lev.variance_ratio);
  }
  if (q == 0) {
    model.projected = reflect_roots(model.phi);
    return model;
  }

  const auto k = static_cast<Eigen::Index>(p + q);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < p; ++a) beta(a) = model.phi[static_cast<std::size_t>(a)];
  Css cur = css_residuals(z, p, q, beta, true);
  double mu = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < kMaxIterations && !converged; ++it) {
    const Eigen::MatrixXd jtj = cur.jac.transpose() * cur.jac;
    const Eigen::VectorXd grad = cur.jac.transpose() * cur.w;
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = -a.ldlt().solve(grad);
      const Eigen::VectorXd trial = beta + step;
      Css next = css_residuals(z, p, q, trial, true);
      if (std::isfinite(next.sse) && next.sse <= cur.sse) {
        const double gain = cur.sse - next.sse;
        beta = trial;
        const bool small = step.norm() < 1e-9 || gain <= 1e-12 * cur.sse;
        cur = std::move(next);
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
        converged = small;
      } else {
        mu *= 10.0;
        if (mu > 1e10) {
          accepted = true;
          converged = true;  // no descent direction left: at a minimum
        }
      }
    }
  }
  if (!converged) throw Error("estimate: conditional sum of squares did not converge in 500 iterations");

  model.iterations = it;
  model.phi.assign(beta.data(), beta.data() + p);
  model.theta.assign(beta.data() + p, beta.data() + p + q);
  model.noise_sigma = std::sqrt(cur.sse / static_cast<double>(cur.w.size()));
  const bool a = reflect_roots(model.phi);
  const bool b = reflect_roots(model.theta);
  model.projected = a || b;
  return model;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n < 2) throw Error("autocorrelation: need at least 2 values");
  if (max_lag >= n) throw Error("autocorrelation: max_lag must be below the series length");
  const double m = mean_of(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  if (!(c0 > 0.0)) throw Error("zero variance");
  std::vector<double> r(max_lag + 1, 0.0);
  r[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) s += (x[t] - m) * (x[t + k] - m);
    r[k] = std::clamp(s / c0, -1.0, 1.0);
  }
  return r;
}

std::vector<double> durbin_levinson(std::span<const double> r) {
  if (r.empty()) throw Error("durbin_levinson: empty input");
  return levinson(r, r.size() - 1).pacf;
}

AcfResult acf_from_autocorrelations(std::vector<double> r, std::size_t n) {
  if (n == 0) throw Error("acf: sample size must be positive");
  AcfResult out;
  out.n = n;
  out.pacf = durbin_levinson(r);
  const double nn = static_cast<double>(n);
  out.quenouille_bound = kZ95 / std::sqrt(nn);
  out.bartlett.assign(r.size(), 0.0);
  double cum = 0.0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    out.bartlett[k] = kZ95 * std::sqrt((1.0 + 2.0 * cum) / nn);
    cum += r[k] * r[k];
  }
  out.short_series = n < 4 * (r.size() - 1);
  out.r = std::move(r);
  return out;
}

AcfResult acf_pacf(std::span<const double> x, std::size_t max_lag) {
  return acf_from_autocorrelations(autocorrelation(x, max_lag), x.size());
}

AcfResult acf_pacf(const ClimateSeries& series, std::size_t max_lag) {
  if (series.missing_count() > 0)
    throw Error("acf_pacf: series has " + std::to_string(series.missing_count()) +
                " missing values; interpolate or select first");
  const auto x = series.present();
  return acf_pacf(x, max_lag);
}

std::string_view to_string(ArmaKind k) {
  switch (k) {
    case ArmaKind::ar: return "AR";
    case ArmaKind::ma: return "MA";
    case ArmaKind::arma: return "ARMA";
  }
  return "AR";
}

Identification identify(const AcfResult& acf) {
  const std::size_t L = acf.max_lag();
  if (L < 1) throw Error("identify: need at least one lag");
  std::vector<bool> sig_pacf(L + 1, false), sig_acf(L + 1, false);
  for (std::size_t k = 1; k <= L; ++k) {
    sig_pacf[k] = std::abs(acf.pacf[k]) > acf.quenouille_bound;
    sig_acf[k] = std::abs(acf.r[k]) > acf.bartlett[k];
  }
  const Order ar = significant_order(sig_pacf);
  const Order ma = significant_order(sig_acf);
  Identification id;
  if (ar.order == 0 && ma.order == 0) {
    id.white_noise = true;
    return id;
  }
  if (ar.order == 0) return {ArmaKind::ma, 0, ma.order, false};
  if (ma.order == 0) return {ArmaKind::ar, ar.order, 0, false};
  if (ar.cut && ma.cut) {
    if (ar.order <= ma.order) return {ArmaKind::ar, ar.order, 0, false};
    return {ArmaKind::ma, 0, ma.order, false};
  }
  if (ar.cut) return {ArmaKind::ar, ar.order, 0, false};
  if (ma.cut) return {ArmaKind::ma, 0, ma.order, false};
  return {ArmaKind::arma, 1, 1, false};
}

std::string_view to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::flat: return "flat";
    case ProfileKind::hour_of_day: return "hour_of_day";
    case ProfileKind::day_of_year: return "day_of_year";
  }
  return "flat";
}

ProfileKind parse_profile_kind(std::string_view name) {
  if (name == "flat") return ProfileKind::flat;
  if (name == "hour_of_day") return ProfileKind::hour_of_day;
  if (name == "day_of_year") return ProfileKind::day_of_year;
  throw Error("unknown profile kind '" + std::string(name) + "'");
}

SeasonalProfile SeasonalProfile::constant(double mean, double std) {
  if (!(std > 0.0)) throw Error("profile: std must be positive");
  return SeasonalProfile{ProfileKind::flat, {mean}, {std}};
}

std::size_t SeasonalProfile::slot(Timestamp t) const {
  switch (kind) {
    case ProfileKind::flat: return 0;
    case ProfileKind::hour_of_day: return static_cast<std::size_t>(hour_of(t));
    case ProfileKind::day_of_year: return static_cast<std::size_t>(day_of_year(t) - 1);
  }
  return 0;
}

SeasonalProfile SeasonalProfile::fit(const ClimateSeries& series, ProfileKind kind) {
  const auto all = describe(series);
  const double overall_mean = all.mean;
  const double overall_std = all.std > 0.0 ? all.std : 1.0;
  if (kind == ProfileKind::flat) return constant(overall_mean, overall_std);

  const std::size_t slots = kind == ProfileKind::hour_of_day ? 24 : 366;
  // shifted sums keep the variance computation well conditioned
  std::vector<double> s1(slots, 0.0), s2(slots, 0.0), cnt(slots, 0.0);
  SeasonalProfile probe{kind, {}, {}};
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.values[i]) continue;
    const std::size_t s = probe.slot(series.times[i]);
    const double d = *series.values[i] - overall_mean;
    s1[s] += d;
    s2[s] += d * d;
    cnt[s] += 1.0;
  }
  if (kind == ProfileKind::day_of_year) {
    std::vector<double> w1(slots, 0.0), w2(slots, 0.0), wc(slots, 0.0);
    for (std::size_t s = 0; s < slots; ++s)
      for (int off = -15; off <= 15; ++off) {
        const auto j = static_cast<std::size_t>((static_cast<int>(s) + off + 366) % 366);
        w1[s] += s1[j];
        w2[s] += s2[j];
        wc[s] += cnt[j];
      }
    s1.swap(w1);
    s2.swap(w2);
    cnt.swap(wc);
  }
  SeasonalProfile out{kind, std::vector<double>(slots, overall_mean), std::vector<double>(slots, overall_std)};
  for (std::size_t s = 0; s < slots; ++s) {
    if (cnt[s] < 1.0) continue;
    const double m = s1[s] / cnt[s];
    out.mean[s] = overall_mean + m;
    if (cnt[s] >= 2.0) {
      const double var = (s2[s] - cnt[s] * m * m) / (cnt[s] - 1.0);
      if (var > 0.0) out.std[s] = std::sqrt(var);
    }
  }
  return out;
}

bool roots_outside_unit_circle(std::span<const double> c) {
  if (c.empty()) return true;
  for (const auto& root : reciprocal_roots(c))
    if (std::abs(root) >= 1.0) return false;
  return true;
}

bool reflect_roots(std::vector<double>& c) {
  if (c.empty() || roots_outside_unit_circle(c)) return false;
  auto roots = reciprocal_roots(c);
  constexpr double kMaxModulus = 0.999;
  for (auto& z : roots) {
    if (std::abs(z) > 1.0) z = 1.0 / std::conj(z);
    if (std::abs(z) > kMaxModulus) z *= kMaxModulus / std::abs(z);
  }
  // Π(x - z_i) = x^n + a_1·x^(n-1) + ... + a_n, and c_i = -a_i
  std::vector<std::complex<double>> poly{1.0};
  for (const auto& z : roots) {
    std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= z * poly[i];
    }
    poly.swap(next);
  }
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = -poly[i + 1].real();
  return true;
}

ArmaModel estimate(std::span<const double> z, int p, int q) {
  if (z.empty()) throw Error("estimate: empty series");
  const double m = mean_of(z);
  std::vector<double> centered(z.begin(), z.end());
  for (double& v : centered) v -= m;
  ArmaModel model = fit_centered(centered, p, q);
  model.profile = SeasonalProfile::constant(m, 1.0);
  return model;
}

std::vector<double> standardize(const SeasonalProfile& profile, const ClimateSeries& series) {
  std::vector<double> z;
  z.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.values[i]) throw Error("standardize: series has missing values; interpolate or select first");
    z.push_back((*series.values[i] - profile.mean_at(series.times[i])) / profile.std_at(series.times[i]));
  }
  return z;
}

ArmaModel estimate(const ClimateSeries& series, int p, int q, std::optional<ProfileKind> profile) {
  const ProfileKind kind =
      profile.value_or(series.cadence == Cadence::hourly ? ProfileKind::hour_of_day : ProfileKind::day_of_year);
  const auto prof = SeasonalProfile::fit(series, kind);
  auto z = standardize(prof, series);
  const double m = mean_of(z);
  for (double& v : z) v -= m;
  ArmaModel model = fit_centered(z, p, q);
  model.profile = prof;
  for (std::size_t s = 0; s < model.profile.mean.size(); ++s) model.profile.mean[s] += m * model.profile.std[s];
  model.variable = series.variable;
  model.cadence = series.cadence;
  model.clip = true;
  return model;
}

std::vector<double> innovations(const ArmaModel& model, std::span<const double> z) {
  const auto p = static_cast<std::size_t>(model.p);
  if (z.size() <= p) throw Error("innovations: series shorter than the AR order");
  std::vector<double> w(z.size() - p, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::size_t t = i + p;
    double v = z[t];
    for (std::size_t a = 1; a <= p; ++a) v -= model.phi[a - 1] * z[t - a];
    for (std::size_t b = 1; b <= static_cast<std::size_t>(model.q) && b <= i; ++b) v += model.theta[b - 1] * w[i - b];
    w[i] = v;
  }
  return w;
}

ResidualReport diagnose(const ArmaModel& model, std::span<const double> z) {
  std::vector<double> x(z.begin(), z.end());
  if (model.profile.kind == ProfileKind::flat)
    for (double& v : x) v = (v - model.profile.mean[0]) / model.profile.std[0];
  const auto w = innovations(model, x);
  if (w.size() <= kDiagnoseLags + 1) throw Error("diagnose: series too short for 20 residual lags");
  const auto acf = acf_from_autocorrelations(autocorrelation(w, kDiagnoseLags), w.size());

  ResidualReport rep;
  rep.r = acf.r;
  rep.bartlett = acf.bartlett;
  for (std::size_t k = 1; k <= kDiagnoseLags; ++k)
    if (std::abs(acf.r[k]) > acf.bartlett[k]) ++rep.exceedances;
  boost::math::binomial_distribution<double> binom(static_cast<double>(kDiagnoseLags), 0.05);
  rep.allowed = static_cast<int>(std::ceil(boost::math::quantile(binom, 0.95) - 1e-9));
  rep.pass = rep.exceedances <= rep.allowed;

  const double n = static_cast<double>(w.size());
  for (std::size_t k = 1; k <= kDiagnoseLags; ++k)
    rep.ljung_box += acf.r[k] * acf.r[k] / (n - static_cast<double>(k));
  rep.ljung_box *= n * (n + 2.0);
  rep.ljung_box_dof = std::max(1, static_cast<int>(kDiagnoseLags) - model.p - model.q);
  boost::math::chi_squared_distribution<double> chi(rep.ljung_box_dof);
  rep.ljung_box_p = boost::math::cdf(boost::math::complement(chi, rep.ljung_box));
  return rep;
}

ResidualReport diagnose(const ArmaModel& model, const ClimateSeries& series) {
  const auto z = standardize(model.profile, series);
  ArmaModel flat = model;
  flat.profile = SeasonalProfile::constant(0.0, 1.0);
  return diagnose(flat, z);
}

Simulation simulate(const ArmaModel& model, std::span<const Timestamp> times, Rng& rng) {
  if (static_cast<int>(model.phi.size()) != model.p || static_cast<int>(model.theta.size()) != model.q)
    throw Error("simulate: coefficient counts do not match the model orders");
  if (!roots_outside_unit_circle(model.phi)) throw Error("simulate: non-stationary AR polynomial");
  if (!(model.noise_sigma >= 0.0)) throw Error("simulate: negative noise sigma");
  const auto p = static_cast<std::size_t>(model.p);
  const auto q = static_cast<std::size_t>(model.q);
  const std::size_t burn = 10 * (p + q) + 50;
  const std::size_t total = burn + times.size();
  std::vector<double> x(total, 0.0), w(total, 0.0);
  for (std::size_t t = 0; t < total; ++t) {
    w[t] = model.noise_sigma * rng.normal();
    double v = w[t];
    for (std::size_t a = 1; a <= p && a <= t; ++a) v += model.phi[a - 1] * x[t - a];
    for (std::size_t b = 1; b <= q && b <= t; ++b) v -= model.theta[b - 1] * w[t - b];
    x[t] = v;
  }
  Simulation out;
  out.series.variable = model.variable;
  out.series.cadence = model.cadence;
  out.series.times.assign(times.begin(), times.end());
  out.series.values.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    double v = model.profile.mean_at(times[i]) + model.profile.std_at(times[i]) * x[burn + i];
    if (model.clip) clip_to_range(model.variable, v, out.clipped);
    out.series.values.emplace_back(v);
  }
  out.clip_rate = times.empty() ? 0.0 : static_cast<double>(out.clipped) / static_cast<double>(times.size());
  return out;
}

Simulation simulate(const ArmaModel& model, std::span<const Timestamp> times, std::uint64_t seed) {
  Rng rng(seed);
  return simulate(model, times, rng);
}

Simulation simulate(const ArmaModel& model, std::size_t n, std::uint64_t seed, Timestamp start) {
  std::vector<Timestamp> times(n);
  const Timestamp step = step_seconds(model.cadence);
  for (std::size_t i = 0; i < n; ++i) times[i] = start + static_cast<Timestamp>(i) * step;
  return simulate(model, times, seed);
}

}  // namespace climgen
