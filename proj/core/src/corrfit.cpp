#include "climgen/corrfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "climgen/error.hpp"

namespace climgen {

bool Term::is_intercept() const {
  return std::all_of(powers.begin(), powers.end(), [](int p) { return p == 0; });
}

double Term::evaluate(std::span<const double> x) const {
  double v = 1.0;
  for (std::size_t j = 0; j < powers.size(); ++j)
    for (int k = 0; k < powers[j]; ++k) v *= x[j];
  return v;
}

std::string Term::label(std::span<const std::string> names) const {
  if (is_intercept()) return "1";
  std::string out;
  for (std::size_t j = 0; j < powers.size(); ++j) {
    if (powers[j] == 0) continue;
    if (!out.empty()) out += '*';
    out += j < names.size() ? names[j] : "x" + std::to_string(j);
    if (powers[j] > 1) out += "^" + std::to_string(powers[j]);
  }
  return out;
}

bool RegressionTemplate::has_intercept() const {
  return std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.is_intercept(); });
}

namespace {

const std::map<std::string, std::string, std::less<>>& aliases() {
  static const std::map<std::string, std::string, std::less<>> table{
      {"angstrom_linear", "poly1"}, {"angstrom_black", "poly1"}, {"hay", "poly1"},
      {"hay_inverse", "poly1"},     {"page", "poly1"},           {"iqbal", "poly1"},
      {"rangarajan", "poly1"},      {"barr", "poly1"},           {"castagnoli", "poly1"},
      {"erbs", "poly3"},            {"klein", "multilinear"},    {"gopinathan1", "multilinear"},
      {"gopinathan2", "multilinear"}, {"soler", "multilinear"},
  };
  return table;
}

Term single(std::size_t m, std::size_t j, int power) {
  Term t{std::vector<int>(m, 0)};
  t.powers[j] = power;
  return t;
}

std::vector<Term> parse_custom(std::string_view spec, std::size_t m) {
  std::vector<Term> terms;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find('+', start);
    if (end == std::string_view::npos) end = spec.size();
    std::string_view tok = spec.substr(start, end - start);
    if (tok.empty()) throw Error("template: empty term in '" + std::string(spec) + "'");
    Term term{std::vector<int>(m, 0)};
    if (tok != "1") {
      std::size_t fs = 0;
      while (fs <= tok.size()) {
        auto fe = tok.find('*', fs);
        if (fe == std::string_view::npos) fe = tok.size();
        std::string_view f = tok.substr(fs, fe - fs);
        if (f.size() < 2 || f[0] != 'x') throw Error("template: bad factor '" + std::string(f) + "'");
        const auto caret = f.find('^');
        const std::string idx(f.substr(1, caret == std::string_view::npos ? f.size() - 1 : caret - 1));
        const int power = caret == std::string_view::npos ? 1 : std::stoi(std::string(f.substr(caret + 1)));
        const std::size_t j = std::stoul(idx);
        if (j >= m) throw Error("template: predictor index x" + idx + " out of range");
        if (power < 1) throw Error("template: powers must be >= 1");
        term.powers[j] += power;
        fs = fe + 1;
      }
    }
    terms.push_back(std::move(term));
    start = end + 1;
  }
  return terms;
}

}  // namespace

RegressionTemplate make_template(std::string_view id, std::size_t m) {
  if (m == 0) throw Error("template: at least one predictor required");
  RegressionTemplate t{std::string(id), m, {}};
  if (id.starts_with("custom:")) {
    t.terms = parse_custom(id.substr(7), m);
    return t;
  }
  std::string_view shape = id;
  if (auto it = aliases().find(id); it != aliases().end()) shape = it->second;

  if (shape == "poly1" || shape == "poly2" || shape == "poly3") {
    if (m != 1) throw Error("template " + std::string(id) + " takes exactly one predictor");
    const int degree = shape.back() - '0';
    for (int d = 0; d <= degree; ++d) t.terms.push_back(single(1, 0, d));
  } else if (shape == "multilinear") {
    t.terms.push_back(Term{std::vector<int>(m, 0)});
    for (std::size_t j = 0; j < m; ++j) t.terms.push_back(single(m, j, 1));
  } else {
    throw Error("unknown correlation template '" + std::string(id) + "'");
  }
  return t;
}

std::vector<std::string> template_names() {
  std::vector<std::string> names{"poly1", "poly2", "poly3", "multilinear"};
  for (const auto& [k, v] : aliases()) names.push_back(k);
  return names;
}

RegressionTemplate CorrelationModel::regression_template() const {
  return make_template(template_id, predictors.size());
}

CorrelationModel fit_correlation(std::string_view template_id, Variable response,
                                 std::vector<Variable> predictors,
                                 const std::vector<std::vector<double>>& x, std::span<const double> y,
                                 const SelectionCriteria& criteria) {
  const auto tmpl = make_template(template_id, predictors.size());
  const std::size_t n = y.size();
  const std::size_t p = tmpl.parameter_count();
  if (x.size() != n) throw Error("fit_correlation: predictor rows and responses differ in length");
  if (n < p) throw Error("fit_correlation: insufficient data (n=" + std::to_string(n) + " < " +
                         std::to_string(p) + " parameters)");

  std::vector<std::string> names;
  for (auto v : predictors) names.emplace_back(to_string(v));

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != predictors.size()) throw Error("fit_correlation: ragged predictor row");
    for (std::size_t k = 0; k < p; ++k)
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = tmpl.terms[k].evaluate(x[i]);
    rhs(static_cast<Eigen::Index>(i)) = y[i];
  }
  Eigen::VectorXd norms = design.colwise().norm().transpose();
  for (Eigen::Index k = 0; k < norms.size(); ++k)
    if (norms(k) == 0.0)
      throw Error("fit_correlation: rank-deficient design, column '" +
                  tmpl.terms[static_cast<std::size_t>(k)].label(names) + "' is identically zero");
  const Eigen::MatrixXd scaled = design * norms.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(p)) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < perm.size(); ++k) {
      if (!cols.empty()) cols += ", ";
      cols += "'" + tmpl.terms[static_cast<std::size_t>(perm(k))].label(names) + "'";
    }
    throw Error("fit_correlation: rank-deficient design, collinear column(s) " + cols);
  }
  const Eigen::VectorXd beta = norms.cwiseInverse().asDiagonal() * qr.solve(rhs);

  CorrelationModel model;
  model.template_id = std::string(template_id);
  model.response = response;
  model.predictors = std::move(predictors);
  model.coefficients.assign(beta.data(), beta.data() + beta.size());
  model.criteria = criteria;
  model.observed_x = x;
  model.observed_y.assign(y.begin(), y.end());
  for (std::size_t j = 0; j < model.predictors.size(); ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : x) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    model.predictor_ranges.emplace_back(lo, hi);
  }

  auto& d = model.diagnostics;
  const Eigen::VectorXd resid = rhs - design * beta;
  const double sse = resid.squaredNorm();
  const double ybar = rhs.mean();
  const double sst = tmpl.has_intercept() ? (rhs.array() - ybar).square().sum() : rhs.squaredNorm();
  d.n = n;
  d.dof = n - p;
  d.low_dof = n < p + 2;
  d.r2 = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : (sse == 0.0 ? 1.0 : 0.0);
  d.residual_std = d.dof > 0 ? std::sqrt(sse / static_cast<double>(d.dof)) : 0.0;
  const std::size_t p_prime = tmpl.has_intercept() ? p - 1 : p;
  if (d.r2 >= 1.0 || sse == 0.0) {
    d.f_statistic = std::numeric_limits<double>::infinity();
  } else if (p_prime > 0 && d.dof > 0) {
    d.f_statistic = (d.r2 / static_cast<double>(p_prime)) / ((1.0 - d.r2) / static_cast<double>(d.dof));
  }

  // cov(beta) = σ²·D⁻¹·P·R⁻¹·R⁻ᵀ·Pᵀ·D⁻¹ with D the column norms
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p))
                                .template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
  const Eigen::MatrixXd perm_cov = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation().indices();
  Eigen::MatrixXd unscaled_inv(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(p); ++a)
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(p); ++b)
      unscaled_inv(perm(a), perm(b)) = perm_cov(a, b) / (norms(perm(a)) * norms(perm(b)));
  const double sigma2 = d.dof > 0 ? sse / static_cast<double>(d.dof) : 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    const double se = std::sqrt(std::max(0.0, sigma2 * unscaled_inv(static_cast<Eigen::Index>(k),
                                                                    static_cast<Eigen::Index>(k))));
    d.std_errors.push_back(se);
    const double b = model.coefficients[k];
    d.t_statistics.push_back(se > 0.0 ? b / se
                                      : (b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b)));
  }
  return model;
}

CorrelationModel fit_correlation(std::string_view template_id, const ClimateSeries& response,
                                 std::span<const ClimateSeries> predictors,
                                 const SelectionCriteria& criteria,
                                 std::span<const ClimateSeries> companions) {
  std::vector<ClimateSeries> pool(predictors.begin(), predictors.end());
  pool.insert(pool.end(), companions.begin(), companions.end());
  const auto selected = select(response, criteria, pool);

  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (!selected.values[i]) continue;
    std::vector<double> row;
    for (const auto& pred : predictors) {
      const auto idx = pred.find(selected.times[i]);
      if (!idx || !pred.values[*idx]) break;
      row.push_back(*pred.values[*idx]);
    }
    if (row.size() != predictors.size()) continue;
    x.push_back(std::move(row));
    y.push_back(*selected.values[i]);
  }
  std::vector<Variable> vars;
  for (const auto& pred : predictors) vars.push_back(pred.variable);
  return fit_correlation(template_id, response.variable, std::move(vars), x, y, criteria);
}

double evaluate(const CorrelationModel& model, std::span<const double> x, bool guard) {
  if (x.size() != model.predictors.size())
    throw Error("evaluate: expected " + std::to_string(model.predictors.size()) + " predictor values, got " +
                std::to_string(x.size()));
  if (guard) {
    for (std::size_t j = 0; j < x.size() && j < model.predictor_ranges.size(); ++j) {
      const auto [lo, hi] = model.predictor_ranges[j];
      if (x[j] < lo || x[j] > hi)
        throw Error("evaluate: " + std::string(to_string(model.predictors[j])) + " = " + format_number(x[j]) +
                    " outside fitted range");
    }
  }
  const auto tmpl = model.regression_template();
  double v = 0.0;
  for (std::size_t k = 0; k < tmpl.terms.size(); ++k) v += model.coefficients[k] * tmpl.terms[k].evaluate(x);
  return v;
}

Significance significance(const CorrelationModel& model, double alpha) {
  const auto& d = model.diagnostics;
  const auto tmpl = model.regression_template();
  const std::size_t p = tmpl.parameter_count();
  const std::size_t p_prime = tmpl.has_intercept() ? p - 1 : p;
  Significance s;
  const bool exact = std::isinf(d.f_statistic);
  const double dof = static_cast<double>(d.n) - static_cast<double>(p_prime) - 1.0;
  s.testable = dof >= 1.0 && p_prime > 0;

  if (exact) {
    s.f_pass = true;
    s.f_p_value = 0.0;
  } else if (s.testable) {
    boost::math::fisher_f_distribution<double> f(static_cast<double>(p_prime), dof);
    s.f_p_value = boost::math::cdf(boost::math::complement(f, d.f_statistic));
    s.f_pass = s.f_p_value < alpha;
  }
  for (double t : d.t_statistics) {
    double pv = 1.0;
    if (std::isinf(t)) {
      pv = 0.0;
    } else if (dof >= 1.0) {
      boost::math::students_t_distribution<double> st(dof);
      pv = 2.0 * boost::math::cdf(boost::math::complement(st, std::abs(t)));
    }
    s.t_p_values.push_back(pv);
    s.t_pass.push_back(pv < alpha);
  }
  return s;
}

ErrorSurface error_surface(const CorrelationModel& model, const std::vector<std::vector<double>>& edges) {
  const std::size_t m = model.predictors.size();
  if (edges.size() != m) throw Error("error_surface: need one edge list per predictor");
  for (const auto& e : edges)
    if (e.size() < 2 || !std::is_sorted(e.begin(), e.end()))
      throw Error("error_surface: edges must be ascending with at least 2 entries");

  std::vector<std::size_t> dims(m);
  std::size_t total = 1;
  for (std::size_t j = 0; j < m; ++j) {
    dims[j] = edges[j].size() - 1;
    total *= dims[j];
  }
  std::vector<double> sums(total, 0.0);
  std::vector<std::size_t> counts(total, 0);
  for (std::size_t i = 0; i < model.observed_y.size(); ++i) {
    const auto& row = model.observed_x[i];
    std::size_t cell = 0;
    bool inside = true;
    for (std::size_t j = 0; j < m && inside; ++j) {
      const auto& e = edges[j];
      auto it = std::upper_bound(e.begin(), e.end(), row[j]);
      if (it == e.begin() || (it == e.end() && row[j] > e.back())) {
        inside = false;
        break;
      }
      std::size_t b = static_cast<std::size_t>(it - e.begin()) - 1;
      if (b >= dims[j]) b = dims[j] - 1;  // right edge closes the last bin
      cell = cell * dims[j] + b;
    }
    if (!inside || model.observed_y[i] == 0.0) continue;
    const double fitted = evaluate(model, row);
    sums[cell] += 100.0 * (model.observed_y[i] - fitted) / model.observed_y[i];
    ++counts[cell];
  }

  ErrorSurface out;
  out.predictors = model.predictors;
  for (std::size_t c = 0; c < total; ++c) {
    ErrorCell cell;
    std::size_t rem = c;
    std::vector<std::size_t> idx(m);
    for (std::size_t j = m; j-- > 0;) {
      idx[j] = rem % dims[j];
      rem /= dims[j];
    }
    for (std::size_t j = 0; j < m; ++j) {
      cell.lower.push_back(edges[j][idx[j]]);
      cell.upper.push_back(edges[j][idx[j] + 1]);
    }
    cell.count = counts[c];
    if (counts[c] > 0) cell.mean_relative_error_pct = sums[c] / static_cast<double>(counts[c]);
    out.cells.push_back(std::move(cell));
  }
  return out;
}

std::string ErrorSurface::to_csv() const {
  std::ostringstream out;
  for (auto v : predictors) out << to_string(v) << "_lo," << to_string(v) << "_hi,";
  out << "count,mean_relative_error_pct\n";
  for (const auto& c : cells) {
    for (std::size_t j = 0; j < c.lower.size(); ++j)
      out << format_number(c.lower[j]) << ',' << format_number(c.upper[j]) << ',';
    out << c.count << ',';
    if (c.mean_relative_error_pct) out << format_number(*c.mean_relative_error_pct);
    out << '\n';
  }
  return out.str();
}

}  // namespace climgen
