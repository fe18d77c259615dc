#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "climgen/climdata.hpp"

namespace climgen {

/// Monomial in the predictors: one exponent per predictor (all zero is the
/// intercept).
struct Term {
  std::vector<int> powers;
  bool is_intercept() const;
  double evaluate(std::span<const double> x) const;
  /// "1", "x0", "x0^2", "x0*x1" style label; with names, variable names.
  std::string label(std::span<const std::string> names = {}) const;
};

/// Linear-in-parameters regression template.
///
/// Built-in shapes: poly1, poly2, poly3 (one predictor), multilinear (any
/// number), and `custom:<terms>` where terms is a '+'-separated list such
/// as `1+x0+x0^2+x0*x1`. angstrom_linear is Kt = a + b·(S/S0). The named
/// correlation families of the solar literature (hay, klein, page, erbs, ...)
/// are registered as aliases of these shapes; their published coefficients
/// are not reproduced.
struct RegressionTemplate {
  std::string id;
  std::size_t predictor_count = 1;
  std::vector<Term> terms;

  bool has_intercept() const;
  std::size_t parameter_count() const { return terms.size(); }
};

RegressionTemplate make_template(std::string_view id, std::size_t predictor_count);
/// Names accepted by make_template (excluding custom:).
std::vector<std::string> template_names();

struct RegressionDiagnostics {
  double r2 = 0.0;
  double f_statistic = 0.0;
  std::vector<double> t_statistics;
  std::vector<double> std_errors;
  double residual_std = 0.0;
  std::size_t n = 0;
  std::size_t dof = 0;   // n - parameter count
  bool low_dof = false;  // n < parameter count + 2
};

struct CorrelationModel {
  std::string template_id;
  Variable response = Variable::dry_bulb_temp;
  std::vector<Variable> predictors;
  std::vector<double> coefficients;
  SelectionCriteria criteria;
  RegressionDiagnostics diagnostics;
  /// Observed range of each predictor, for the optional extrapolation guard.
  std::vector<std::pair<double, double>> predictor_ranges;
  /// Fitting data (rows of predictor values and responses); not persisted.
  std::vector<std::vector<double>> observed_x;
  std::vector<double> observed_y;

  RegressionTemplate regression_template() const;
};

/// Ordinary least squares through a column-pivoted Householder QR of the
/// column-normalised design matrix. Rank deficiency is an error naming the
/// dependent columns.
CorrelationModel fit_correlation(std::string_view template_id, Variable response,
                                 std::vector<Variable> predictors,
                                 const std::vector<std::vector<double>>& x, std::span<const double> y,
                                 const SelectionCriteria& criteria = {});

/// Series form: filters `response` by `criteria` (predicates may refer to the
/// predictors or to `companions`), then aligns predictors by timestamp and
/// drops rows with any missing value.
CorrelationModel fit_correlation(std::string_view template_id, const ClimateSeries& response,
                                 std::span<const ClimateSeries> predictors,
                                 const SelectionCriteria& criteria = {},
                                 std::span<const ClimateSeries> companions = {});

/// Template value at the coefficients. With `guard`, predictor values
/// outside the fitted range raise an error.
double evaluate(const CorrelationModel& model, std::span<const double> predictor_values,
                bool guard = false);

struct Significance {
  bool f_pass = false;
  double f_p_value = 1.0;
  std::vector<bool> t_pass;
  std::vector<double> t_p_values;
  bool testable = true;  // false when no residual degrees of freedom remain
};

/// F test of the regression (against F(p', n-p'-1)) and per-coefficient t
/// tests (Student-t, n-p'-1 dof), p' = non-intercept parameter count.
/// An exact fit reports F = +inf and passes.
Significance significance(const CorrelationModel& model, double alpha = 0.05);

struct ErrorCell {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t count = 0;
  std::optional<double> mean_relative_error_pct;  // missing for empty cells
};

struct ErrorSurface {
  std::vector<Variable> predictors;
  std::vector<ErrorCell> cells;
  std::string to_csv() const;
};

/// Mean signed relative error 100·(observed - fitted)/observed of the
/// retained observations per grid cell. `edges[j]` are the ascending bin
/// edges of predictor j. Observations with a zero response are skipped.
ErrorSurface error_surface(const CorrelationModel& model,
                           const std::vector<std::vector<double>>& edges);

}  // namespace climgen
