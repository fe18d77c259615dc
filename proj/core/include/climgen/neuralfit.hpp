#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climgen/climdata.hpp"

namespace climgen {

struct TrainingReport {
  std::vector<double> eqm_history;  // initial value, then one entry per accepted step
  double final_lambda = 0.0;
  int iterations = 0;               // accepted steps
  int rejected_steps = 0;
  std::string stop_reason;          // max_iter | small_step | small_gain | no_descent | constant_target
  bool few_samples = false;         // fewer than 10 samples per parameter
};

/// One hidden tanh layer and a linear output, with inputs and output
/// standardized to zero mean and unit std.
///
/// Weight layout: for each hidden unit h, [w_h0 .. w_h(d-1), b_h]; then the
/// output [v_0 .. v_(H-1), c]. With no hidden unit the output is the affine
/// map [a_0 .. a_(d-1), c] of the scaled inputs.
struct NeuralModel {
  std::vector<Variable> inputs;
  Variable output = Variable::dry_bulb_temp;
  std::size_t n_hidden = 3;
  std::vector<double> weights;
  std::vector<double> input_mean;
  std::vector<double> input_std;
  double output_mean = 0.0;
  double output_std = 1.0;
  double residual_sigma = 0.0;  // sqrt of the final training eqm
  SelectionCriteria criteria;
  TrainingReport report;

  std::size_t input_count() const { return input_mean.size(); }
  static std::size_t parameter_count(std::size_t n_inputs, std::size_t n_hidden);
  /// Zero weights with identity scalers.
  static NeuralModel zeros(std::size_t n_inputs, std::size_t n_hidden);
};

using SampleMatrix = std::vector<std::vector<double>>;

double forward(const NeuralModel& model, std::span<const double> x);
std::vector<double> forward(const NeuralModel& model, const SampleMatrix& x);

/// Analytic ∂output/∂weight per sample (rows), in output units. This is also
/// ∂residual/∂weight for fixed targets.
Eigen::MatrixXd jacobian(const NeuralModel& model, const SampleMatrix& x);

/// (1/N)·Σ(s - y)².
double eqm(std::span<const double> outputs, std::span<const double> targets);
double eqm(const NeuralModel& model, const SampleMatrix& x, std::span<const double> targets);

struct TrainOptions {
  std::size_t n_hidden = 3;
  std::uint64_t seed = 1;
  int max_iter = 200;
  double lambda0 = 1e-2;
};

/// Levenberg-Marquardt on the scaled residuals:
/// Δw = -(JᵀJ + λI)⁻¹Jᵀe; λ ×10 on a rejected step and ÷10 on an accepted
/// one. Stops at max_iter, ‖Δw‖ < 1e-9 or an eqm gain below 1e-12. Initial
/// weights are uniform in [-0.5, 0.5]. A system that cannot be solved once
/// λ reaches 1e10 raises "stalled".
NeuralModel train_lm(const SampleMatrix& x, std::span<const double> targets, const TrainOptions& options = {});

struct SweepRow {
  std::size_t n_hidden = 0;
  double train_eqm = 0.0;
  double validation_eqm = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // index into rows
  NeuralModel model;     // best network, trained on the training split
};

/// Trains one network per hidden size on a seeded 80/20 split and keeps the
/// lowest validation eqm.
SweepResult sweep_hidden(const SampleMatrix& x, std::span<const double> targets, std::size_t min_hidden,
                         std::size_t max_hidden, const TrainOptions& options = {});

/// Rows of aligned, fully present (inputs, output) values after filtering
/// `output` by `criteria`; predicates may use inputs or companions.
struct AlignedSamples {
  SampleMatrix x;
  std::vector<double> y;
};
AlignedSamples align_samples(const ClimateSeries& output, std::span<const ClimateSeries> inputs,
                             const SelectionCriteria& criteria = {},
                             std::span<const ClimateSeries> companions = {});

}  // namespace climgen
