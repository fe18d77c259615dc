#include "climgen/neuralfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "climgen/error.hpp"
#include "climgen/random.hpp"

namespace climgen {

namespace {

constexpr double kLambdaMax = 1e10;

void check_rows(const SampleMatrix& x, std::size_t d) {
  for (const auto& row : x)
    if (row.size() != d)
      throw Error("neural network: expected " + std::to_string(d) + " inputs, got " + std::to_string(row.size()));
}

// Output on already scaled inputs, scaled output units.
double forward_scaled(const NeuralModel& m, std::span<const double> xs) {
  const std::size_t d = m.input_count();
  const auto& w = m.weights;
  if (m.n_hidden == 0) {
    double out = w[d];
    for (std::size_t j = 0; j < d; ++j) out += w[j] * xs[j];
    return out;
  }
  const std::size_t out_base = m.n_hidden * (d + 1);
  double out = w[out_base + m.n_hidden];
  for (std::size_t h = 0; h < m.n_hidden; ++h) {
    const std::size_t base = h * (d + 1);
    double a = w[base + d];
    for (std::size_t j = 0; j < d; ++j) a += w[base + j] * xs[j];
    out += w[out_base + h] * std::tanh(a);
  }
  return out;
}

// Scaled output and its gradient with respect to the weights.
double gradient_scaled(const NeuralModel& m, std::span<const double> xs, double* grad) {
  const std::size_t d = m.input_count();
  const auto& w = m.weights;
  if (m.n_hidden == 0) {
    double out = w[d];
    for (std::size_t j = 0; j < d; ++j) {
      out += w[j] * xs[j];
      grad[j] = xs[j];
    }
    grad[d] = 1.0;
    return out;
  }
  const std::size_t out_base = m.n_hidden * (d + 1);
  double out = w[out_base + m.n_hidden];
  for (std::size_t h = 0; h < m.n_hidden; ++h) {
    const std::size_t base = h * (d + 1);
    double a = w[base + d];
    for (std::size_t j = 0; j < d; ++j) a += w[base + j] * xs[j];
    const double z = std::tanh(a);
    const double v = w[out_base + h];
    out += v * z;
    const double dz = v * (1.0 - z * z);
    for (std::size_t j = 0; j < d; ++j) grad[base + j] = dz * xs[j];
    grad[base + d] = dz;
    grad[out_base + h] = z;
  }
  grad[out_base + m.n_hidden] = 1.0;
  return out;
}

std::vector<double> scale_row(const NeuralModel& m, std::span<const double> x) {
  std::vector<double> xs(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) xs[j] = (x[j] - m.input_mean[j]) / m.input_std[j];
  return xs;
}

struct Scaled {
  Eigen::MatrixXd x;  // samples × inputs
  Eigen::VectorXd y;
};

double scaled_sse(const NeuralModel& m, const Scaled& s, Eigen::VectorXd& resid) {
  const auto n = s.x.rows();
  resid.resize(n);
  std::vector<double> row(static_cast<std::size_t>(s.x.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) row[static_cast<std::size_t>(j)] = s.x(i, j);
    resid(i) = forward_scaled(m, row) - s.y(i);
  }
  return resid.squaredNorm();
}

Eigen::MatrixXd scaled_jacobian(const NeuralModel& m, const Scaled& s) {
  const auto n = s.x.rows();
  const auto k = static_cast<Eigen::Index>(m.weights.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> j(n, k);
  std::vector<double> row(static_cast<std::size_t>(s.x.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < s.x.cols(); ++c) row[static_cast<std::size_t>(c)] = s.x(i, c);
    gradient_scaled(m, row, j.row(i).data());
  }
  return j;
}

}  // namespace

std::size_t NeuralModel::parameter_count(std::size_t d, std::size_t h) {
  return h == 0 ? d + 1 : h * (d + 1) + h + 1;
}

NeuralModel NeuralModel::zeros(std::size_t d, std::size_t h) {
  NeuralModel m;
  m.n_hidden = h;
  m.weights.assign(parameter_count(d, h), 0.0);
  m.input_mean.assign(d, 0.0);
  m.input_std.assign(d, 1.0);
  return m;
}

double forward(const NeuralModel& model, std::span<const double> x) {
  if (x.size() != model.input_count())
    throw Error("forward: expected " + std::to_string(model.input_count()) + " inputs, got " +
                std::to_string(x.size()));
  if (model.weights.size() != NeuralModel::parameter_count(model.input_count(), model.n_hidden))
    throw Error("forward: weight count does not match the architecture");
  const auto xs = scale_row(model, x);
  return model.output_mean + model.output_std * forward_scaled(model, xs);
}

std::vector<double> forward(const NeuralModel& model, const SampleMatrix& x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(forward(model, row));
  return out;
}

Eigen::MatrixXd jacobian(const NeuralModel& model, const SampleMatrix& x) {
  check_rows(x, model.input_count());
  Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(model.weights.size()));
  std::vector<double> grad(model.weights.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto xs = scale_row(model, x[i]);
    gradient_scaled(model, xs, grad.data());
    for (std::size_t k = 0; k < grad.size(); ++k)
      j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = model.output_std * grad[k];
  }
  return j;
}

double eqm(std::span<const double> outputs, std::span<const double> targets) {
  if (outputs.size() != targets.size()) throw Error("eqm: outputs and targets differ in length");
  if (outputs.empty()) throw Error("eqm: no samples");
  double s = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) s += (outputs[i] - targets[i]) * (outputs[i] - targets[i]);
  return s / static_cast<double>(outputs.size());
}

double eqm(const NeuralModel& model, const SampleMatrix& x, std::span<const double> targets) {
  const auto out = forward(model, x);
  return eqm(out, targets);
}

NeuralModel train_lm(const SampleMatrix& x, std::span<const double> targets, const TrainOptions& opt) {
  const std::size_t n = targets.size();
  if (x.size() != n) throw Error("train_lm: inputs and targets differ in length");
  if (n == 0) throw Error("train_lm: no samples");
  const std::size_t d = x.front().size();
  if (d == 0) throw Error("train_lm: no inputs");
  check_rows(x, d);
  for (double y : targets)
    if (!std::isfinite(y)) throw Error("train_lm: non-finite target");

  NeuralModel m = NeuralModel::zeros(d, opt.n_hidden);
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0, var = 0.0;
    for (const auto& row : x) mean += row[j];
    mean /= nn;
    for (const auto& row : x) var += (row[j] - mean) * (row[j] - mean);
    const double sd = std::sqrt(var / nn);
    m.input_mean[j] = mean;
    m.input_std[j] = sd > 0.0 ? sd : 1.0;
  }
  double ymean = std::accumulate(targets.begin(), targets.end(), 0.0) / nn;
  double yvar = 0.0;
  for (double y : targets) yvar += (y - ymean) * (y - ymean);
  const double ysd = std::sqrt(yvar / nn);
  const bool constant = !(ysd > 1e-12 * std::max(1.0, std::abs(ymean)));
  m.output_mean = constant ? targets[0] : ymean;
  m.output_std = constant ? 1.0 : ysd;
  m.report.few_samples = n < 10 * m.weights.size();

  if (constant) {
    m.report.stop_reason = "constant_target";
    m.report.eqm_history.push_back(0.0);
    return m;
  }

  Rng rng(opt.seed);
  for (double& w : m.weights) w = rng.uniform(-0.5, 0.5);

  Scaled s{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)),
           Eigen::VectorXd(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    const auto xs = scale_row(m, x[i]);
    for (std::size_t j = 0; j < d; ++j) s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[j];
    s.y(static_cast<Eigen::Index>(i)) = (targets[i] - m.output_mean) / m.output_std;
  }

  const double to_units = m.output_std * m.output_std / nn;
  Eigen::VectorXd resid;
  double sse = scaled_sse(m, s, resid);
  m.report.eqm_history.push_back(sse * to_units);
  double lambda = opt.lambda0;
  const auto k = static_cast<Eigen::Index>(m.weights.size());
  m.report.stop_reason = "max_iter";

  while (m.report.iterations < opt.max_iter) {
    const Eigen::MatrixXd j = scaled_jacobian(m, s);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * resid;
    bool accepted = false;
    bool stop = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      Eigen::VectorXd step = -ldlt.solve(g);
      const bool solved = ldlt.info() == Eigen::Success && step.allFinite();
      if (!solved) {
        if (lambda >= kLambdaMax) throw Error("train_lm: stalled (singular system at lambda >= 1e10)");
        lambda *= 10.0;
        ++m.report.rejected_steps;
        continue;
      }
      NeuralModel trial = m;
      for (Eigen::Index i = 0; i < k; ++i) trial.weights[static_cast<std::size_t>(i)] += step(i);
      Eigen::VectorXd trial_resid;
      const double trial_sse = scaled_sse(trial, s, trial_resid);
      if (std::isfinite(trial_sse) && trial_sse < sse) {
        const double gain = (sse - trial_sse) / nn;
        m.weights = std::move(trial.weights);
        resid = std::move(trial_resid);
        sse = trial_sse;
        lambda /= 10.0;
        ++m.report.iterations;
        m.report.eqm_history.push_back(sse * to_units);
        accepted = true;
        if (step.norm() < 1e-9) {
          m.report.stop_reason = "small_step";
          stop = true;
        } else if (gain < 1e-12) {
          m.report.stop_reason = "small_gain";
          stop = true;
        }
      } else {
        ++m.report.rejected_steps;
        if (lambda >= kLambdaMax) {
          m.report.stop_reason = "no_descent";
          stop = true;
          break;
        }
        lambda *= 10.0;
      }
    }
    if (stop) break;
  }
  m.report.final_lambda = lambda;
  m.residual_sigma = std::sqrt(sse * to_units);
  return m;
}

SweepResult sweep_hidden(const SampleMatrix& x, std::span<const double> targets, std::size_t min_hidden,
                         std::size_t max_hidden, const TrainOptions& options) {
  if (min_hidden > max_hidden) throw Error("sweep: empty hidden range");
  if (x.size() != targets.size()) throw Error("sweep: inputs and targets differ in length");
  if (x.size() < 5) throw Error("sweep: need at least 5 samples for an 80/20 split");
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::derive(options.seed, "sweep-split");
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  const std::size_t n_train = std::max<std::size_t>(1, (idx.size() * 4) / 5);

  SampleMatrix xt, xv;
  std::vector<double> yt, yv;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_train ? xt : xv).push_back(x[idx[i]]);
    (i < n_train ? yt : yv).push_back(targets[idx[i]]);
  }

  SweepResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t h = min_hidden; h <= max_hidden; ++h) {
    TrainOptions o = options;
    o.n_hidden = h;
    NeuralModel model = train_lm(xt, yt, o);
    SweepRow row{h, model.report.eqm_history.back(), eqm(model, xv, yv)};
    out.rows.push_back(row);
    if (row.validation_eqm < best) {
      best = row.validation_eqm;
      out.best = out.rows.size() - 1;
      out.model = std::move(model);
    }
  }
  return out;
}

AlignedSamples align_samples(const ClimateSeries& output, std::span<const ClimateSeries> inputs,
                             const SelectionCriteria& criteria, std::span<const ClimateSeries> companions) {
  std::vector<ClimateSeries> pool(inputs.begin(), inputs.end());
  pool.insert(pool.end(), companions.begin(), companions.end());
  const auto selected = select(output, criteria, pool);
  AlignedSamples out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (!selected.values[i]) continue;
    std::vector<double> row;
    for (const auto& in : inputs) {
      const auto k = in.find(selected.times[i]);
      if (!k || !in.values[*k]) break;
      row.push_back(*in.values[*k]);
    }
    if (row.size() != inputs.size()) continue;
    out.x.push_back(std::move(row));
    out.y.push_back(*selected.values[i]);
  }
  return out;
}

}  // namespace climgen
