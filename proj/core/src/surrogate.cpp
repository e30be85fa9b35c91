#include "aeromine/surrogate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aeromine {

std::vector<Violation> validate_fit_hyper(const FitHyper& h) {
  std::vector<Violation> out;
  if (h.hidden_units == 0) out.push_back({"hidden_units", "must be positive"});
  if (!(h.learning_rate > 0.0) || !std::isfinite(h.learning_rate)) out.push_back({"learning_rate", "must be positive"});
  if (h.epochs == 0) out.push_back({"epochs", "must be positive"});
  if (h.early_stop_patience == 0) out.push_back({"early_stop_patience", "must be positive"});
  if (h.early_stop_patience > h.epochs) out.push_back({"early_stop_patience", "must not exceed epochs"});
  if (!(h.init_range > 0.0) || !std::isfinite(h.init_range)) out.push_back({"init_range", "must be positive"});
  return out;
}

SurrogateModel::SurrogateModel(std::size_t input_dim, std::size_t hidden_units)
    : input_dim_(input_dim), hidden_units_(hidden_units), params_(hidden_units * input_dim + 2 * hidden_units + 1, 0.0) {}

double SurrogateModel::predict_normalized(std::span<const double> x) const {
  const std::size_t d = input_dim_;
  const double* w1 = params_.data();
  const double* b1 = w1 + hidden_units_ * d;
  const double* w2 = b1 + hidden_units_;
  double out = params_.back();
  for (std::size_t j = 0; j < hidden_units_; ++j) {
    double a = b1[j];
    const double* row = w1 + j * d;
    for (std::size_t k = 0; k < d; ++k) a += row[k] * x[k];
    out += w2[j] * std::tanh(a);
  }
  return out;
}

double SurrogateModel::predict(const UnitVector& x) const {
  if (x.size() != input_dim_) {
    throw std::invalid_argument("predict: input has " + std::to_string(x.size()) + " coordinates, model expects " +
                                std::to_string(input_dim_));
  }
  return predict_normalized(x.coords) * target_std + target_mean;
}

namespace {

void check_dataset(const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  const std::size_t d = data.front().input.size();
  for (const auto& s : data) {
    if (s.input.size() != d) throw std::invalid_argument("dataset rows have differing input dimensions");
    if (!std::isfinite(s.target)) throw std::invalid_argument("non-finite target");
  }
}

// Full-batch loss and (optionally) the gradient of the mean squared error.
double batch_loss(const SurrogateModel& model, std::span<const double> inputs, std::span<const double> targets,
                  std::vector<double>* grad, std::vector<double>& hidden) {
  const std::size_t n = targets.size();
  const std::size_t d = model.input_dim();
  const std::size_t h = model.hidden_units();
  const auto params = model.parameters();
  const double* w1 = params.data();
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double b2 = params.back();
  double* g_w1 = nullptr;
  double* g_b1 = nullptr;
  double* g_w2 = nullptr;
  if (grad != nullptr) {
    grad->assign(params.size(), 0.0);
    g_w1 = grad->data();
    g_b1 = g_w1 + h * d;
    g_w2 = g_b1 + h;
  }
  hidden.resize(h);
  double total = 0.0;
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = inputs.data() + r * d;
    double out = b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = b1[j];
      const double* row = w1 + j * d;
      for (std::size_t k = 0; k < d; ++k) a += row[k] * x[k];
      hidden[j] = std::tanh(a);
      out += w2[j] * hidden[j];
    }
    const double err = out - targets[r];
    total += err * err;
    if (grad == nullptr) continue;
    const double g = scale * err;
    grad->back() += g;
    for (std::size_t j = 0; j < h; ++j) {
      g_w2[j] += g * hidden[j];
      const double dh = g * w2[j] * (1.0 - hidden[j] * hidden[j]);
      g_b1[j] += dh;
      double* row = g_w1 + j * d;
      for (std::size_t k = 0; k < d; ++k) row[k] += dh * x[k];
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace

SurrogateModel fit(const Dataset& data, const FitHyper& hyper, RandomStream& stream) {
  check_dataset(data);
  if (!validate_fit_hyper(hyper).empty()) throw std::invalid_argument("invalid fit hyperparameters");
  const std::size_t n = data.size();
  const std::size_t d = data.front().input.size();

  SurrogateModel model(d, hyper.hidden_units);
  model.meta.seed = stream.key();

  double mean = 0.0;
  for (const auto& s : data) mean += s.target;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& s : data) var += (s.target - mean) * (s.target - mean);
  var /= static_cast<double>(n);
  const double std_dev = std::sqrt(var);

  for (double& w : model.parameters()) w = (2.0 * stream.uniform() - 1.0) * hyper.init_range;
  model.target_mean = mean;

  if (!(std_dev > 1e-12 * std::max(1.0, std::abs(mean)))) {
    model.target_std = 1.0;
    model.constant_target = true;
    auto params = model.parameters();
    for (std::size_t j = model.output_weight_offset(); j < params.size(); ++j) params[j] = 0.0;
    model.meta.final_loss = 0.0;
    return model;
  }
  model.target_std = std_dev;

  std::vector<double> inputs;
  inputs.reserve(n * d);
  std::vector<double> targets;
  targets.reserve(n);
  for (const auto& s : data) {
    inputs.insert(inputs.end(), s.input.coords.begin(), s.input.coords.end());
    targets.push_back((s.target - mean) / std_dev);
  }

  std::vector<double> grad;
  std::vector<double> hidden;
  std::vector<double> best_params(model.parameters().begin(), model.parameters().end());
  double best = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;
  auto params = model.parameters();
  model.meta.loss_curve.reserve(hyper.epochs);
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double current = batch_loss(model, inputs, targets, &grad, hidden);
    model.meta.loss_curve.push_back(current);
    model.meta.epochs_run = epoch + 1;
    if (current < best - 1e-9) {
      best = current;
      best_params.assign(params.begin(), params.end());
      stall = 0;
    } else if (++stall >= hyper.early_stop_patience) {
      break;
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= hyper.learning_rate * grad[i];
  }
  // The last update may have improved things; include it.
  const double last = batch_loss(model, inputs, targets, nullptr, hidden);
  if (last < best) {
    best = last;
    best_params.assign(params.begin(), params.end());
  }
  std::copy(best_params.begin(), best_params.end(), params.begin());
  model.meta.final_loss = best;
  return model;
}

double loss(const SurrogateModel& model, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("loss: empty dataset");
  double total = 0.0;
  for (const auto& s : data) {
    if (s.input.size() != model.input_dim()) throw std::invalid_argument("loss: dimension mismatch");
    const double err = model.predict_normalized(s.input.coords) - model.normalize_target(s.target);
    total += err * err;
  }
  return total / static_cast<double>(data.size());
}

std::vector<double> gradient(const SurrogateModel& model, const Sample& row) {
  if (row.input.size() != model.input_dim()) throw std::invalid_argument("gradient: dimension mismatch");
  // Squared error of one row equals the batch MSE with n = 1.
  const double target = model.normalize_target(row.target);
  std::vector<double> grad;
  std::vector<double> hidden;
  batch_loss(model, row.input.coords, std::span<const double>(&target, 1), &grad, hidden);
  return grad;
}

}  // namespace aeromine
