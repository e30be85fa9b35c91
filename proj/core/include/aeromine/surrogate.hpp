#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aeromine/design_space.hpp"
#include "aeromine/random.hpp"

namespace aeromine {

struct Sample {
  UnitVector input;
  double target = 0.0;
};

using Dataset = std::vector<Sample>;

struct FitHyper {
  std::size_t hidden_units = 10;
  double learning_rate = 0.1;
  std::size_t epochs = 1000;
  std::size_t early_stop_patience = 50;
  double init_range = 0.5;

  bool operator==(const FitHyper&) const = default;
};

std::vector<Violation> validate_fit_hyper(const FitHyper& hyper);

struct TrainMeta {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  RandomKey seed;
  /// Full-batch loss recorded at the start of every epoch.
  std::vector<double> loss_curve;
};

/// One tanh hidden layer, linear output, trained on z-scored targets.
///
/// Parameters are stored flat in the order: hidden weights (row-major,
/// hidden x input), hidden biases, output weights, output bias. gradient()
/// uses the same layout.
class SurrogateModel {
 public:
  SurrogateModel() = default;
  SurrogateModel(std::size_t input_dim, std::size_t hidden_units);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_units() const { return hidden_units_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  double target_mean = 0.0;
  double target_std = 1.0;
  /// Set when every training target was identical; output weights are zero.
  bool constant_target = false;
  TrainMeta meta;

  /// Network output in normalized target units.
  double predict_normalized(std::span<const double> x) const;
  /// Prediction in raw fitness units. Throws on dimension mismatch.
  double predict(const UnitVector& x) const;

  double normalize_target(double y) const { return (y - target_mean) / target_std; }

  std::size_t output_weight_offset() const { return hidden_units_ * input_dim_ + hidden_units_; }
  std::size_t output_bias_offset() const { return params_.size() - 1; }

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_units_ = 0;
  std::vector<double> params_;
};

/// Full-batch gradient descent on mean squared error. The returned weights are
/// the best seen; training stops once the loss has not improved by 1e-9 for
/// `early_stop_patience` epochs.
SurrogateModel fit(const Dataset& data, const FitHyper& hyper, RandomStream& stream);

/// Mean squared error in normalized target space.
double loss(const SurrogateModel& model, const Dataset& data);

/// Gradient of the row's squared error (normalized space) with respect to
/// every parameter, in parameters() order.
std::vector<double> gradient(const SurrogateModel& model, const Sample& row);

}  // namespace aeromine
