#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ebu/mdp.hpp"

namespace ebu {

/// What an approximator sees of a state: the id (tabular) and a feature vector (linear, dense).
struct Observation {
  StateId state = 0;
  std::vector<double> features;
};

enum class ApproximatorKind { kTabular, kLinear, kDense };

std::string to_string(ApproximatorKind kind);
ApproximatorKind parse_approximator_kind(const std::string& name);

/// Layer sizes from input to output. Tabular: {num_states, num_actions}. Linear:
/// {num_features, num_actions}. Dense: {num_features, hidden..., num_actions} with
/// rectifier hidden units and an identity output layer.
struct QFunctionShape {
  ApproximatorKind kind = ApproximatorKind::kTabular;
  std::vector<std::size_t> layers;

  std::size_t num_inputs() const { return layers.front(); }
  std::size_t num_actions() const { return layers.back(); }
  std::size_t parameter_count() const;
  bool operator==(const QFunctionShape&) const = default;
};

struct Sample {
  const Observation* observation;
  ActionId action;
  double target;
};

/// Parametric action-value function Q(s, .; theta) behind one interface.
///
/// Parameters are stored flat. Dense layers are laid out as W (out x in, row-major)
/// followed by b (out). Linear has no bias, so one-hot features reproduce a table
/// exactly. Training minimizes 0.5 * mean (y - Q(s, a))^2 with plain gradient descent.
class QFunction {
 public:
  QFunction() = default;
  /// Zero parameters.
  explicit QFunction(QFunctionShape shape);
  /// Tabular and linear start at zero; dense weights are drawn uniformly in
  /// +-1/sqrt(fan_in) with zero biases.
  QFunction(QFunctionShape shape, Rng& rng);

  static QFunction tabular(std::size_t num_states, std::size_t num_actions);
  static QFunction linear(std::size_t num_features, std::size_t num_actions);
  static QFunction dense(std::size_t num_features, std::vector<std::size_t> hidden, std::size_t num_actions, Rng& rng);

  const QFunctionShape& shape() const noexcept { return shape_; }
  ApproximatorKind kind() const noexcept { return shape_.kind; }
  std::size_t num_actions() const { return shape_.num_actions(); }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  /// One value per action. Throws InvalidArgument on shape mismatch.
  std::vector<double> predict(const Observation& obs) const;

  /// d Q(obs, action) / d theta, same layout as parameters().
  std::vector<double> gradient(const Observation& obs, ActionId action) const;

  /// One descent step on 0.5 * mean (target - Q)^2; returns the loss before the step.
  double grad_step(std::span<const Sample> batch, double lr);

  /// 0.5 * mean squared error of the batch.
  double loss(std::span<const Sample> batch) const;

  /// Deep copy used as the target network.
  QFunction sync_target() const { return *this; }

  /// Views a tabular approximator as a QTable.
  QTable to_table() const;

  void save(const std::filesystem::path& path) const;
  static QFunction load(const std::filesystem::path& path);

  bool operator==(const QFunction&) const = default;

 private:
  void check(const Observation& obs) const;
  /// Forward pass keeping every layer's activations.
  std::vector<std::vector<double>> forward(const std::vector<double>& input) const;

  QFunctionShape shape_;
  std::vector<double> params_;
};

using TargetNetwork = QFunction;

/// Largest relative error between the analytic gradient of Q(obs, action) and central
/// differences with step h. Directions where both are below 1e-10 are skipped.
double finite_diff_check(const QFunction& q, const Observation& obs, ActionId action, double h);

}  // namespace ebu
