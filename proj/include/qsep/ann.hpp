#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qsep/measurement.hpp"
#include "qsep/quantum.hpp"

namespace qsep {

/// sigmoid(w . x + w0): the learned CHSH operator.
struct LinearModel {
  std::array<double, 4> w{};
  double w0 = 0.0;
};

/// sigmoid(W2 . relu(W1 x + w01) + w02) with W1 stored row-major (n_ne x 4).
struct MlpModel {
  int n_ne = 1;
  std::vector<double> W1;
  std::vector<double> w01;
  std::vector<double> W2;
  double w02 = 0.0;

  /// All-zero network of width n (n >= 1).
  static MlpModel zeros(int n);
  double& w1(int j, int k) { return W1[std::size_t(j) * 4 + k]; }
  double w1(int j, int k) const { return W1[std::size_t(j) * 4 + k]; }
};

using Model = std::variant<LinearModel, MlpModel>;

/// Architecture request; n_ne == 0 means the linear model.
struct Arch {
  int n_ne = 0;
  bool is_linear() const { return n_ne == 0; }
  std::string name() const;
};

Arch arch_of(const Model& m);

/// Parameters flattened as w1..w4, w0 (linear) or W1, w01, W2, w02 (mlp).
std::vector<double> flatten(const Model& m);
/// Inverse of flatten; throws std::invalid_argument on a size mismatch.
Model unflatten(const Arch& arch, std::span<const double> params);

/// Logistic function clamped into the open interval (0, 1).
double sigmoid(double z);

double forward(const LinearModel& m, const FeatureVector& x);
double forward(const MlpModel& m, const FeatureVector& x);
double forward(const Model& m, const FeatureVector& x);

/// Binary cross-entropy with the prediction clamped to [1e-12, 1 - 1e-12].
double bce_loss(double pred, int label);

struct Example {
  FeatureVector x{};
  int y = 0;
};

double mean_loss(const Model& m, std::span<const Example> batch);

/// Exact gradient of the mean BCE loss, shaped like the model. The ReLU
/// subgradient at 0 is 0. Accumulation runs in sample-index order.
Model gradients(const Model& m, std::span<const Example> batch);

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 20000;
  double init_halfwidth = 0.5;
  std::uint64_t seed = 20180601;
  double threshold = 0.5;
  /// Times the learning rate may be halved after a loss increase.
  int max_halvings = 10;
  /// Train on z-scored features and fold the scaling back into the first
  /// layer afterwards; the returned model always takes raw features.
  bool standardize = true;
};

struct TrainReport {
  std::vector<double> loss;  // loss at the start of each epoch, plus the final loss
  double train_match_rate = 0.0;
  double final_learning_rate = 0.0;
  int halvings = 0;
  double wall_seconds = 0.0;
  TrainConfig config;
};

class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform initialization in [-h, h] from cfg.seed.
Model init_model(const Arch& arch, const TrainConfig& cfg);

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Full-batch gradient descent. Throws DegenerateDataError on an empty or
/// single-class batch.
TrainResult train(std::span<const Example> data, const Arch& arch, const TrainConfig& cfg);

/// Entangled iff forward >= threshold.
Separability predict(const Model& m, const FeatureVector& x, double threshold = 0.5);

double match_rate(const Model& m, std::span<const Example> data, double threshold = 0.5);

int to_int(Separability s);

}  // namespace qsep
