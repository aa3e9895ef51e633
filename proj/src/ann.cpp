#include "qsep/ann.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "qsep/random.hpp"

namespace qsep {

namespace {

constexpr double kLossEps = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double linear_logit(const LinearModel& m, const FeatureVector& x) {
  double z = m.w0;
  for (int k = 0; k < 4; ++k) z += m.w[k] * x[k];
  return z;
}

// Hidden activations are written to `h`; returns the output logit.
double mlp_logit(const MlpModel& m, const FeatureVector& x, std::vector<double>& h) {
  h.resize(m.n_ne);
  double z = m.w02;
  for (int j = 0; j < m.n_ne; ++j) {
    double a = m.w01[j];
    for (int k = 0; k < 4; ++k) a += m.w1(j, k) * x[k];
    h[j] = a > 0.0 ? a : 0.0;
    z += m.W2[j] * h[j];
  }
  return z;
}

void check_batch(std::span<const Example> batch) {
  if (batch.empty()) throw DegenerateDataError("empty batch");
}

}  // namespace

MlpModel MlpModel::zeros(int n) {
  if (n < 1) throw std::invalid_argument("MlpModel: hidden width must be at least 1");
  MlpModel m;
  m.n_ne = n;
  m.W1.assign(std::size_t(n) * 4, 0.0);
  m.w01.assign(n, 0.0);
  m.W2.assign(n, 0.0);
  return m;
}

std::string Arch::name() const { return is_linear() ? "linear" : "mlp"; }

Arch arch_of(const Model& m) {
  return std::visit(Overloaded{[](const LinearModel&) { return Arch{0}; },
                               [](const MlpModel& x) { return Arch{x.n_ne}; }},
                    m);
}

std::vector<double> flatten(const Model& m) {
  return std::visit(Overloaded{[](const LinearModel& x) {
                                 return std::vector<double>{x.w[0], x.w[1], x.w[2], x.w[3], x.w0};
                               },
                               [](const MlpModel& x) {
                                 std::vector<double> out = x.W1;
                                 out.insert(out.end(), x.w01.begin(), x.w01.end());
                                 out.insert(out.end(), x.W2.begin(), x.W2.end());
                                 out.push_back(x.w02);
                                 return out;
                               }},
                    m);
}

Model unflatten(const Arch& arch, std::span<const double> params) {
  if (arch.is_linear()) {
    if (params.size() != 5) throw std::invalid_argument("linear model needs 5 parameters");
    return LinearModel{{params[0], params[1], params[2], params[3]}, params[4]};
  }
  const std::size_t n = arch.n_ne;
  if (params.size() != 6 * n + 1) throw std::invalid_argument("mlp parameter count mismatch");
  MlpModel m = MlpModel::zeros(int(n));
  std::copy_n(params.begin(), 4 * n, m.W1.begin());
  std::copy_n(params.begin() + 4 * n, n, m.w01.begin());
  std::copy_n(params.begin() + 5 * n, n, m.W2.begin());
  m.w02 = params[6 * n];
  return m;
}

double sigmoid(double z) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, lo, hi);
}

double forward(const LinearModel& m, const FeatureVector& x) { return sigmoid(linear_logit(m, x)); }

double forward(const MlpModel& m, const FeatureVector& x) {
  std::vector<double> h;
  return sigmoid(mlp_logit(m, x, h));
}

double forward(const Model& m, const FeatureVector& x) {
  return std::visit([&](const auto& model) { return forward(model, x); }, m);
}

double bce_loss(double pred, int label) {
  const double p = std::clamp(pred, kLossEps, 1.0 - kLossEps);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double mean_loss(const Model& m, std::span<const Example> batch) {
  check_batch(batch);
  double s = 0.0;
  for (const Example& e : batch) s += bce_loss(forward(m, e.x), e.y);
  return s / double(batch.size());
}

Model gradients(const Model& m, std::span<const Example> batch) {
  check_batch(batch);
  const double scale = 1.0 / double(batch.size());
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    LinearModel g;
    for (const Example& e : batch) {
      const double delta = forward(*lin, e.x) - e.y;
      for (int k = 0; k < 4; ++k) g.w[k] += delta * e.x[k];
      g.w0 += delta;
    }
    for (double& w : g.w) w *= scale;
    g.w0 *= scale;
    return g;
  }

  const MlpModel& net = std::get<MlpModel>(m);
  MlpModel g = MlpModel::zeros(net.n_ne);
  std::vector<double> h;
  for (const Example& e : batch) {
    const double delta = sigmoid(mlp_logit(net, e.x, h)) - e.y;
    g.w02 += delta;
    for (int j = 0; j < net.n_ne; ++j) {
      if (h[j] <= 0.0) continue;
      g.W2[j] += delta * h[j];
      const double back = delta * net.W2[j];
      g.w01[j] += back;
      for (int k = 0; k < 4; ++k) g.w1(j, k) += back * e.x[k];
    }
  }
  for (double& v : g.W1) v *= scale;
  for (double& v : g.w01) v *= scale;
  for (double& v : g.W2) v *= scale;
  g.w02 *= scale;
  return g;
}

Model init_model(const Arch& arch, const TrainConfig& cfg) {
  if (!(cfg.init_halfwidth > 0.0)) throw std::invalid_argument("init half-width must be positive");
  Stream rng = Stream::derive(cfg.seed, {0x696e6974ULL, std::uint64_t(arch.n_ne)});
  const std::size_t n = arch.is_linear() ? 5 : 6 * std::size_t(arch.n_ne) + 1;
  std::vector<double> params(n);
  for (double& v : params) v = (2.0 * rng.uniform() - 1.0) * cfg.init_halfwidth;
  return unflatten(arch, params);
}

namespace {

// Loss and gradient in one pass; returns the loss at the current parameters.
double loss_and_gradient(const Model& m, std::span<const Example> data, std::vector<double>& grad) {
  const double n = double(data.size());
  double loss = 0.0;
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    grad.assign(5, 0.0);
    for (const Example& e : data) {
      const double p = sigmoid(linear_logit(*lin, e.x));
      loss += bce_loss(p, e.y);
      const double delta = p - e.y;
      for (int k = 0; k < 4; ++k) grad[k] += delta * e.x[k];
      grad[4] += delta;
    }
  } else {
    const MlpModel& net = std::get<MlpModel>(m);
    const std::size_t nn = net.n_ne;
    grad.assign(6 * nn + 1, 0.0);
    double* gW1 = grad.data();
    double* gb1 = gW1 + 4 * nn;
    double* gW2 = gb1 + nn;
    double& gb2 = grad[6 * nn];
    std::vector<double> h;
    for (const Example& e : data) {
      const double p = sigmoid(mlp_logit(net, e.x, h));
      loss += bce_loss(p, e.y);
      const double delta = p - e.y;
      gb2 += delta;
      for (std::size_t j = 0; j < nn; ++j) {
        if (h[j] <= 0.0) continue;
        gW2[j] += delta * h[j];
        const double back = delta * net.W2[j];
        gb1[j] += back;
        for (int k = 0; k < 4; ++k) gW1[4 * j + k] += back * e.x[k];
      }
    }
  }
  for (double& g : grad) g /= n;
  return loss / n;
}

struct Scaling {
  FeatureVector mean{};
  FeatureVector scale{1.0, 1.0, 1.0, 1.0};
};

Scaling fit_scaling(std::span<const Example> data) {
  Scaling s;
  const double n = double(data.size());
  for (int k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (const Example& e : data) sum += e.x[k];
    s.mean[k] = sum / n;
    double var = 0.0;
    for (const Example& e : data) var += (e.x[k] - s.mean[k]) * (e.x[k] - s.mean[k]);
    const double sd = std::sqrt(var / n);
    // A constant feature carries nothing; leave it unscaled.
    s.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

// Rewrites a model trained on (x - mean) / scale so it acts on raw x.
void fold_scaling(Model& m, const Scaling& s) {
  auto fold_row = [&](double* w, double& bias) {
    for (int k = 0; k < 4; ++k) {
      w[k] /= s.scale[k];
      bias -= w[k] * s.mean[k];
    }
  };
  if (auto* lin = std::get_if<LinearModel>(&m)) {
    fold_row(lin->w.data(), lin->w0);
  } else {
    MlpModel& net = std::get<MlpModel>(m);
    for (std::size_t j = 0; j < std::size_t(net.n_ne); ++j) fold_row(&net.W1[4 * j], net.w01[j]);
  }
}

}  // namespace

TrainResult train(std::span<const Example> data, const Arch& arch, const TrainConfig& cfg) {
  if (data.empty()) throw DegenerateDataError("training set is empty");
  const auto positives = std::count_if(data.begin(), data.end(), [](const Example& e) { return e.y == 1; });
  if (positives == 0 || positives == std::ptrdiff_t(data.size()))
    throw DegenerateDataError("training set contains a single class");
  if (!(cfg.learning_rate > 0.0) || cfg.epochs < 1) throw std::invalid_argument("invalid training config");

  const auto start = std::chrono::steady_clock::now();
  const std::span<const Example> raw = data;
  std::vector<Example> scaled;
  Scaling scaling;
  if (cfg.standardize) {
    scaling = fit_scaling(data);
    scaled.assign(data.begin(), data.end());
    for (Example& e : scaled)
      for (int k = 0; k < 4; ++k) e.x[k] = (e.x[k] - scaling.mean[k]) / scaling.scale[k];
    data = scaled;
  }
  Model model = init_model(arch, cfg);
  std::vector<double> params = flatten(model);
  std::vector<double> grad;

  TrainReport report;
  report.config = cfg;
  report.loss.reserve(std::size_t(cfg.epochs) + 1);
  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = loss_and_gradient(model, data, grad);
    if (!report.loss.empty() && loss > report.loss.back() && report.halvings < cfg.max_halvings) {
      lr *= 0.5;
      ++report.halvings;
    }
    report.loss.push_back(loss);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    model = unflatten(arch, params);
  }
  report.loss.push_back(mean_loss(model, data));
  if (cfg.standardize) fold_scaling(model, scaling);
  report.final_learning_rate = lr;
  report.train_match_rate = match_rate(model, raw, cfg.threshold);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return TrainResult{std::move(model), std::move(report)};
}

Separability predict(const Model& m, const FeatureVector& x, double threshold) {
  return forward(m, x) >= threshold ? Separability::Entangled : Separability::Separable;
}

double match_rate(const Model& m, std::span<const Example> data, double threshold) {
  if (data.empty()) throw DegenerateDataError("evaluation set is empty");
  std::size_t hits = 0;
  for (const Example& e : data) hits += to_int(predict(m, e.x, threshold)) == e.y;
  return double(hits) / double(data.size());
}

int to_int(Separability s) { return s == Separability::Entangled ? 1 : 0; }

}  // namespace qsep
