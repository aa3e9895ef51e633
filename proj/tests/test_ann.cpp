#include <doctest.h>

#include <algorithm>
#include <random>

#include "qsep/ann.hpp"
#include "support.hpp"

using namespace qsep;
using namespace qsep::testing;

namespace {

// Logit of the MLP written out directly, for the kink guard below.
double min_abs_preactivation(const MlpModel& m, const std::vector<Example>& batch) {
  double best = 1e300;
  for (const Example& e : batch)
    for (int j = 0; j < m.n_ne; ++j) {
      double a = m.w01[j];
      for (int k = 0; k < 4; ++k) a += m.w1(j, k) * e.x[k];
      best = std::min(best, std::abs(a));
    }
  return best;
}

std::vector<Example> random_batch(std::mt19937_64& g, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Example> b(n);
  for (auto& e : b) {
    for (double& x : e.x) x = u(g);
    e.y = int(g() & 1);
  }
  return b;
}

Model random_model(std::mt19937_64& g, const Arch& arch) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const std::size_t n = arch.is_linear() ? 5 : 6 * std::size_t(arch.n_ne) + 1;
  std::vector<double> p(n);
  for (double& v : p) v = u(g);
  return unflatten(arch, p);
}

// Largest relative error of the analytic gradient against central
// differences; the scale floor keeps near-zero components meaningful.
double gradient_error(const Model& m, const std::vector<Example>& batch) {
  const Arch arch = arch_of(m);
  const std::vector<double> p = flatten(m);
  const std::vector<double> analytic = flatten(gradients(m, batch));
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::vector<double> up = p, down = p;
    up[i] += h;
    down[i] -= h;
    const double fd = (mean_loss(unflatten(arch, up), batch) - mean_loss(unflatten(arch, down), batch)) / (2 * h);
    const double err = std::abs(fd - analytic[i]) / std::max({std::abs(fd), std::abs(analytic[i]), 1e-2});
    worst = std::max(worst, err);
  }
  return worst;
}

std::vector<Example> toy_separable() {
  std::vector<Example> d;
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    Example e;
    e.y = i % 2;
    e.x = {(e.y ? 1.0 : -1.0) * 0.5 + 0.3 * u(g), u(g), u(g), u(g)};
    d.push_back(e);
  }
  return d;
}

}  // namespace

TEST_CASE("linear forward") {
  CHECK(forward(LinearModel{}, FeatureVector{0.3, -0.2, 0.9, 1.0}) == 0.5);
  // A fixed reference weight set, applied to our features.
  const LinearModel reference{{30.54, -32.42, -1.219, -0.3819}, 15.62};
  const FeatureVector bell{-1 / kSqrt2, -1 / kSqrt2, 1 / kSqrt2, -1 / kSqrt2};
  CHECK(forward(reference, bell) > 0.5);
  const double at_zero = forward(reference, FeatureVector{});
  CHECK(at_zero == doctest::Approx(1.0 / (1.0 + std::exp(-15.62))));
  CHECK(predict(reference, FeatureVector{}) == Separability::Entangled);
}

TEST_CASE("mlp forward") {
  CHECK(forward(MlpModel::zeros(3), FeatureVector{1, 2, 3, 4}) == 0.5);
  MlpModel m = MlpModel::zeros(1);
  m.w1(0, 0) = 1.0;
  m.W2[0] = 1.0;
  CHECK(forward(m, FeatureVector{-2, 5, 5, 5}) == 0.5);
  CHECK(forward(m, FeatureVector{2, 5, 5, 5}) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(forward(m, FeatureVector{2, 5, 5, 5}) == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK_THROWS_AS(MlpModel::zeros(0), std::invalid_argument);

  // W2 = 0 collapses the network to a constant.
  std::mt19937_64 g(2);
  MlpModel c = std::get<MlpModel>(random_model(g, Arch{6}));
  std::fill(c.W2.begin(), c.W2.end(), 0.0);
  c.w02 = 0.7;
  for (const Example& e : random_batch(g, 20)) CHECK(forward(c, e.x) == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))));
}

TEST_CASE("forward stays inside (0, 1)") {
  LinearModel big{{1e6, 0, 0, 0}, 0};
  const double hi = forward(big, FeatureVector{1, 0, 0, 0});
  const double lo = forward(big, FeatureVector{-1, 0, 0, 0});
  CHECK(hi < 1.0);
  CHECK(lo > 0.0);
  CHECK(std::isfinite(bce_loss(lo, 1)));
}

TEST_CASE("bce loss") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(1.0 - 1e-12, 1) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(1e-12)));
  std::mt19937_64 g(3);
  const auto batch = random_batch(g, 10);
  const Model m = random_model(g, Arch{0});
  double sum = 0;
  for (const Example& e : batch) sum += bce_loss(forward(m, e.x), e.y);
  CHECK(mean_loss(m, batch) == doctest::Approx(sum / 10));
  CHECK_THROWS_AS(mean_loss(m, std::vector<Example>{}), DegenerateDataError);
}

TEST_CASE("flatten and unflatten") {
  std::mt19937_64 g(4);
  for (const Arch& a : {Arch{0}, Arch{1}, Arch{7}}) {
    const Model m = random_model(g, a);
    CHECK(flatten(unflatten(a, flatten(m))) == flatten(m));
    CHECK(arch_of(m).n_ne == a.n_ne);
  }
  const MlpModel m = std::get<MlpModel>(unflatten(Arch{2}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}));
  CHECK(m.w1(1, 0) == 5);
  CHECK(m.w01[1] == 10);
  CHECK(m.W2[0] == 11);
  CHECK(m.w02 == 13);
  CHECK_THROWS_AS(unflatten(Arch{2}, std::vector<double>(5)), std::invalid_argument);
}

TEST_CASE("linear gradient closed form") {
  std::mt19937_64 g(5);
  const auto batch = random_batch(g, 30);
  const LinearModel m = std::get<LinearModel>(random_model(g, Arch{0}));
  const LinearModel grad = std::get<LinearModel>(gradients(m, batch));
  for (int k = 0; k < 4; ++k) {
    double want = 0;
    for (const Example& e : batch) want += (forward(m, e.x) - e.y) * e.x[k];
    CHECK(grad.w[k] == doctest::Approx(want / 30).epsilon(1e-12));
  }
  // Symmetric balanced batch at zero weights: no pull on the bias.
  std::vector<Example> sym{{{0.5, 0.1, 0, 0}, 1}, {{-0.5, -0.1, 0, 0}, 0}};
  CHECK(std::get<LinearModel>(gradients(LinearModel{}, sym)).w0 == 0.0);
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 g(6);
  for (const Arch& arch : {Arch{0}, Arch{5}, Arch{10}}) {
    int checked = 0;
    double worst = 0;
    while (checked < 50) {
      const auto batch = random_batch(g, 16);
      const Model m = random_model(g, arch);
      if (!arch.is_linear() && min_abs_preactivation(std::get<MlpModel>(m), batch) < 1e-3) continue;
      worst = std::max(worst, gradient_error(m, batch));
      ++checked;
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("training on separable toy data") {
  const auto data = toy_separable();
  TrainConfig cfg;
  cfg.epochs = 2000;
  for (const Arch& a : {Arch{0}, Arch{4}}) {
    const TrainResult r = train(data, a, cfg);
    CHECK(r.report.train_match_rate == 1.0);
    CHECK(match_rate(r.model, data) == 1.0);
    CHECK(r.report.loss.back() <= r.report.loss.front());
    CHECK(r.report.loss.size() == std::size_t(cfg.epochs) + 1);
    for (double l : r.report.loss) CHECK(std::isfinite(l));
  }
}

TEST_CASE("standardized and raw training agree on the decision") {
  const auto data = toy_separable();
  TrainConfig cfg;
  cfg.epochs = 3000;
  const TrainResult a = train(data, Arch{0}, cfg);
  cfg.standardize = false;
  const TrainResult b = train(data, Arch{0}, cfg);
  CHECK(a.report.train_match_rate == 1.0);
  CHECK(b.report.train_match_rate == 1.0);
  // Folding the scaling back leaves the loss as seen on raw features.
  CHECK(mean_loss(a.model, data) == doctest::Approx(a.report.loss.back()).epsilon(1e-9));
}

TEST_CASE("training is deterministic") {
  const auto data = toy_separable();
  TrainConfig cfg;
  cfg.epochs = 500;
  const TrainResult a = train(data, Arch{5}, cfg);
  const TrainResult b = train(data, Arch{5}, cfg);
  CHECK(flatten(a.model) == flatten(b.model));
  cfg.seed = 7;
  CHECK(flatten(train(data, Arch{5}, cfg).model) != flatten(a.model));
}

TEST_CASE("initialization range") {
  TrainConfig cfg;
  cfg.init_halfwidth = 0.25;
  for (double v : flatten(init_model(Arch{50}, cfg))) {
    CHECK(v >= -0.25);
    CHECK(v <= 0.25);
  }
  cfg.init_halfwidth = 0;
  CHECK_THROWS_AS(init_model(Arch{2}, cfg), std::invalid_argument);
}

TEST_CASE("degenerate training data") {
  std::vector<Example> one_class(10);
  for (auto& e : one_class) e.y = 1;
  CHECK_THROWS_AS(train(one_class, Arch{0}, TrainConfig{}), DegenerateDataError);
  CHECK_THROWS_AS(train(std::vector<Example>{}, Arch{0}, TrainConfig{}), DegenerateDataError);
  TrainConfig bad;
  bad.learning_rate = -1;
  CHECK_THROWS_AS(train(toy_separable(), Arch{0}, bad), std::invalid_argument);
}

TEST_CASE("prediction rules") {
  // Tie goes to Entangled.
  CHECK(predict(LinearModel{}, FeatureVector{}) == Separability::Entangled);
  CHECK(predict(LinearModel{}, FeatureVector{}, 0.6) == Separability::Separable);
  std::mt19937_64 g(8);
  const auto batch = random_batch(g, 200);
  for (int t = 0; t < 20; ++t) {
    const LinearModel m = std::get<LinearModel>(random_model(g, Arch{0}));
    LinearModel scaled = m;
    const double s = 0.1 + 10 * std::uniform_real_distribution<double>(0, 1)(g);
    for (double& w : scaled.w) w *= s;
    scaled.w0 *= s;
    for (const Example& e : batch) CHECK(predict(m, e.x) == predict(scaled, e.x));
  }
  // Order of the evaluation set does not matter.
  const Model m = random_model(g, Arch{3});
  auto shuffled = batch;
  std::shuffle(shuffled.begin(), shuffled.end(), g);
  CHECK(match_rate(m, batch) == match_rate(m, shuffled));
}

TEST_CASE("match rate") {
  std::vector<Example> d(10);
  for (int i = 0; i < 7; ++i) d[i].y = 1;
  // Constant model outputting the majority label.
  LinearModel always{{0, 0, 0, 0}, 5.0};
  CHECK(match_rate(always, d) == doctest::Approx(0.7));
  CHECK_THROWS_AS(match_rate(always, std::vector<Example>{}), DegenerateDataError);
  CHECK(to_int(Separability::Entangled) == 1);
}
