#include "qsep/measurement.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsep {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kClipTol = 1e-12;

Mat2 identity2() { return Mat2::Identity(); }

int outcome_sign_a(int outcome) { return outcome < 2 ? +1 : -1; }
int outcome_sign_b(int outcome) { return outcome % 2 == 0 ? +1 : -1; }

}  // namespace

BlochDirection::BlochDirection(double x, double y, double z) : x_(x), y_(y), z_(z) {
  if (std::abs(x * x + y * y + z * z - 1.0) > kUnitTol)
    throw std::domain_error("BlochDirection: not a unit vector");
}

BlochDirection BlochDirection::normalized(double x, double y, double z) {
  const double n = std::sqrt(x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("BlochDirection: zero vector");
  return BlochDirection(x / n, y / n, z / n);
}

std::array<SettingPair, 4> FeaturePlan::settings() const {
  return {SettingPair{a0, b0}, SettingPair{a0, b0p}, SettingPair{a0p, b0}, SettingPair{a0p, b0p}};
}

FeaturePlan xz_plan() {
  const double h = std::numbers::sqrt2 / 2;
  return FeaturePlan{"xz", BlochDirection(0, 0, 1), BlochDirection(1, 0, 0), BlochDirection(h, 0, h),
                     BlochDirection(-h, 0, h)};
}

FeaturePlan xyz_plan() {
  const double h = std::numbers::sqrt2 / 2;
  return FeaturePlan{"xyz", BlochDirection(0, h, h), BlochDirection(1, 0, 0), BlochDirection(h, 0, h),
                     BlochDirection(0, h, h)};
}

FeaturePlan plan_by_name(const std::string& name) {
  if (name == "xz") return xz_plan();
  if (name == "xyz") return xyz_plan();
  throw std::invalid_argument("unknown measurement plan '" + name + "'");
}

std::uint64_t& CountRecord::operator[](int outcome) {
  switch (outcome) {
    case 0: return n_pp;
    case 1: return n_pm;
    case 2: return n_mp;
    case 3: return n_mm;
  }
  throw std::out_of_range("CountRecord: outcome index");
}

std::uint64_t CountRecord::operator[](int outcome) const {
  return const_cast<CountRecord&>(*this)[outcome];
}

const std::array<Signs, 8>& chsh_sign_patterns() {
  static const std::array<Signs, 8> patterns = [] {
    std::array<Signs, 8> out{};
    int n = 0;
    for (int mask = 0; mask < 16; ++mask) {
      if (std::popcount(static_cast<unsigned>(mask)) % 2 == 0) continue;
      for (int i = 0; i < 4; ++i) out[n][i] = (mask >> i) & 1 ? -1 : +1;
      ++n;
    }
    return out;
  }();
  return patterns;
}

Mat2 pauli_from_direction(const BlochDirection& d) {
  Mat2 m;
  m << d.z(), Complex(d.x(), -d.y()), Complex(d.x(), d.y()), -d.z();
  return m;
}

double correlator_exact(const DensityMatrix& rho, const BlochDirection& a, const BlochDirection& b) {
  const Mat4 op = kron(pauli_from_direction(a), pauli_from_direction(b));
  return (rho.matrix() * op).trace().real();
}

double chsh_value(const FeatureVector& f, const Signs& signs) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += signs[i] * f[i];
  return s;
}

double chsh_value(const DensityMatrix& rho, const FeaturePlan& plan, const Signs& signs) {
  return chsh_value(features_exact(rho, plan), signs);
}

double max_chsh_value(const FeatureVector& f) {
  double best = 0.0;
  for (const Signs& s : chsh_sign_patterns()) best = std::max(best, std::abs(chsh_value(f, s)));
  return best;
}

Separability chsh_classifier_standard(const FeatureVector& f, const Signs& signs) {
  return std::abs(chsh_value(f, signs)) > 2.0 ? Separability::Entangled : Separability::Separable;
}

Separability chsh_classifier_best(const FeatureVector& f) {
  return max_chsh_value(f) > 2.0 ? Separability::Entangled : Separability::Separable;
}

std::array<double, 4> joint_probabilities(const DensityMatrix& rho, const SettingPair& s) {
  const Mat2 sa = pauli_from_direction(s.a);
  const Mat2 sb = pauli_from_direction(s.b);
  std::array<double, 4> p{};
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Mat2 pa = 0.5 * (identity2() + double(outcome_sign_a(k)) * sa);
    const Mat2 pb = 0.5 * (identity2() + double(outcome_sign_b(k)) * sb);
    double v = (rho.matrix() * kron(pa, pb)).trace().real();
    if (v < -kClipTol) throw std::domain_error("joint_probabilities: negative outcome probability");
    p[k] = std::max(v, 0.0);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

CountRecord sample_counts(const DensityMatrix& rho, const SettingPair& s, std::uint64_t shots,
                          Stream& rng) {
  if (shots == 0) throw std::invalid_argument("sample_counts: shots must be positive");
  const auto p = joint_probabilities(rho, s);
  const std::array<double, 3> cdf{p[0], p[0] + p[1], p[0] + p[1] + p[2]};
  CountRecord c;
  c.setting = s;
  for (std::uint64_t n = 0; n < shots; ++n) {
    const double u = rng.uniform();
    const int k = u < cdf[0] ? 0 : u < cdf[1] ? 1 : u < cdf[2] ? 2 : 3;
    ++c[k];
  }
  return c;
}

CountRecord expected_counts(const DensityMatrix& rho, const SettingPair& s, std::uint64_t total) {
  const auto p = joint_probabilities(rho, s);
  CountRecord c;
  c.setting = s;
  for (int k = 0; k < 4; ++k) c[k] = static_cast<std::uint64_t>(std::llround(p[k] * double(total)));
  return c;
}

double estimate_correlator(const CountRecord& c) {
  const std::uint64_t n = c.total();
  if (n == 0) throw std::domain_error("estimate_correlator: empty record");
  const double even = double(c.n_pp) + double(c.n_mm);
  const double odd = double(c.n_pm) + double(c.n_mp);
  return (even - odd) / double(n);
}

FeatureVector features_exact(const DensityMatrix& rho, const FeaturePlan& plan) {
  FeatureVector f{};
  const auto s = plan.settings();
  for (int i = 0; i < 4; ++i) f[i] = correlator_exact(rho, s[i].a, s[i].b);
  return f;
}

FeatureVector features_from_counts(const std::array<CountRecord, 4>& records) {
  FeatureVector f{};
  for (int i = 0; i < 4; ++i) f[i] = estimate_correlator(records[i]);
  return f;
}

const std::array<SettingPair, 9>& tomography_settings() {
  static const std::array<SettingPair, 9> settings = [] {
    const std::array<BlochDirection, 3> axes{BlochDirection(1, 0, 0), BlochDirection(0, 1, 0),
                                             BlochDirection(0, 0, 1)};
    std::array<SettingPair, 9> out{
        SettingPair{axes[0], axes[0]}, SettingPair{axes[0], axes[1]}, SettingPair{axes[0], axes[2]},
        SettingPair{axes[1], axes[0]}, SettingPair{axes[1], axes[1]}, SettingPair{axes[1], axes[2]},
        SettingPair{axes[2], axes[0]}, SettingPair{axes[2], axes[1]}, SettingPair{axes[2], axes[2]}};
    return out;
  }();
  return settings;
}

TomographyRecords tomography_measure(const DensityMatrix& rho, std::uint64_t shots_per_setting,
                                     Stream& rng) {
  TomographyRecords out;
  for (int k = 0; k < 9; ++k) out[k] = sample_counts(rho, tomography_settings()[k], shots_per_setting, rng);
  return out;
}

TomographyRecords tomography_expected(const DensityMatrix& rho, std::uint64_t total) {
  TomographyRecords out;
  for (int k = 0; k < 9; ++k) out[k] = expected_counts(rho, tomography_settings()[k], total);
  return out;
}

Mat4 linear_inversion(const TomographyRecords& records) {
  for (int k = 0; k < 9; ++k) {
    if (records[k].total() == 0) throw std::domain_error("linear_inversion: empty tomography record");
    if (!(records[k].setting == tomography_settings()[k]))
      throw std::invalid_argument("linear_inversion: records are not in Pauli-pair order");
  }

  // Expectations t[i][j] of s_i (x) s_j with index 0 the identity.
  double t[4][4] = {};
  t[0][0] = 1.0;
  double alice_num[3] = {}, alice_den[3] = {}, bob_num[3] = {}, bob_den[3] = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const CountRecord& c = records[3 * i + j];
      const double n = double(c.total());
      t[i + 1][j + 1] = estimate_correlator(c);
      alice_num[i] += double(c.n_pp) + double(c.n_pm) - double(c.n_mp) - double(c.n_mm);
      alice_den[i] += n;
      bob_num[j] += double(c.n_pp) - double(c.n_pm) + double(c.n_mp) - double(c.n_mm);
      bob_den[j] += n;
    }
  }
  for (int i = 0; i < 3; ++i) {
    t[i + 1][0] = alice_num[i] / alice_den[i];
    t[0][i + 1] = bob_num[i] / bob_den[i];
  }

  std::array<Mat2, 4> sigma;
  sigma[0] = Mat2::Identity();
  sigma[1] = pauli_from_direction(BlochDirection(1, 0, 0));
  sigma[2] = pauli_from_direction(BlochDirection(0, 1, 0));
  sigma[3] = pauli_from_direction(BlochDirection(0, 0, 1));

  Mat4 rho = Mat4::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rho += t[i][j] * kron(sigma[i], sigma[j]);
  rho *= 0.25;
  return 0.5 * (rho + rho.adjoint());
}

std::array<double, 4> project_spectrum(std::array<double, 4> ascending) {
  std::array<double, 4> mu{};
  for (int k = 0; k < 4; ++k) mu[k] = ascending[3 - k];  // descending
  int i = 4;
  double deficit = 0.0;
  while (i > 0 && mu[i - 1] + deficit / i < 0.0) {
    deficit += mu[i - 1];
    mu[i - 1] = 0.0;
    --i;
  }
  for (int j = 0; j < i; ++j) mu[j] += deficit / i;
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) out[k] = std::max(mu[3 - k], 0.0);
  return out;
}

DensityMatrix project_to_physical(const Mat4& m) {
  HermitianEigen e = hermitian_eigen(m);
  double trace = 0.0;
  for (double v : e.values) trace += v;
  if (!(trace > 0.0)) throw std::domain_error("project_to_physical: non-positive trace");
  for (double& v : e.values) v /= trace;
  e.values = project_spectrum(e.values);
  Mat4 rho = assemble(e);
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

DensityMatrix reconstruct_density(const TomographyRecords& records) {
  return project_to_physical(linear_inversion(records));
}

}  // namespace qsep
