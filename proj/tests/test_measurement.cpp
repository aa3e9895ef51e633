#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "qsep/measurement.hpp"
#include "support.hpp"

using namespace qsep;
using namespace qsep::testing;

namespace {

const BlochDirection kZ(0, 0, 1), kX(1, 0, 0), kY(0, 1, 0);

// tr(rho A(x)B) straight from the Pauli matrices.
double correlator_oracle(const Mat4& rho, const BlochDirection& a, const BlochDirection& b) {
  Mat2 A = a.x() * pauli(0) + a.y() * pauli(1) + a.z() * pauli(2);
  Mat2 B = b.x() * pauli(0) + b.y() * pauli(1) + b.z() * pauli(2);
  return (rho * kron_oracle(A, B)).trace().real();
}

BlochDirection random_direction(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  return BlochDirection::normalized(n(g), n(g), n(g));
}

constexpr std::uint64_t kExactTotal = 1'000'000'000'000'000ULL;

}  // namespace

TEST_CASE("BlochDirection validation") {
  CHECK_THROWS_AS(BlochDirection(1, 1, 0), std::domain_error);
  CHECK_THROWS_AS(BlochDirection::normalized(0, 0, 0), std::domain_error);
  const BlochDirection d = BlochDirection::normalized(1, 0, 1);
  CHECK(d.x() == doctest::Approx(1 / kSqrt2));
  CHECK(d.z() == doctest::Approx(1 / kSqrt2));
}

TEST_CASE("pauli_from_direction") {
  CHECK(max_abs(kron_oracle(pauli_from_direction(kZ), Mat2::Identity()) -
                kron_oracle(pauli(2), Mat2::Identity())) == 0.0);
  CHECK((pauli_from_direction(kX) - pauli(0)).cwiseAbs().maxCoeff() == 0.0);
  const Mat2 zx = pauli_from_direction(BlochDirection::normalized(1, 0, 1));
  CHECK((zx - (pauli(2) + pauli(0)) / kSqrt2).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat2> es(zx);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlator_exact") {
  const DensityMatrix bell = density_from_ket(bell_psi_plus());
  CHECK(correlator_exact(DensityMatrix::maximally_mixed(), kZ, kX) == doctest::Approx(0.0));
  CHECK(correlator_exact(bell, kZ, kZ) == doctest::Approx(-1.0));
  CHECK(correlator_exact(bell, kZ, BlochDirection::normalized(1, 0, 1)) == doctest::Approx(-1 / kSqrt2));
  std::mt19937_64 g(29);
  for (int i = 0; i < 100; ++i) {
    const DensityMatrix rho = random_density(g);
    const BlochDirection a = random_direction(g), b = random_direction(g);
    const double c = correlator_exact(rho, a, b);
    CHECK(std::abs(c - correlator_oracle(rho.matrix(), a, b)) < 1e-12);
    CHECK(std::abs(c) <= 1.0 + 1e-12);
  }
}

TEST_CASE("plans") {
  const FeaturePlan xz = xz_plan();
  CHECK(xz.name == "xz");
  CHECK(xz.a0 == kZ);
  CHECK(xz.a0p == kX);
  const auto s = xz.settings();
  CHECK(s[0].a == xz.a0);
  CHECK(s[0].b == xz.b0);
  CHECK(s[1].b == xz.b0p);
  CHECK(s[2].a == xz.a0p);
  CHECK(s[3].b == xz.b0p);
  CHECK(plan_by_name("xyz").name == "xyz");
  CHECK_THROWS_AS(plan_by_name("nope"), std::invalid_argument);
}

TEST_CASE("features of reference states") {
  const auto f0 = features_exact(DensityMatrix::maximally_mixed(), xz_plan());
  for (double v : f0) CHECK(v == doctest::Approx(0.0));
  const auto f = features_exact(density_from_ket(bell_psi_plus()), xz_plan());
  const std::array<double, 4> expect{-1 / kSqrt2, -1 / kSqrt2, 1 / kSqrt2, -1 / kSqrt2};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(f[k] - expect[k]) < 1e-12);

  std::mt19937_64 g(31);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix pure = density_from_ket(random_ket(g));
    const double p = std::uniform_real_distribution<double>(0, 1)(g);
    for (const FeaturePlan& plan : {xz_plan(), xyz_plan()}) {
      const auto a = features_exact(werner_like(pure, p), plan);
      const auto b = features_exact(pure, plan);
      for (int k = 0; k < 4; ++k) CHECK(std::abs(a[k] - p * b[k]) < 1e-12);
    }
  }
}

TEST_CASE("nonlinear plan features are not collinear over the protocol states") {
  Eigen::MatrixXd m(15, 4);
  int row = 0;
  for (double phi : {0.0, kPi / 2, kPi})
    for (int k = 1; k <= 5; ++k) {
      const auto f = features_exact(density_from_ket(ket_from_params(k * kPi / 20, phi)), xyz_plan());
      for (int c = 0; c < 4; ++c) m(row, c) = f[c];
      ++row;
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  // Three independent directions (T_zz, Re and Im coherence) span the family.
  CHECK(svd.singularValues()(2) > 0.1);
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      const double cosine = m.col(a).dot(m.col(b)) / (m.col(a).norm() * m.col(b).norm());
      CHECK(std::abs(cosine) < 0.99);
    }
}

TEST_CASE("CHSH values") {
  const DensityMatrix bell = density_from_ket(bell_psi_plus());
  CHECK(chsh_value(DensityMatrix::maximally_mixed(), xz_plan()) == doctest::Approx(0.0));
  // The textbook pattern cancels on this plan; the flipped one saturates.
  CHECK(std::abs(chsh_value(bell, xz_plan())) < 1e-12);
  CHECK(std::abs(std::abs(chsh_value(bell, xz_plan(), Signs{+1, +1, -1, +1})) - 2 * kSqrt2) < 1e-12);
  CHECK(std::abs(max_chsh_value(features_exact(bell, xz_plan())) - 2 * kSqrt2) < 1e-12);

  const DensityMatrix i_bell = density_from_ket(ket_from_params(kPi / 4, kPi / 2));
  CHECK(max_chsh_value(features_exact(i_bell, xz_plan())) <= kSqrt2 + 1e-12);

  for (const Signs& s : chsh_sign_patterns()) {
    int minus = 0;
    for (int v : s) minus += v < 0;
    CHECK(minus % 2 == 1);
  }
  CHECK(chsh_value(FeatureVector{1, 2, 3, 4}, Signs{1, -1, 1, 1}) == doctest::Approx(6.0));
}

TEST_CASE("CHSH classifiers") {
  const DensityMatrix bell = density_from_ket(bell_psi_plus());
  const auto f09 = features_exact(werner_like(bell, 0.9), xz_plan());
  CHECK(chsh_classifier_best(f09) == Separability::Entangled);
  CHECK(chsh_classifier_standard(f09, Signs{+1, +1, -1, +1}) == Separability::Entangled);
  CHECK(chsh_classifier_standard(FeatureVector{}) == Separability::Separable);
  CHECK(chsh_classifier_best(features_exact(werner_like(bell, 0.70), xz_plan())) == Separability::Separable);
  CHECK(chsh_classifier_best(features_exact(werner_like(bell, 0.71), xz_plan())) == Separability::Entangled);
}

TEST_CASE("sample_counts") {
  Stream rng = Stream::derive(1, {2});
  const DensityMatrix hv = density_from_ket(basis_ket(kHV));
  const CountRecord c = sample_counts(hv, SettingPair{kZ, kZ}, 1000, rng);
  CHECK(c.n_pm == 1000);
  CHECK(c.total() == 1000);
  CHECK(c.setting == SettingPair{kZ, kZ});

  const DensityMatrix bell = density_from_ket(bell_psi_plus());
  const SettingPair s{kZ, BlochDirection::normalized(1, 0, 1)};
  const CountRecord big = sample_counts(bell, s, 1'000'000, rng);
  CHECK(big.total() == 1'000'000);
  CHECK(std::abs(estimate_correlator(big) + 1 / kSqrt2) < 0.005);
  CHECK_THROWS_AS(sample_counts(bell, s, 0, rng), std::invalid_argument);

  Stream a = Stream::derive(9, {1}), b = Stream::derive(9, {1});
  const CountRecord ra = sample_counts(bell, s, 5000, a), rb = sample_counts(bell, s, 5000, b);
  CHECK(ra.n_pp == rb.n_pp);
  CHECK(ra.n_mm == rb.n_mm);
}

TEST_CASE("joint_probabilities") {
  const auto p = joint_probabilities(DensityMatrix::maximally_mixed(), SettingPair{kX, kY});
  for (double v : p) CHECK(v == doctest::Approx(0.25));
  const auto q = joint_probabilities(density_from_ket(bell_psi_plus()), SettingPair{kZ, kZ});
  CHECK(q[1] == doctest::Approx(0.5));
  CHECK(q[2] == doctest::Approx(0.5));
  CHECK(q[0] == doctest::Approx(0.0));
}

TEST_CASE("estimate_correlator") {
  CountRecord c;
  c.n_pp = c.n_pm = c.n_mp = c.n_mm = 250;
  CHECK(estimate_correlator(c) == 0.0);
  c = CountRecord{};
  c.n_pp = 1000;
  CHECK(estimate_correlator(c) == 1.0);
  c.n_pp = 500;
  c.n_mm = 500;
  CHECK(estimate_correlator(c) == 1.0);
  CHECK_THROWS_AS(estimate_correlator(CountRecord{}), std::domain_error);
}

TEST_CASE("tomography measurement") {
  Stream rng = Stream::derive(3, {4});
  const std::uint64_t shots = 20000;
  const auto mixed = tomography_measure(DensityMatrix::maximally_mixed(), shots, rng);
  for (const CountRecord& r : mixed) {
    CHECK(r.total() == shots);
    CHECK(std::abs(estimate_correlator(r)) < 5.0 / std::sqrt(double(shots)));
  }
  const auto bell = tomography_measure(density_from_ket(bell_psi_plus()), shots, rng);
  CHECK(estimate_correlator(bell[0]) == doctest::Approx(1.0).epsilon(0.03));   // xx
  CHECK(estimate_correlator(bell[4]) == doctest::Approx(1.0).epsilon(0.03));   // yy
  CHECK(estimate_correlator(bell[8]) == doctest::Approx(-1.0).epsilon(0.03));  // zz
  const auto& settings = tomography_settings();
  CHECK(settings[5] == SettingPair{kY, kZ});
}

TEST_CASE("linear inversion from exact probabilities is the identity") {
  const DensityMatrix bw(bell_werner_matrix(0.5));
  const Mat4 inv = linear_inversion(tomography_expected(bw, kExactTotal));
  CHECK(max_abs(inv - bw.matrix()) < 1e-9);
  std::mt19937_64 g(37);
  for (int i = 0; i < 100; ++i) {
    const DensityMatrix rho = random_density(g);
    CHECK(max_abs(reconstruct_density(tomography_expected(rho, kExactTotal)).matrix() - rho.matrix()) < 1e-9);
  }
}

TEST_CASE("linear inversion input checks") {
  TomographyRecords empty{};
  for (int k = 0; k < 9; ++k) empty[k].setting = tomography_settings()[k];
  CHECK_THROWS_AS(linear_inversion(empty), std::domain_error);
  auto swapped = tomography_expected(DensityMatrix::maximally_mixed(), 100);
  std::swap(swapped[0], swapped[1]);
  CHECK_THROWS_AS(linear_inversion(swapped), std::invalid_argument);
}

TEST_CASE("physicality projection") {
  const auto s = project_spectrum({-0.1, 0.2, 0.4, 0.5});
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(0.2 - 0.1 / 3));
  CHECK(s[2] == doctest::Approx(0.4 - 0.1 / 3));
  CHECK(s[3] == doctest::Approx(0.5 - 0.1 / 3));
  // Deficit larger than the smallest positive eigenvalue forces a second pass.
  const auto t = project_spectrum({-0.3, 0.05, 0.5, 0.75});
  CHECK(t[0] == 0.0);
  CHECK(t[1] == 0.0);
  CHECK(t[2] == doctest::Approx(0.375));
  CHECK(t[3] == doctest::Approx(0.625));

  std::mt19937_64 g(41);
  for (int i = 0; i < 50; ++i) {
    Stream rng = Stream::derive(41, {std::uint64_t(i)});
    const DensityMatrix rho = density_from_ket(random_ket(g));
    const DensityMatrix r = reconstruct_density(tomography_measure(rho, 200, rng));
    const auto ev = hermitian_eigenvalues(r.matrix());
    CHECK(ev[0] >= -1e-12);
    CHECK(std::abs(r.matrix().trace().real() - 1.0) < 1e-12);
  }
}

TEST_CASE("reconstruction of a Bell state at 1e6 shots") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Stream rng = Stream::derive(seed, {0x746f6d6f});
    const auto rec = tomography_measure(density_from_ket(bell_psi_plus()), 1'000'000, rng);
    CHECK(fidelity_to_pure(reconstruct_density(rec), bell_psi_plus()) >= 0.999);
  }
}
