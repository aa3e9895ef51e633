#pragma once

// Shared helpers for the test programs: random states built with Eigen, and
// small numeric utilities. Nothing here calls into the code under test
// beyond constructing DensityMatrix values.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "qsep/linalg.hpp"
#include "qsep/quantum.hpp"

namespace qsep::testing {

inline constexpr double kPi = std::numbers::pi;
inline const double kSqrt2 = std::sqrt(2.0);

inline Mat4 random_complex(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Mat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = Complex(n(g), n(g));
  return m;
}

inline Mat4 random_hermitian(std::mt19937_64& g) {
  const Mat4 a = random_complex(g);
  return 0.5 * (a + a.adjoint());
}

/// Haar-ish unitary from the QR factor of a Ginibre matrix.
inline Mat4 random_unitary(std::mt19937_64& g) {
  Eigen::HouseholderQR<Mat4> qr(random_complex(g));
  return qr.householderQ();
}

inline Mat2 random_unitary2(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Mat2 a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = Complex(n(g), n(g));
  Eigen::HouseholderQR<Mat2> qr(a);
  return qr.householderQ();
}

/// Full-rank random state G G^dagger / tr, from the Ginibre ensemble.
inline DensityMatrix random_density(std::mt19937_64& g) {
  const Mat4 a = random_complex(g);
  Mat4 r = a * a.adjoint();
  r /= r.trace().real();
  r = 0.5 * (r + r.adjoint());
  return DensityMatrix(r);
}

inline Ket random_ket(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Vec4c v;
  for (int i = 0; i < 4; ++i) v(i) = Complex(n(g), n(g));
  v.normalize();
  return Ket(v);
}

inline Mat2 pauli(int axis) {
  Mat2 m;
  switch (axis) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

/// Explicit Kronecker product written out entry by entry.
inline Mat4 kron_oracle(const Mat2& a, const Mat2& b) {
  Mat4 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) m(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return m;
}

/// Bell psi+ Werner mixture written out by hand.
inline Mat4 bell_werner_matrix(double p) {
  Mat4 m = Mat4::Identity() * ((1.0 - p) / 4.0);
  m(1, 1) += p / 2;
  m(2, 2) += p / 2;
  m(1, 2) += p / 2;
  m(2, 1) += p / 2;
  return m;
}

inline double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace qsep::testing
