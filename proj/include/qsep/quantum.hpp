#pragma once

#include <optional>
#include <string_view>

#include "qsep/linalg.hpp"

namespace qsep {

// Basis ordering is (HH, HV, VH, VV) with H the computational |0>; the first
// factor is Alice's photon, the second Bob's.
enum BasisIndex : int { kHH = 0, kHV = 1, kVH = 2, kVV = 3 };

/// Normalized two-qubit pure state.
class Ket {
 public:
  /// Throws std::domain_error unless |amplitudes|^2 == 1 within 1e-12.
  explicit Ket(const Vec4c& amplitudes);

  const Vec4c& amplitudes() const { return amplitudes_; }
  Complex operator[](int i) const { return amplitudes_(i); }

 private:
  Vec4c amplitudes_;
};

/// Hermitian, trace-one, positive semidefinite 4x4 matrix.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kEigenTol = 1e-10;

  /// Validates every invariant; throws std::domain_error on violation.
  explicit DensityMatrix(const Mat4& m);

  /// Maximally mixed state I/4.
  static DensityMatrix maximally_mixed();

  const Mat4& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

 private:
  struct Trusted {};
  DensityMatrix(const Mat4& m, Trusted) : m_(m) {}
  friend DensityMatrix mix(const DensityMatrix&, const DensityMatrix&, double);

  Mat4 m_;
};

/// Convex combination w*a + (1-w)*b. Throws std::domain_error unless 0 <= w <= 1.
DensityMatrix mix(const DensityMatrix& a, const DensityMatrix& b, double w);

/// Parameters of the Werner-like family.
struct StateParams {
  double theta = 0.0;  // [0, pi/2]
  double phi = 0.0;    // [0, 2pi)
  double p = 1.0;      // [0, 1]

  /// Throws std::domain_error when any field is outside its range.
  void validate() const;
};

enum class Separability { Separable = 0, Entangled = 1 };

std::string_view to_string(Separability s);

/// cos(theta)|HV> + e^{i phi} sin(theta)|VH>.
Ket ket_from_params(double theta, double phi);

/// (|HV> + |VH>)/sqrt(2).
Ket bell_psi_plus();

/// Computational-basis product state |k>, k in BasisIndex.
Ket basis_ket(int k);

DensityMatrix density_from_ket(const Ket& psi);

/// p*rho + (1-p)*I/4; throws std::domain_error unless 0 <= p <= 1.
DensityMatrix werner_like(const DensityMatrix& rho, double p);

/// Transpose of Bob's indices. The result need not be positive.
Mat4 partial_transpose(const Mat4& m);

/// Entangled iff the smallest eigenvalue of the partial transpose is below -tol.
Separability ppt_label(const DensityMatrix& rho, double tol = 0.0);

double min_pt_eigenvalue(const DensityMatrix& rho);

/// Wootters concurrence.
double concurrence(const DensityMatrix& rho);

double purity(const DensityMatrix& rho);

/// <psi|rho|psi>.
double fidelity_to_pure(const DensityMatrix& rho, const Ket& psi);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Mixing probability at which werner_like(rho, p) turns entangled, found by
/// bisection on the smallest partial-transpose eigenvalue (at most 60
/// iterations). Empty when the mixture stays separable on all of [0, 1].
std::optional<double> ppt_boundary(const DensityMatrix& rho, double tol = 1e-10);

/// Boundary of the pure family ket_from_params(theta, phi). Empty for
/// theta = 0 or pi/2, where no entangled region exists.
std::optional<double> ppt_boundary(double theta, double phi, double tol = 1e-10);

}  // namespace qsep
