#pragma once

#include <array>
#include <complex>

#include <Eigen/Core>

namespace qsep {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix<Complex, 2, 2>;
using Mat4 = Eigen::Matrix<Complex, 4, 4>;
using Vec4c = Eigen::Matrix<Complex, 4, 1>;

/// Largest entrywise deviation |M - M^dagger|.
double hermitian_defect(const Mat4& m);

/// Spectrum of a Hermitian 4x4 matrix, eigenvalues ascending; column k of
/// `vectors` is the eigenvector for `values[k]`.
struct HermitianEigen {
  std::array<double, 4> values{};
  Mat4 vectors = Mat4::Identity();
};

/// Cyclic complex Jacobi. Converges when the off-diagonal Frobenius norm
/// drops below 1e-13 or after 200 sweeps. Throws std::domain_error when the
/// input deviates from Hermitian by more than 1e-10.
HermitianEigen hermitian_eigen(const Mat4& m);

std::array<double, 4> hermitian_eigenvalues(const Mat4& m);

/// V diag(values) V^dagger.
Mat4 assemble(const HermitianEigen& e);

Mat4 kron(const Mat2& a, const Mat2& b);

}  // namespace qsep
