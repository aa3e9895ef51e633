#include "qsep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qsep {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kOffDiagTol = 1e-13;
constexpr int kMaxSweeps = 200;

double off_diagonal_norm(const Mat4& a) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

double hermitian_defect(const Mat4& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

HermitianEigen hermitian_eigen(const Mat4& m) {
  if (!m.allFinite() || hermitian_defect(m) > kHermitianTol)
    throw std::domain_error("hermitian_eigen: input is not Hermitian");

  Mat4 a = 0.5 * (m + m.adjoint());
  Mat4 v = Mat4::Identity();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) < kOffDiagTol) break;
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        // Phase-rotate so that a(p,q) becomes real, then a real Givens
        // rotation with tan(2t) = 2r / (a_qq - a_pp) zeroes it.
        const Complex phase = a(p, q) / r;
        const double t = 0.5 * std::atan2(2.0 * r, a(q, q).real() - a(p, p).real());
        const double c = std::cos(t);
        const double s = std::sin(t);
        Mat4 j = Mat4::Identity();
        j(p, p) = c;
        j(p, q) = s;
        j(q, p) = -s * std::conj(phase);
        j(q, q) = c * std::conj(phase);
        a = j.adjoint() * a * j;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        v = v * j;
      }
    }
  }

  std::array<int, 4> order{};
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a(x, x).real() < a(y, y).real(); });

  HermitianEigen out;
  for (int k = 0; k < 4; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

std::array<double, 4> hermitian_eigenvalues(const Mat4& m) { return hermitian_eigen(m).values; }

Mat4 assemble(const HermitianEigen& e) {
  Mat4 d = Mat4::Zero();
  for (int k = 0; k < 4; ++k) d(k, k) = e.values[k];
  return e.vectors * d * e.vectors.adjoint();
}

Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

}  // namespace qsep
