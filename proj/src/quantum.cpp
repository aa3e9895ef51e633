#include "qsep/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsep {

Ket::Ket(const Vec4c& amplitudes) : amplitudes_(amplitudes) {
  if (!amplitudes.allFinite() || std::abs(amplitudes.squaredNorm() - 1.0) > 1e-12)
    throw std::domain_error("Ket: amplitudes are not normalized");
}

DensityMatrix::DensityMatrix(const Mat4& m) : m_(m) {
  if (!m.allFinite()) throw std::domain_error("DensityMatrix: non-finite entry");
  if (hermitian_defect(m) > kHermitianTol)
    throw std::domain_error("DensityMatrix: not Hermitian");
  if (std::abs(m.trace() - Complex(1.0)) > kTraceTol)
    throw std::domain_error("DensityMatrix: trace differs from 1");
  if (hermitian_eigenvalues(m)[0] < -kEigenTol)
    throw std::domain_error("DensityMatrix: negative eigenvalue");
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(Mat4(Mat4::Identity() * 0.25), Trusted{});
}

DensityMatrix mix(const DensityMatrix& a, const DensityMatrix& b, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("mix: weight outside [0, 1]");
  // Convex combinations of valid states are valid; skip re-validation.
  return DensityMatrix(Mat4(w * a.matrix() + (1.0 - w) * b.matrix()), DensityMatrix::Trusted{});
}

void StateParams::validate() const {
  constexpr double pi = std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi / 2)) throw std::domain_error("StateParams: theta outside [0, pi/2]");
  if (!(phi >= 0.0 && phi < 2 * pi)) throw std::domain_error("StateParams: phi outside [0, 2pi)");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("StateParams: p outside [0, 1]");
}

std::string_view to_string(Separability s) {
  return s == Separability::Entangled ? "entangled" : "separable";
}

Ket ket_from_params(double theta, double phi) {
  Vec4c v = Vec4c::Zero();
  v(kHV) = std::cos(theta);
  v(kVH) = std::polar(std::sin(theta), phi);
  return Ket(v);
}

Ket bell_psi_plus() { return ket_from_params(std::numbers::pi / 4, 0.0); }

Ket basis_ket(int k) {
  if (k < 0 || k > 3) throw std::out_of_range("basis_ket: index outside [0, 3]");
  Vec4c v = Vec4c::Zero();
  v(k) = 1.0;
  return Ket(v);
}

DensityMatrix density_from_ket(const Ket& psi) {
  const Vec4c& a = psi.amplitudes();
  Mat4 m = a * a.adjoint();
  // Outer products carry round-off on the diagonal; renormalize the trace.
  m /= m.trace().real();
  return DensityMatrix(m);
}

DensityMatrix werner_like(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("werner_like: p outside [0, 1]");
  return mix(rho, DensityMatrix::maximally_mixed(), p);
}

Mat4 partial_transpose(const Mat4& m) {
  Mat4 out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int ap = 0; ap < 2; ++ap)
        for (int bp = 0; bp < 2; ++bp) out(2 * a + b, 2 * ap + bp) = m(2 * a + bp, 2 * ap + b);
  return out;
}

double min_pt_eigenvalue(const DensityMatrix& rho) {
  return hermitian_eigenvalues(partial_transpose(rho.matrix()))[0];
}

Separability ppt_label(const DensityMatrix& rho, double tol) {
  return min_pt_eigenvalue(rho) < -tol ? Separability::Entangled : Separability::Separable;
}

double concurrence(const DensityMatrix& rho) {
  // The spectrum of rho * rt equals that of sqrt(rho) * rt * sqrt(rho), which
  // is Hermitian and positive, so the Jacobi solver applies.
  Mat2 sy;
  sy << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  const Mat4 flip = kron(sy, sy);
  const Mat4 rt = flip * rho.matrix().conjugate() * flip;

  HermitianEigen e = hermitian_eigen(rho.matrix());
  for (double& x : e.values) x = std::sqrt(std::max(x, 0.0));
  const Mat4 root = assemble(e);
  Mat4 r = root * rt * root;
  r = 0.5 * (r + r.adjoint());

  std::array<double, 4> lam = hermitian_eigenvalues(r);
  for (double& x : lam) x = std::sqrt(std::max(x, 0.0));
  // lam is ascending; lam[3] is the largest.
  return std::clamp(lam[3] - lam[2] - lam[1] - lam[0], 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

double fidelity_to_pure(const DensityMatrix& rho, const Ket& psi) {
  const Vec4c& a = psi.amplitudes();
  return (a.adjoint() * rho.matrix() * a)(0, 0).real();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  HermitianEigen e = hermitian_eigen(rho.matrix());
  for (double& v : e.values) v = std::sqrt(std::max(v, 0.0));
  const Mat4 root = assemble(e);
  Mat4 inner = root * sigma.matrix() * root;
  inner = 0.5 * (inner + inner.adjoint());
  double tr = 0.0;
  for (double v : hermitian_eigenvalues(inner)) tr += std::sqrt(std::max(v, 0.0));
  return std::min(tr * tr, 1.0);
}

std::optional<double> ppt_boundary(const DensityMatrix& rho, double tol) {
  auto g = [&](double p) { return min_pt_eigenvalue(werner_like(rho, p)); };
  // min PT eigenvalue is concave in p and equals 1/4 at p = 0, so the set of
  // entangled p (if any) is an interval ending at 1.
  if (g(1.0) >= 0.0) return std::nullopt;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> ppt_boundary(double theta, double phi, double tol) {
  constexpr double eps = 1e-15;
  if (theta <= eps || theta >= std::numbers::pi / 2 - eps) return std::nullopt;
  return ppt_boundary(density_from_ket(ket_from_params(theta, phi)), tol);
}

}  // namespace qsep
