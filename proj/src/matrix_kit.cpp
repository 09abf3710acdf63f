#include "wpr/matrix_kit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace wpr {

CVec vec(const CMat& m) {
  // Eigen stores column-major, so this is exactly column stacking.
  return Eigen::Map<const CVec>(m.data(), m.size());
}

CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw Error(ErrorCode::DimensionMismatch, "unvec: size mismatch");
  return Eigen::Map<const CMat>(v.data(), rows, cols);
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double hermiticity_defect(const CMat& h) {
  if (h.rows() != h.cols()) return std::numeric_limits<double>::infinity();
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMat& h, double tol) {
  return h.rows() == h.cols() && hermiticity_defect(h) <= tol;
}

RMat herm_to_real(const CMat& h, double tol) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (!is_hermitian(h, tol * scale))
    throw Error(ErrorCode::NotHermitian, "herm_to_real: input not Hermitian");
  const Eigen::Index n = h.rows();
  RMat s(2 * n, 2 * n);
  s.topLeftCorner(n, n) = h.real();
  s.topRightCorner(n, n) = -h.imag();
  s.bottomLeftCorner(n, n) = h.imag();
  s.bottomRightCorner(n, n) = h.real();
  return s;
}

CMat real_to_herm(const RMat& s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "real_to_herm: bad shape");
  const Eigen::Index n = s.rows() / 2;
  RMat re = 0.5 * (s.topLeftCorner(n, n) + s.bottomRightCorner(n, n));
  RMat im = 0.5 * (s.bottomLeftCorner(n, n) - s.topRightCorner(n, n));
  CMat h = re.cast<Cplx>() + Cplx(0, 1) * im.cast<Cplx>();
  return 0.5 * (h + CMat(h.adjoint()));
}

CMat pinv(const CMat& m, double tol) {
  Eigen::JacobiSVD<CMat> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& sv = dec.singularValues();
  if (sv.size() == 0) return CMat::Zero(m.cols(), m.rows());
  const double cut = tol * sv(0);
  RVec inv = RVec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  return dec.matrixV() * inv.asDiagonal() * dec.matrixU().adjoint();
}

SvdResult svd(const CMat& m) {
  Eigen::JacobiSVD<CMat> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdResult{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

RVec hermitian_eigenvalues(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CMat psd_sqrt(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  RVec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace wpr
