#pragma once

#include <Eigen/Dense>
#include <complex>

#include "wpr/errors.hpp"

namespace wpr {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Column-stacking and its inverse.
CVec vec(const CMat& m);
CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols);

CMat kron(const CMat& a, const CMat& b);

// Max absolute asymmetry |H - H^H|.
double hermiticity_defect(const CMat& h);
bool is_hermitian(const CMat& h, double tol = 1e-10);

// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian H.
// Preserves PSD-ness; doubles every eigenvalue's multiplicity; and
// Tr{embed(A) embed(B)} = 2 Re Tr{A B}.
RMat herm_to_real(const CMat& h, double tol = 1e-10);
// Inverse of the embedding (averages the two blocks so small asymmetries
// from floating point cancel).
CMat real_to_herm(const RMat& s);

// Moore-Penrose pseudo-inverse via SVD; singular values below
// tol * sigma_max are treated as zero.
CMat pinv(const CMat& m, double tol = 1e-10);

struct SvdResult {
  CMat u;                 // left singular vectors, orthonormal columns
  RVec singular_values;   // descending, nonnegative
  CMat v;                 // right singular vectors, orthonormal columns
};

// Thin SVD with descending singular values.
SvdResult svd(const CMat& m);

// Eigenvalues of a Hermitian matrix, ascending (values only).
RVec hermitian_eigenvalues(const CMat& h);

// PSD square root (negative eigenvalues clipped at 0).
CMat psd_sqrt(const CMat& h);

}  // namespace wpr
