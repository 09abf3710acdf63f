#pragma once

#include "wpr/channel_model.hpp"
#include "wpr/matrix_kit.hpp"

namespace wprtest {

using wpr::CMat;
using wpr::Cplx;
using wpr::CVec;
using wpr::Rng;
using wpr::RVec;

inline CMat random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = wpr::complex_gaussian(rng);
  return m;
}

inline CVec random_cvec(Eigen::Index n, Rng& rng) {
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = wpr::complex_gaussian(rng);
  return v;
}

inline CMat random_hermitian(Eigen::Index n, Rng& rng) {
  CMat a = random_complex(n, n, rng);
  return 0.5 * (a + CMat(a.adjoint()));
}

inline CMat random_psd(Eigen::Index n, Rng& rng, Eigen::Index rank = -1) {
  if (rank < 0) rank = n;
  CMat a = random_complex(n, rank, rng);
  return a * a.adjoint();
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * wpr::uniform01(rng);
}

}  // namespace wprtest
