#pragma once

// Random states and operators drawn from a SampleRng.

#include <cstddef>

#include "tsv/qcore.hpp"
#include "tsv/rng.hpp"

namespace tsv {

inline CMatrix ginibre(std::size_t rows, std::size_t cols, SampleRng& gen) {
  CMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = gen.complexNormal();
  return g;
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
inline StateVector haarState(std::size_t d, SampleRng& gen) {
  if (d < 2) throw InvalidArgument("haarState: dimension must be >= 2");
  CVector v(static_cast<Eigen::Index>(d));
  for (;;) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gen.complexNormal();
    if (v.norm() > 1e-150) return StateVector::normalize(v);
  }
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal folded into Q.
inline UnitaryOperator haarUnitary(std::size_t d, SampleRng& gen) {
  const CMatrix g = ginibre(d, d, gen);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const Complex diag = r(k, k);
    if (std::abs(diag) > 0.0) q.col(k) *= diag / std::abs(diag);
  }
  return UnitaryOperator::fromMatrix(std::move(q));
}

inline OrthonormalBasis haarBasis(std::size_t d, SampleRng& gen) {
  return OrthonormalBasis::fromColumns(haarUnitary(d, gen).matrix());
}

/// Full-rank random density matrix G G† / tr(G G†) (Hilbert–Schmidt measure).
inline DensityMatrix randomDensityMatrix(std::size_t d, SampleRng& gen) {
  const CMatrix g = ginibre(d, d, gen);
  CMatrix rho = detail::hermitianPart(g * g.adjoint());
  rho /= rho.trace().real();
  return DensityMatrix::fromMatrix(std::move(rho));
}

/// GUE-like random Hermitian matrix with O(1) entries.
inline HermitianOperator randomHermitian(std::size_t d, SampleRng& gen) {
  const CMatrix g = ginibre(d, d, gen);
  return HermitianOperator::fromMatrix(detail::hermitianPart(g));
}

}  // namespace tsv
