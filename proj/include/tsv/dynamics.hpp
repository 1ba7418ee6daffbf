#pragma once

// Two-state evolution and stationary pairs.
//
// The measured operator is ρ↑ + ρ↓. It is invariant to first order in t
// exactly when [ρ↑, H] = [ρ↓, H]. Given a target commutator K, the
// Hermitian solutions of [ρ, H] = K are fixed off the diagonal of H's
// eigenbasis by ρ_ij = K_ij / (E_j − E_i) and free on the diagonal.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tsv/assignment.hpp"
#include "tsv/qcore.hpp"

namespace tsv {

enum class EvolutionConvention {
  /// ρ↑ ↦ U†ρ↑U, ρ↓ ↦ Uρ↓U† (default)
  Paper,
  /// ρ↑ ↦ Uρ↑U†, ρ↓ ↦ U†ρ↓U
  Textbook,
};

class CommutatorTarget {
 public:
  static CommutatorTarget fromMatrix(CMatrix k) {
    detail::requireSquare(k, "CommutatorTarget");
    if (!isAntiHermitian(k, kTolerances.hermitian)) {
      throw InvariantViolation("CommutatorTarget: K must be anti-Hermitian");
    }
    return CommutatorTarget(std::move(k));
  }
  const CMatrix& matrix() const& noexcept { return k_; }
  CMatrix matrix() && noexcept { return std::move(k_); }

 private:
  explicit CommutatorTarget(CMatrix k) : k_(std::move(k)) {}
  CMatrix k_;
};

struct StationarySolveInput {
  HermitianOperator hamiltonian;
  CommutatorTarget target;
  /// ρ_ii in H's eigenbasis, ordered by ascending eigenvalue.
  RVector diagonal;
};

struct CommutatorSolution {
  CMatrix rho;
  double residual;       // ‖[ρ,H] − K‖_F
  double minEigenvalue;
};

/// e^{−iHt} via the spectral decomposition of H.
inline UnitaryOperator propagator(const HermitianOperator& h, double t) {
  const SpectralDecomposition sd = spectral(h);
  const CMatrix& v = sd.eigenvectors.matrix();
  CVector phases(v.cols());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::polar(1.0, -sd.eigenvalues(i) * t);
  return UnitaryOperator::fromMatrix(v * phases.asDiagonal() * v.adjoint());
}

inline TwoStatePairMixed evolvePair(const TwoStatePairMixed& pair, const UnitaryOperator& u,
                                    EvolutionConvention convention = EvolutionConvention::Paper) {
  detail::requireSameDim(static_cast<Eigen::Index>(pair.dim()), static_cast<Eigen::Index>(u.dim()), "evolvePair");
  const CMatrix& um = u.matrix();
  const CMatrix ud = um.adjoint();
  const CMatrix& up = pair.forward().matrix();
  const CMatrix& down = pair.backward().matrix();
  CMatrix f, b;
  if (convention == EvolutionConvention::Paper) {
    f = ud * up * um;
    b = um * down * ud;
  } else {
    f = um * up * ud;
    b = ud * down * um;
  }
  return {DensityMatrix::fromMatrix(detail::hermitianPart(f)), DensityMatrix::fromMatrix(detail::hermitianPart(b))};
}

inline double stationarityDefect(const TwoStatePairMixed& pair, const HermitianOperator& h) {
  detail::requireSameDim(static_cast<Eigen::Index>(pair.dim()), static_cast<Eigen::Index>(h.dim()),
                         "stationarityCheck");
  return (commutator(pair.forward().matrix(), h.matrix()) - commutator(pair.backward().matrix(), h.matrix()))
      .norm();
}

/// ‖[ρ↑,H] − [ρ↓,H]‖_F ≤ tol.
inline bool stationarityCheck(const TwoStatePairMixed& pair, const HermitianOperator& h, double tol) {
  return stationarityDefect(pair, h) <= tol;
}

/// Solves [ρ, H] = K for Hermitian ρ with the given diagonal (in H's
/// eigenbasis). Off-diagonal entries inside a degenerate eigenspace are
/// set to zero. Throws InfeasibleK when K has a diagonal or a degenerate
/// block entry above tolerance, and NotPsd when `requirePsd` is set and
/// the solution has a negative eigenvalue.
inline CommutatorSolution commutatorSolve(const StationarySolveInput& input, bool requirePsd) {
  const CMatrix& h = input.hamiltonian.matrix();
  const CMatrix& k = input.target.matrix();
  const auto n = h.rows();
  detail::requireSameDim(n, k.rows(), "commutatorSolve");
  detail::requireSameDim(n, input.diagonal.size(), "commutatorSolve");

  const SpectralDecomposition sd = spectral(input.hamiltonian);
  const CMatrix& v = sd.eigenvectors.matrix();
  const CMatrix kEig = v.adjoint() * k * v;
  const std::vector<std::size_t> block = sd.blockIndex();
  const double feasTol = kTolerances.commutatorFeasibility * std::max(1.0, k.norm());

  CMatrix rhoEig = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(kEig(i, i)) > feasTol) {
      throw InfeasibleK("commutatorSolve: K has diagonal entry " + std::to_string(std::abs(kEig(i, i))) +
                        " in the eigenbasis of H");
    }
    rhoEig(i, i) = input.diagonal(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)]) {
        if (std::abs(kEig(i, j)) > feasTol || std::abs(kEig(j, i)) > feasTol) {
          throw InfeasibleK("commutatorSolve: K does not vanish inside a degenerate eigenspace of H");
        }
        continue;
      }
      // Average the (i,j) and (j,i) equations so that ρ is exactly Hermitian.
      const Complex kij = 0.5 * (kEig(i, j) - std::conj(kEig(j, i)));
      const Complex rij = kij / (sd.eigenvalues(j) - sd.eigenvalues(i));
      rhoEig(i, j) = rij;
      rhoEig(j, i) = std::conj(rij);
    }
  }

  CommutatorSolution out;
  out.rho = detail::hermitianPart(v * rhoEig * v.adjoint());
  out.residual = (commutator(out.rho, h) - k).norm();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(out.rho, Eigen::EigenvaluesOnly);
  out.minEigenvalue = es.eigenvalues().minCoeff();
  if (requirePsd && out.minEigenvalue < -kTolerances.psd) {
    throw NotPsd("commutatorSolve: chosen diagonal gives eigenvalue " + std::to_string(out.minEigenvalue),
                 out.minEigenvalue);
  }
  return out;
}

/// ρ↑ with [ρ↑, H] = [ρ↓, H] and the given eigenbasis diagonal, so that
/// (ρ↑, ρ↓) is stationary.
inline DensityMatrix stationaryPartner(const DensityMatrix& rhoDown, const HermitianOperator& h,
                                       const RVector& diagonal) {
  detail::requireSameDim(static_cast<Eigen::Index>(rhoDown.dim()), static_cast<Eigen::Index>(h.dim()),
                         "stationaryPartner");
  if (!(std::abs(diagonal.sum() - 1.0) <= kTolerances.trace)) {
    throw InvalidArgument("stationaryPartner: diagonal must sum to 1");
  }
  const CMatrix k = commutator(rhoDown.matrix(), h.matrix());
  StationarySolveInput in{h, CommutatorTarget::fromMatrix((k - k.adjoint()) * 0.5), diagonal};
  const CommutatorSolution sol = commutatorSolve(in, /*requirePsd=*/true);
  return DensityMatrix::fromMatrix(sol.rho);
}

/// S(t) = U†ρ↑U + Uρ↓U† with U = e^{−iHt}; returns ‖S(dt) − S(0)‖_F.
inline double firstOrderInvarianceCheck(const TwoStatePairMixed& pair, const HermitianOperator& h, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("firstOrderInvarianceCheck: dt must be positive");
  const TwoStatePairMixed later = evolvePair(pair, propagator(h, dt), EvolutionConvention::Paper);
  return (later.summed() - pair.summed()).norm();
}

/// r(dt) / r(dt/2): ≈ 4 for stationary pairs, ≈ 2 otherwise.
inline double invarianceHalvingRatio(const TwoStatePairMixed& pair, const HermitianOperator& h, double dt) {
  return firstOrderInvarianceCheck(pair, h, dt) / firstOrderInvarianceCheck(pair, h, dt / 2.0);
}

}  // namespace tsv
