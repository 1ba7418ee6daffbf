#include "tsv/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "tsv/random.hpp"
#include "test_support.hpp"

using namespace tsv;
using tsv::testing::gen;
using tsv::testing::maxDiff;

namespace {

RVector vec(std::initializer_list<double> xs) {
  RVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

RVector eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// H with a random eigenbasis; if `degenerate`, the two lowest levels coincide.
HermitianOperator hamiltonian(std::size_t d, SampleRng& g, bool degenerate) {
  RVector e(static_cast<Eigen::Index>(d));
  for (auto& x : e) x = 4.0 * g.uniform() - 2.0;
  std::sort(e.begin(), e.end());
  if (degenerate) e(1) = e(0);
  const CMatrix v = haarUnitary(d, g).matrix();
  return HermitianOperator::fromMatrix(detail::hermitianPart(v * e.cast<Complex>().asDiagonal() * v.adjoint()));
}

/// Diagonal of ρ in H's eigenbasis, ascending-eigenvalue order.
RVector eigenDiagonal(const CMatrix& rho, const HermitianOperator& h) {
  const CMatrix v = spectral(h).eigenvectors.matrix();
  return (v.adjoint() * rho * v).diagonal().real();
}

/// A non-trivial stationary partner: ρ↓'s own diagonal shifted by a small
/// zero-sum perturbation, so ρ↑ − ρ↓ commutes with H but ρ↑ ≠ ρ↓.
TwoStatePairMixed stationaryPair(std::size_t d, SampleRng& g, const HermitianOperator& h) {
  const DensityMatrix down = randomDensityMatrix(d, g);
  RVector diag = eigenDiagonal(down.matrix(), h);
  const double minEig = eigenvalues(down.matrix()).minCoeff();
  const double eps = 0.4 * minEig;
  diag(0) += eps;
  diag(1) -= eps;
  return {stationaryPartner(down, h, diag), down};
}

}  // namespace

TEST(EvolvePair, IdentityLeavesPairUnchanged) {
  auto g = gen(60);
  const TwoStatePairMixed p(randomDensityMatrix(3, g), randomDensityMatrix(3, g));
  const TwoStatePairMixed q = evolvePair(p, UnitaryOperator::identity(3));
  EXPECT_LT(maxDiff(q.forward().matrix(), p.forward().matrix()), 1e-15);
  EXPECT_LT(maxDiff(q.backward().matrix(), p.backward().matrix()), 1e-15);
}

TEST(EvolvePair, HamiltonianDiagonalPairUnchanged) {
  auto g = gen(61);
  const HermitianOperator h = hamiltonian(4, g, false);
  const CMatrix v = spectral(h).eigenvectors.matrix();
  const CMatrix a = v * vec({0.1, 0.2, 0.3, 0.4}).cast<Complex>().asDiagonal() * v.adjoint();
  const CMatrix b = v * vec({0.7, 0.1, 0.1, 0.1}).cast<Complex>().asDiagonal() * v.adjoint();
  const TwoStatePairMixed p(DensityMatrix::fromMatrix(detail::hermitianPart(a)),
                            DensityMatrix::fromMatrix(detail::hermitianPart(b)));
  const TwoStatePairMixed q = evolvePair(p, propagator(h, 0.37));
  EXPECT_LT(maxDiff(q.forward().matrix(), p.forward().matrix()), 1e-12);
  EXPECT_LT(maxDiff(q.backward().matrix(), p.backward().matrix()), 1e-12);
}

TEST(EvolvePair, ConventionsDiffer) {
  // Under the default, ρ↑ goes with U†·U; the textbook switch swaps roles.
  auto g = gen(62);
  const TwoStatePairMixed p(randomDensityMatrix(2, g), randomDensityMatrix(2, g));
  const UnitaryOperator u = haarUnitary(2, g);
  const TwoStatePairMixed a = evolvePair(p, u);
  const TwoStatePairMixed b = evolvePair(p, u, EvolutionConvention::Textbook);
  const CMatrix& um = u.matrix();
  EXPECT_LT(maxDiff(a.forward().matrix(), um.adjoint() * p.forward().matrix() * um), 1e-14);
  EXPECT_LT(maxDiff(a.backward().matrix(), um * p.backward().matrix() * um.adjoint()), 1e-14);
  EXPECT_LT(maxDiff(b.forward().matrix(), um * p.forward().matrix() * um.adjoint()), 1e-14);
  EXPECT_LT(maxDiff(b.backward().matrix(), um.adjoint() * p.backward().matrix() * um), 1e-14);
}

TEST(EvolvePair, PreservesSpectraAndTraces) {
  for (int i = 0; i < 100; ++i) {
    auto g = gen(63, i);
    const std::size_t d = 2 + i % 5;
    const TwoStatePairMixed p(randomDensityMatrix(d, g), randomDensityMatrix(d, g));
    TwoStatePairMixed q = p;
    ASSERT_NO_THROW(q = evolvePair(p, haarUnitary(d, g)));
    EXPECT_NEAR(q.forward().matrix().trace().real(), 1.0, 1e-10);
    EXPECT_NEAR(q.backward().matrix().trace().real(), 1.0, 1e-10);
    EXPECT_LT((eigenvalues(q.forward().matrix()) - eigenvalues(p.forward().matrix())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((eigenvalues(q.backward().matrix()) - eigenvalues(p.backward().matrix())).cwiseAbs().maxCoeff(), 1e-10);
  }
  auto g = gen(64);
  const TwoStatePairMixed p(randomDensityMatrix(2, g), randomDensityMatrix(2, g));
  EXPECT_THROW(evolvePair(p, UnitaryOperator::identity(3)), DimensionMismatch);
}

TEST(Propagator, MatchesClosedForm) {
  // e^{−iσz t} = diag(e^{−it}, e^{it}).
  const UnitaryOperator u = propagator(HermitianOperator::fromMatrix(pauli::z()), 0.3);
  EXPECT_NEAR(std::abs(u.matrix()(0, 0) - std::polar(1.0, -0.3)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u.matrix()(1, 1) - std::polar(1.0, 0.3)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u.matrix()(0, 1)), 0.0, 1e-15);
}

TEST(StationarityCheck, Examples) {
  auto g = gen(65);
  const HermitianOperator h = hamiltonian(3, g, false);
  const DensityMatrix r = randomDensityMatrix(3, g);
  EXPECT_TRUE(stationarityCheck({r, r}, h, 1e-12));

  const HermitianOperator sz = HermitianOperator::fromMatrix(pauli::z());
  const DensityMatrix d0 = DensityMatrix::pure(StateVector::basis(2, 0));
  const DensityMatrix half = DensityMatrix::maximallyMixed(2);
  EXPECT_TRUE(stationarityCheck({d0, half}, sz, 1e-12));
  const DensityMatrix plus = DensityMatrix::pure(tsv::testing::plus());
  EXPECT_FALSE(stationarityCheck({plus, half}, sz, 1e-9));
  // ‖[|+⟩⟨+|, σz]‖_F = √2.
  EXPECT_NEAR(stationarityDefect({plus, half}, sz), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(stationarityCheck({half, half}, HermitianOperator::fromMatrix(CMatrix::Identity(3, 3)), 1e-9),
               DimensionMismatch);
}

TEST(CommutatorSolve, TwoByTwoExample) {
  CMatrix k(2, 2);
  k << 0.0, Complex(0, 2), Complex(0, 2), 0.0;
  const StationarySolveInput in{HermitianOperator::diagonal(vec({1.0, 3.0})), CommutatorTarget::fromMatrix(k),
                                vec({0.5, 0.5})};
  const CommutatorSolution s = commutatorSolve(in, false);
  EXPECT_NEAR(std::abs(s.rho(0, 1) - Complex(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.rho(1, 0) - Complex(0, -1)), 0.0, 1e-15);
  EXPECT_LE(s.residual, 1e-12);
  EXPECT_NEAR(s.minEigenvalue, -0.5, 1e-14);
  try {
    commutatorSolve(in, true);
    FAIL() << "expected NotPsd";
  } catch (const NotPsd& e) {
    EXPECT_NEAR(e.minEigenvalue(), -0.5, 1e-14);
  }
}

TEST(CommutatorSolve, ZeroTargetGivesDiagonal) {
  auto g = gen(66);
  const HermitianOperator h = hamiltonian(4, g, false);
  const RVector diag = vec({0.4, 0.3, 0.2, 0.1});
  const StationarySolveInput in{h, CommutatorTarget::fromMatrix(CMatrix::Zero(4, 4)), diag};
  const CommutatorSolution s = commutatorSolve(in, true);
  const CMatrix v = spectral(h).eigenvectors.matrix();
  const CMatrix inEig = v.adjoint() * s.rho * v;
  EXPECT_LT(maxDiff(inEig, diag.cast<Complex>().asDiagonal().toDenseMatrix()), 1e-14);
}

TEST(CommutatorSolve, InfeasibleTargets) {
  CMatrix k(2, 2);
  k << 0.0, Complex(0, 1), Complex(0, 1), 0.0;
  // H = I: everything is one degenerate block.
  EXPECT_THROW(commutatorSolve({HermitianOperator::fromMatrix(CMatrix::Identity(2, 2)),
                                CommutatorTarget::fromMatrix(k), vec({0.5, 0.5})},
                               false),
               InfeasibleK);
  // Nonzero diagonal in the eigenbasis.
  CMatrix kd = CMatrix::Zero(2, 2);
  kd(0, 0) = Complex(0, 1e-3);
  EXPECT_THROW(commutatorSolve({HermitianOperator::diagonal(vec({1.0, 3.0})), CommutatorTarget::fromMatrix(kd),
                                vec({0.5, 0.5})},
                               false),
               InfeasibleK);
  // Non-anti-Hermitian target is rejected at construction.
  EXPECT_THROW(CommutatorTarget::fromMatrix(CMatrix::Identity(2, 2)), InvariantViolation);
}

TEST(CommutatorSolve, InfeasibleExactlyWhenConditionsFail) {
  for (int i = 0; i < 200; ++i) {
    auto g = gen(67, i);
    const std::size_t d = 3 + i % 3;
    const bool degenerate = i % 2 == 0;
    const HermitianOperator h = hamiltonian(d, g, degenerate);
    const CMatrix v = spectral(h).eigenvectors.matrix();
    const CMatrix x = randomHermitian(d, g).matrix();
    CMatrix kEig = v.adjoint() * commutator(x, h.matrix()) * v;
    const int mode = i % 4;  // 0 feasible, 1 diagonal kick, 2 block kick, 3 tiny (feasible) kick
    if (mode == 1) kEig(2, 2) += Complex(0, 0.01);
    if (mode == 2) {
      kEig(0, 1) += Complex(0.01, 0.0);
      kEig(1, 0) -= Complex(0.01, 0.0);
    }
    if (mode == 3) kEig(2, 2) += Complex(0, 1e-13);
    const CMatrix k = v * kEig * v.adjoint();
    const bool expectInfeasible = mode == 1 || (mode == 2 && degenerate);
    const StationarySolveInput in{h, CommutatorTarget::fromMatrix((k - k.adjoint()) * 0.5),
                                  RVector::Constant(static_cast<Eigen::Index>(d), 1.0 / d)};
    if (expectInfeasible) {
      EXPECT_THROW(commutatorSolve(in, false), InfeasibleK) << "instance " << i;
    } else {
      EXPECT_NO_THROW(commutatorSolve(in, false)) << "instance " << i;
    }
  }
}

TEST(CommutatorSolve, ResidualAndHermiticityOnRandomInstances) {
  for (int i = 0; i < 100; ++i) {
    auto g = gen(68, i);
    const std::size_t d = 2 + i % 5;
    const bool degenerate = d >= 3 && i % 10 == 1;
    const HermitianOperator h = hamiltonian(d, g, degenerate);
    const CMatrix k0 = commutator(randomHermitian(d, g).matrix(), h.matrix());
    const CMatrix k = (k0 - k0.adjoint()) * 0.5;
    RVector diag(static_cast<Eigen::Index>(d));
    for (auto& x : diag) x = g.uniform();
    const CommutatorSolution s = commutatorSolve({h, CommutatorTarget::fromMatrix(k), diag}, false);
    EXPECT_LE(s.residual, 1e-12 * std::max(1.0, k.norm())) << "instance " << i;
    EXPECT_LE((s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((eigenDiagonal(s.rho, h) - diag).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StationaryPartner, Examples) {
  auto g = gen(69);
  const HermitianOperator h = hamiltonian(3, g, false);
  const CMatrix v = spectral(h).eigenvectors.matrix();
  const RVector diag = vec({0.5, 0.3, 0.2});
  const DensityMatrix down =
      DensityMatrix::fromMatrix(detail::hermitianPart(v * diag.cast<Complex>().asDiagonal() * v.adjoint()));
  EXPECT_LT(maxDiff(stationaryPartner(down, h, diag).matrix(), down.matrix()), 1e-14);

  const HermitianOperator sz = HermitianOperator::fromMatrix(pauli::z());
  const DensityMatrix plus = DensityMatrix::pure(tsv::testing::plus());
  EXPECT_LT(maxDiff(stationaryPartner(plus, sz, vec({0.5, 0.5})).matrix(), plus.matrix()), 1e-15);
  // [[3/4, 1/2], [1/2, 1/4]] has eigenvalues 1/2 ± √5/4, one negative.
  EXPECT_LT(0.5 - std::sqrt(5.0) / 4.0, 0.0);
  EXPECT_THROW(stationaryPartner(plus, sz, vec({0.75, 0.25})), NotPsd);
  EXPECT_THROW(stationaryPartner(plus, sz, vec({0.75, 0.75})), InvalidArgument);
}

TEST(StationaryPartner, AlwaysStationary) {
  for (int i = 0; i < 100; ++i) {
    auto g = gen(70, i);
    const std::size_t d = 2 + i % 5;
    const HermitianOperator h = hamiltonian(d, g, false);
    const TwoStatePairMixed p = stationaryPair(d, g, h);
    EXPECT_TRUE(stationarityCheck(p, h, 1e-9));
    EXPECT_LE((commutator(p.forward().matrix(), h.matrix()) - commutator(p.backward().matrix(), h.matrix())).norm(),
              1e-10);
  }
}

TEST(FirstOrderInvariance, DiagonalPairIsExactlyInvariant) {
  auto g = gen(71);
  const HermitianOperator h = hamiltonian(3, g, false);
  const CMatrix v = spectral(h).eigenvectors.matrix();
  const DensityMatrix r = DensityMatrix::fromMatrix(
      detail::hermitianPart(v * vec({0.6, 0.3, 0.1}).cast<Complex>().asDiagonal() * v.adjoint()));
  for (double dt : {1e-1, 1e-3, 1.0}) EXPECT_LE(firstOrderInvarianceCheck({r, r}, h, dt), 1e-14);
  EXPECT_THROW(firstOrderInvarianceCheck({r, r}, h, 0.0), InvalidArgument);
}

TEST(FirstOrderInvariance, HalvingRatios) {
  for (int i = 0; i < 30; ++i) {
    auto g = gen(72, i);
    const std::size_t d = 2 + i % 4;
    const HermitianOperator h = hamiltonian(d, g, false);
    const TwoStatePairMixed stationary = stationaryPair(d, g, h);
    const TwoStatePairMixed generic(randomDensityMatrix(d, g), randomDensityMatrix(d, g));
    for (double dt : {1e-2, 1e-3, 1e-4}) {
      const double rs = invarianceHalvingRatio(stationary, h, dt);
      EXPECT_GE(rs, 3.2) << "i=" << i << " dt=" << dt;
      EXPECT_LE(rs, 4.8) << "i=" << i << " dt=" << dt;
      const double rg = invarianceHalvingRatio(generic, h, dt);
      EXPECT_GE(rg, 1.6) << "i=" << i << " dt=" << dt;
      EXPECT_LE(rg, 2.4) << "i=" << i << " dt=" << dt;
    }
  }
}
