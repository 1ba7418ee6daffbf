#pragma once

// Dense complex linear algebra for small Hilbert spaces (d ≲ 32).
//
// Matrices are Eigen::MatrixXcd (column-major, complex<double>). The
// strong types below validate their invariants on construction and are
// immutable afterwards.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tsv/errors.hpp"
#include "tsv/tolerances.hpp"

namespace tsv {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

namespace detail {

inline double maxAbs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermitianDefect(const CMatrix& m) { return maxAbs(m - m.adjoint()); }

inline void requireSquare(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected square");
  }
}

inline void requireSameDim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

inline void requireDimAtLeastTwo(Eigen::Index d, const char* what) {
  if (d < 2) throw InvariantViolation(std::string(what) + ": dimension must be >= 2");
}

// Exactly Hermitian part: entry (i,j) and (j,i) are bitwise conjugates.
inline CMatrix hermitianPart(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

}  // namespace detail

class StateVector {
 public:
  /// Validates that `amps` already has unit norm.
  static StateVector fromAmplitudes(CVector amps) {
    detail::requireDimAtLeastTwo(amps.size(), "StateVector");
    const double n = amps.norm();
    if (!(std::abs(n - 1.0) <= kTolerances.norm)) {
      throw InvariantViolation("StateVector: norm " + std::to_string(n) + " is not 1");
    }
    return StateVector(std::move(amps));
  }

  static StateVector normalize(CVector amps) {
    detail::requireDimAtLeastTwo(amps.size(), "StateVector");
    const double n = amps.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvariantViolation("StateVector: cannot normalize zero vector");
    amps /= n;
    return fromAmplitudes(std::move(amps));
  }

  static StateVector basis(std::size_t d, std::size_t k) {
    if (k >= d) throw InvalidArgument("StateVector::basis: index out of range");
    CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
    v(static_cast<Eigen::Index>(k)) = 1.0;
    return fromAmplitudes(std::move(v));
  }

  const CVector& amplitudes() const& noexcept { return amps_; }
  CVector amplitudes() && noexcept { return std::move(amps_); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  Complex operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

  StateVector withPhase(double phi) const { return StateVector(amps_ * std::polar(1.0, phi)); }

 private:
  explicit StateVector(CVector amps) : amps_(std::move(amps)) {}
  CVector amps_;
};

class HermitianOperator {
 public:
  static HermitianOperator fromMatrix(CMatrix m) {
    detail::requireSquare(m, "HermitianOperator");
    const double defect = detail::hermitianDefect(m);
    if (!(defect <= kTolerances.hermitian)) {
      throw InvariantViolation("HermitianOperator: Hermitian defect " + std::to_string(defect));
    }
    return HermitianOperator(std::move(m));
  }

  static HermitianOperator diagonal(const RVector& values) {
    return fromMatrix(values.cast<Complex>().asDiagonal());
  }

  const CMatrix& matrix() const& noexcept { return m_; }
  CMatrix matrix() && noexcept { return std::move(m_); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

 private:
  explicit HermitianOperator(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

class DensityMatrix {
 public:
  static DensityMatrix fromMatrix(CMatrix m) {
    detail::requireSquare(m, "DensityMatrix");
    detail::requireDimAtLeastTwo(m.rows(), "DensityMatrix");
    const double defect = detail::hermitianDefect(m);
    if (!(defect <= kTolerances.hermitian)) {
      throw InvariantViolation("DensityMatrix: Hermitian defect " + std::to_string(defect));
    }
    const Complex tr = m.trace();
    if (!(std::abs(tr - 1.0) <= kTolerances.trace)) {
      throw InvariantViolation("DensityMatrix: trace " + std::to_string(tr.real()) + " is not 1");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    const double lowest = es.eigenvalues().minCoeff();
    if (!(lowest >= -kTolerances.psd)) {
      throw InvariantViolation("DensityMatrix: eigenvalue " + std::to_string(lowest) + " is negative");
    }
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix pure(const StateVector& s) {
    return DensityMatrix(s.amplitudes() * s.amplitudes().adjoint());
  }

  static DensityMatrix maximallyMixed(std::size_t d) {
    detail::requireDimAtLeastTwo(static_cast<Eigen::Index>(d), "DensityMatrix");
    const auto n = static_cast<Eigen::Index>(d);
    return DensityMatrix(CMatrix::Identity(n, n) / static_cast<double>(d));
  }

  const CMatrix& matrix() const& noexcept { return m_; }
  CMatrix matrix() && noexcept { return std::move(m_); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

 private:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

class UnitaryOperator {
 public:
  static UnitaryOperator fromMatrix(CMatrix m) {
    detail::requireSquare(m, "UnitaryOperator");
    const auto n = m.rows();
    const double defect = (m.adjoint() * m - CMatrix::Identity(n, n)).norm();
    if (!(defect <= kTolerances.unitary)) {
      throw InvariantViolation("UnitaryOperator: ‖U†U − I‖_F = " + std::to_string(defect));
    }
    return UnitaryOperator(std::move(m));
  }

  static UnitaryOperator identity(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return UnitaryOperator(CMatrix::Identity(n, n));
  }

  const CMatrix& matrix() const& noexcept { return m_; }
  CMatrix matrix() && noexcept { return std::move(m_); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

  StateVector apply(const StateVector& s) const {
    detail::requireSameDim(m_.rows(), static_cast<Eigen::Index>(s.dim()), "UnitaryOperator::apply");
    return StateVector::normalize(m_ * s.amplitudes());
  }

 private:
  explicit UnitaryOperator(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

/// Rank-1 orthogonal projector |a⟩⟨a|.
class Projector {
 public:
  static Projector fromMatrix(CMatrix m) {
    detail::requireSquare(m, "Projector");
    if (!(detail::hermitianDefect(m) <= kTolerances.hermitian)) {
      throw InvariantViolation("Projector: not Hermitian");
    }
    if (!(detail::maxAbs(m * m - m) <= kTolerances.idempotent)) {
      throw InvariantViolation("Projector: not idempotent");
    }
    if (!(std::abs(m.trace() - 1.0) <= kTolerances.idempotent)) {
      throw InvariantViolation("Projector: trace is not 1");
    }
    return Projector(std::move(m));
  }

  const CMatrix& matrix() const& noexcept { return m_; }
  CMatrix matrix() && noexcept { return std::move(m_); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

 private:
  friend Projector projectorOf(const StateVector& x);
  explicit Projector(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

class OrthonormalBasis {
 public:
  static OrthonormalBasis fromVectors(std::vector<StateVector> vectors) {
    if (vectors.empty()) throw InvariantViolation("OrthonormalBasis: empty");
    const std::size_t d = vectors.front().dim();
    if (vectors.size() != d) {
      throw InvariantViolation("OrthonormalBasis: need exactly d vectors");
    }
    CMatrix cols(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      detail::requireSameDim(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(vectors[k].dim()),
                             "OrthonormalBasis");
      cols.col(static_cast<Eigen::Index>(k)) = vectors[k].amplitudes();
    }
    check(cols);
    return OrthonormalBasis(std::move(vectors), std::move(cols));
  }

  /// Columns of `m` become the basis vectors.
  static OrthonormalBasis fromColumns(const CMatrix& m) {
    detail::requireSquare(m, "OrthonormalBasis");
    std::vector<StateVector> vs;
    vs.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) vs.push_back(StateVector::normalize(m.col(k)));
    return fromVectors(std::move(vs));
  }

  static OrthonormalBasis computational(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return fromColumns(CMatrix::Identity(n, n));
  }

  const std::vector<StateVector>& vectors() const noexcept { return vectors_; }
  const StateVector& operator[](std::size_t k) const { return vectors_.at(k); }
  std::size_t dim() const noexcept { return vectors_.size(); }
  /// Basis vectors as columns.
  const CMatrix& matrix() const& noexcept { return cols_; }
  CMatrix matrix() && noexcept { return std::move(cols_); }

 private:
  OrthonormalBasis(std::vector<StateVector> v, CMatrix cols)
      : vectors_(std::move(v)), cols_(std::move(cols)) {}

  static void check(const CMatrix& cols) {
    const auto n = cols.cols();
    const double defect = detail::maxAbs(cols.adjoint() * cols - CMatrix::Identity(n, n));
    if (!(defect <= kTolerances.orthonormal)) {
      throw InvariantViolation("OrthonormalBasis: Gram defect " + std::to_string(defect));
    }
  }

  std::vector<StateVector> vectors_;
  CMatrix cols_;
};

struct SpectralDecomposition {
  RVector eigenvalues;  // ascending
  OrthonormalBasis eigenvectors;
  std::vector<std::vector<std::size_t>> degeneracyBlocks;
  double gapTolerance = 0.0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }

  /// Index of the degeneracy block holding eigenvalue `i`.
  std::vector<std::size_t> blockIndex() const {
    std::vector<std::size_t> idx(dim());
    for (std::size_t b = 0; b < degeneracyBlocks.size(); ++b) {
      for (auto i : degeneracyBlocks[b]) idx[i] = b;
    }
    return idx;
  }

  CMatrix reconstruct() const {
    const CMatrix& v = eigenvectors.matrix();
    return v * eigenvalues.cast<Complex>().asDiagonal() * v.adjoint();
  }
};

// ---------------------------------------------------------------------------
// Operations

/// ⟨x|y⟩, conjugate-linear in x.
inline Complex inner(const StateVector& x, const StateVector& y) {
  detail::requireSameDim(static_cast<Eigen::Index>(x.dim()), static_cast<Eigen::Index>(y.dim()), "inner");
  return x.amplitudes().dot(y.amplitudes());
}

inline double overlapSquared(const StateVector& x, const StateVector& y) { return std::norm(inner(x, y)); }

inline Projector projectorOf(const StateVector& x) {
  return Projector(x.amplitudes() * x.amplitudes().adjoint());
}

/// tr(r P) for Hermitian r. Throws if the trace has an imaginary part above
/// tolerance, which only happens for non-Hermitian (corrupted) input.
inline double traceProduct(const CMatrix& r, const Projector& p) {
  detail::requireSquare(r, "traceProduct");
  detail::requireSameDim(r.rows(), p.matrix().rows(), "traceProduct");
  const Complex t = r.cwiseProduct(p.matrix().transpose()).sum();
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  if (!(std::abs(t.imag()) <= kTolerances.imaginaryResidue * scale)) {
    throw InvariantViolation("traceProduct: imaginary residue " + std::to_string(t.imag()));
  }
  return t.real();
}

/// [a, b] = ab − ba.
inline CMatrix commutator(const CMatrix& a, const CMatrix& b) {
  detail::requireSquare(a, "commutator");
  detail::requireSquare(b, "commutator");
  detail::requireSameDim(a.rows(), b.rows(), "commutator");
  return a * b - b * a;
}

/// Default degeneracy gap for a spectrum: relativeGap × its scale.
inline double defaultGapTolerance(const RVector& eigenvalues) {
  if (eigenvalues.size() == 0) return 0.0;
  const double range = eigenvalues.maxCoeff() - eigenvalues.minCoeff();
  const double radius = eigenvalues.cwiseAbs().maxCoeff();
  return kTolerances.relativeGap * std::max(range, radius);
}

/// Eigendecomposition of a Hermitian operator.
///
/// Eigenvalues come out ascending. Each eigenvector's phase is fixed so its
/// first component of magnitude > 1e-8 is real and positive. Consecutive
/// eigenvalues closer than `gapTol` (negative: use defaultGapTolerance)
/// share a degeneracy block.
inline SpectralDecomposition spectral(const HermitianOperator& h, double gapTol = -1.0) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix());
  if (es.info() != Eigen::Success) throw NumericalFailure("spectral: eigen-solver did not converge");
  RVector values = es.eigenvalues();
  CMatrix vecs = es.eigenvectors();
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
      const Complex c = vecs(i, k);
      if (std::abs(c) > 1e-8) {
        vecs.col(k) *= std::conj(c) / std::abs(c);
        vecs(i, k) = std::abs(c);
        break;
      }
    }
  }
  if (gapTol < 0.0) gapTol = defaultGapTolerance(values);

  std::vector<std::vector<std::size_t>> blocks;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i == 0 || values(i) - values(i - 1) > gapTol) blocks.emplace_back();
    blocks.back().push_back(static_cast<std::size_t>(i));
  }

  SpectralDecomposition out{std::move(values), OrthonormalBasis::fromColumns(vecs), std::move(blocks), gapTol};
  const double residual = (out.reconstruct() - h.matrix()).norm();
  if (!(residual <= kTolerances.reconstruction * std::max(1.0, h.matrix().norm()))) {
    throw NumericalFailure("spectral: reconstruction residual " + std::to_string(residual));
  }
  return out;
}

inline bool isAntiHermitian(const CMatrix& k, double tol) { return detail::maxAbs(k + k.adjoint()) <= tol; }

namespace pauli {

inline CMatrix identity() { return CMatrix::Identity(2, 2); }

inline CMatrix x() {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline CMatrix y() {
  CMatrix m(2, 2);
  m << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  return m;
}

inline CMatrix z() {
  CMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

}  // namespace pauli

}  // namespace tsv
