#pragma once

// Deterministic outcome assignment for a forward/backward state pair.
//
// Outcome |a⟩ occurs iff |⟨Ψ↑|a⟩|² + |⟨Ψ↓|a⟩|² > 1 (pure pair), or
// tr[(ρ↑ + ρ↓) Π_a] > 1 (mixed pair). The equality case is NoOutcome.

#include <cstddef>
#include <string>
#include <utility>
#include <variant>

#include "tsv/qcore.hpp"

namespace tsv {

class TwoStatePairPure {
 public:
  TwoStatePairPure(StateVector forward, StateVector backward)
      : forward_(std::move(forward)), backward_(std::move(backward)) {
    detail::requireSameDim(static_cast<Eigen::Index>(forward_.dim()),
                           static_cast<Eigen::Index>(backward_.dim()), "TwoStatePairPure");
  }

  const StateVector& forward() const noexcept { return forward_; }
  const StateVector& backward() const noexcept { return backward_; }
  std::size_t dim() const noexcept { return forward_.dim(); }

 private:
  StateVector forward_;
  StateVector backward_;
};

class TwoStatePairMixed {
 public:
  TwoStatePairMixed(DensityMatrix forward, DensityMatrix backward)
      : forward_(std::move(forward)), backward_(std::move(backward)) {
    detail::requireSameDim(static_cast<Eigen::Index>(forward_.dim()),
                           static_cast<Eigen::Index>(backward_.dim()), "TwoStatePairMixed");
  }

  static TwoStatePairMixed fromPure(const TwoStatePairPure& p) {
    return {DensityMatrix::pure(p.forward()), DensityMatrix::pure(p.backward())};
  }

  const DensityMatrix& forward() const noexcept { return forward_; }
  const DensityMatrix& backward() const noexcept { return backward_; }
  std::size_t dim() const noexcept { return forward_.dim(); }

  /// ρ↑ + ρ↓, the operator that decides outcomes.
  CMatrix summed() const { return forward_.matrix() + backward_.matrix(); }

 private:
  DensityMatrix forward_;
  DensityMatrix backward_;
};

struct NoOutcome {
  friend bool operator==(NoOutcome, NoOutcome) = default;
};

struct Assigned {
  std::size_t index;
  friend bool operator==(Assigned, Assigned) = default;
};

using AssignmentResult = std::variant<NoOutcome, Assigned>;

inline bool isAssigned(const AssignmentResult& r) { return std::holds_alternative<Assigned>(r); }

struct WeakValueResult {
  Complex value;
  double eventProbability;
};

inline bool satisfiesPure(const TwoStatePairPure& pair, const StateVector& a, double tieTol = 0.0) {
  const double p = overlapSquared(pair.forward(), a);
  const double q = overlapSquared(pair.backward(), a);
  return p + q > 1.0 + tieTol + kTolerances.ruleGuard;
}

inline bool satisfiesMixed(const TwoStatePairMixed& pair, const Projector& proj, double tieTol = 0.0) {
  detail::requireSameDim(static_cast<Eigen::Index>(pair.dim()), static_cast<Eigen::Index>(proj.dim()),
                         "satisfiesMixed");
  return traceProduct(pair.summed(), proj) > 1.0 + tieTol + kTolerances.ruleGuard;
}

namespace detail {

template <class Predicate>
AssignmentResult assignWith(std::size_t d, Predicate&& satisfied) {
  // Every outcome is evaluated, so exclusivity is checked on every call.
  std::size_t hits = 0;
  std::size_t first = 0;
  for (std::size_t k = 0; k < d; ++k) {
    if (satisfied(k)) {
      if (hits == 0) first = k;
      ++hits;
    }
  }
  if (hits > 1) {
    throw MultipleOutcomes("assignOverBasis: " + std::to_string(hits) +
                           " basis elements satisfy the outcome rule");
  }
  if (hits == 0) return NoOutcome{};
  return Assigned{first};
}

}  // namespace detail

inline AssignmentResult assignOverBasis(const TwoStatePairPure& pair, const OrthonormalBasis& basis,
                                        double tieTol = 0.0) {
  detail::requireSameDim(static_cast<Eigen::Index>(pair.dim()), static_cast<Eigen::Index>(basis.dim()),
                         "assignOverBasis");
  return detail::assignWith(basis.dim(), [&](std::size_t k) { return satisfiesPure(pair, basis[k], tieTol); });
}

inline AssignmentResult assignOverBasis(const TwoStatePairMixed& pair, const OrthonormalBasis& basis,
                                        double tieTol = 0.0) {
  detail::requireSameDim(static_cast<Eigen::Index>(pair.dim()), static_cast<Eigen::Index>(basis.dim()),
                         "assignOverBasis");
  return detail::assignWith(basis.dim(), [&](std::size_t k) {
    return satisfiesMixed(pair, projectorOf(basis[k]), tieTol);
  });
}

/// Strong measurement: both components collapse onto the observed state.
template <class Pair>
TwoStatePairPure collapse(const Pair& /*pair*/, const StateVector& a) {
  return {a, a};
}

inline TwoStatePairPure timeReverse(const TwoStatePairPure& p) { return {p.backward(), p.forward()}; }
inline TwoStatePairMixed timeReverse(const TwoStatePairMixed& p) { return {p.backward(), p.forward()}; }

/// ⟨Φ|A|Ψ↑⟩ / ⟨Φ|Ψ↑⟩ together with the probability |⟨Ψ↑|Φ⟩|² of the
/// post-selected event.
inline WeakValueResult weakValue(const HermitianOperator& a, const StateVector& forward,
                                 const StateVector& final) {
  detail::requireSameDim(static_cast<Eigen::Index>(a.dim()), static_cast<Eigen::Index>(forward.dim()),
                         "weakValue");
  const Complex amp = inner(final, forward);
  if (std::abs(amp) < kTolerances.postSelection) {
    throw OrthogonalPostSelection("weakValue: post-selected state is orthogonal to the forward state");
  }
  const Complex num = final.amplitudes().dot(a.matrix() * forward.amplitudes());
  return {num / amp, std::norm(amp)};
}

}  // namespace tsv
