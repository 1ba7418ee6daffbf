#pragma once

// Qubit Bloch-sphere geometry. Convention: |0⟩ ↔ +z, standard Pauli
// matrices, so |⟨m|a⟩|² = (1 + m·a)/2.

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "tsv/qcore.hpp"

namespace tsv {

class BlochVector {
 public:
  static BlochVector unit(const Eigen::Vector3d& v) {
    if (!(std::abs(v.norm() - 1.0) <= kTolerances.norm)) {
      throw InvariantViolation("BlochVector: norm " + std::to_string(v.norm()) + " is not 1");
    }
    return BlochVector(v);
  }
  static BlochVector unit(double x, double y, double z) { return unit(Eigen::Vector3d(x, y, z)); }

  static BlochVector normalize(const Eigen::Vector3d& v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw InvariantViolation("BlochVector: cannot normalize zero vector");
    return unit(v / n);
  }

  const Eigen::Vector3d& vec() const noexcept { return v_; }
  double x() const noexcept { return v_.x(); }
  double y() const noexcept { return v_.y(); }
  double z() const noexcept { return v_.z(); }
  double dot(const BlochVector& o) const noexcept { return v_.dot(o.v_); }

  BlochVector operator-() const { return BlochVector(-v_); }

 private:
  explicit BlochVector(const Eigen::Vector3d& v) : v_(v) {}
  Eigen::Vector3d v_;
};

struct PbrGeometricInstance {
  BlochVector m, mPrime;  // first pair
  BlochVector x, xPrime;  // second pair
};

/// Pauli expectations (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
inline BlochVector blochFromState(const StateVector& s) {
  if (s.dim() != 2) throw DimensionMismatch("blochFromState: state must be a qubit");
  const Complex a0 = s[0];
  const Complex a1 = s[1];
  const Complex c = std::conj(a0) * a1;
  return BlochVector::normalize(
      Eigen::Vector3d(2.0 * c.real(), 2.0 * c.imag(), std::norm(a0) - std::norm(a1)));
}

/// Inverse of blochFromState with a real non-negative |0⟩ amplitude.
inline StateVector stateFromBloch(const BlochVector& v) {
  const double c = std::sqrt(std::max(0.0, (1.0 + v.z()) / 2.0));
  const double s = std::sqrt(std::max(0.0, (1.0 - v.z()) / 2.0));
  const double rho = std::hypot(v.x(), v.y());
  const Complex phase = rho > 0.0 ? Complex(v.x() / rho, v.y() / rho) : Complex(1.0, 0.0);
  CVector amps(2);
  amps << c, phase * s;
  return StateVector::normalize(std::move(amps));
}

/// m·a + n·a > 0: the outcome rule written on the Bloch sphere.
inline bool bellCondition(const BlochVector& m, const BlochVector& n, const BlochVector& a) {
  return m.dot(a) + n.dot(a) > 0.0;
}

/// Unit vector a in span{u, v} (u = m + m′, v = x + x′) with a·u > 0 and
/// a·v < 0. Of all such vectors it returns the one maximizing
/// min(a·û, −a·v̂), i.e. the normalized bisector of û and −v̂.
inline BlochVector pbrDistinguishingVector(const PbrGeometricInstance& inst) {
  const Eigen::Vector3d u = inst.m.vec() + inst.mPrime.vec();
  const Eigen::Vector3d v = inst.x.vec() + inst.xPrime.vec();
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < 1e-12 || nv < 1e-12) {
    throw DegenerateInstance("pbrDistinguishingVector: a pair sums to the zero vector");
  }
  const Eigen::Vector3d uh = u / nu;
  const Eigen::Vector3d vh = v / nv;
  const double angle = std::atan2(uh.cross(vh).norm(), uh.dot(vh));
  if (angle < kTolerances.parallelAngle) {
    throw DegenerateInstance("pbrDistinguishingVector: pair sums are parallel");
  }
  if (angle > std::numbers::pi - kTolerances.parallelAngle) return BlochVector::normalize(uh);
  return BlochVector::normalize(uh - vh);
}

}  // namespace tsv
