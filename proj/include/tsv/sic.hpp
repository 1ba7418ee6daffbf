#pragma once

// SIC-POVMs: Weyl–Heisenberg orbits of a fiducial state, validation,
// expansion of Hermitian operators in the SIC frame, the outcome-rule
// threshold on expansion coefficients, and a numerical fiducial search
// by frame-potential minimization.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <ceres/ceres.h>

#include "tsv/assignment.hpp"
#include "tsv/bloch.hpp"
#include "tsv/qcore.hpp"
#include "tsv/random.hpp"
#include "tsv/rng.hpp"

namespace tsv {

struct SicPovm {
  std::size_t dim = 0;
  std::vector<Projector> projectors;
  std::optional<StateVector> fiducial;
};

struct SicCoefficients {
  std::vector<double> lambdas;
  double traceOfRho = 0.0;
};

struct SicValidation {
  double maxPairDeviation = 0.0;
  double identityDeviation = 0.0;
  bool pass = false;
};

struct FiducialSearchReport {
  StateVector fiducial;
  double framePotential;
  double lowerBound;
  std::size_t iterations;  // of the best restart
  std::size_t restarts;
  std::size_t bestRestart;
  bool converged;
};

struct Separator {
  std::size_t index;
  friend bool operator==(Separator, Separator) = default;
};
struct NoSeparator {
  friend bool operator==(NoSeparator, NoSeparator) = default;
};
using SeparatorResult = std::variant<NoSeparator, Separator>;

/// Welch bound on Σ_{k,l} |⟨ψ_k|ψ_l⟩|⁴ for d² unit vectors in C^d.
inline double welchBound(std::size_t d) {
  const double dd = static_cast<double>(d);
  return 2.0 * dd * dd * dd / (dd + 1.0);
}

/// Cyclic shift X|j⟩ = |j+1 mod d⟩.
inline CMatrix shiftOperator(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  CMatrix x = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) x((j + 1) % n, j) = 1.0;
  return x;
}

/// Clock Z = diag(1, ω, …, ω^{d−1}), ω = e^{2πi/d}.
inline CMatrix clockOperator(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  CMatrix z = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    z(j, j) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(d));
  }
  return z;
}

/// D_{jk} = X^j Z^k, listed in order index = j·d + k.
inline std::vector<UnitaryOperator> whDisplacements(std::size_t d) {
  if (d < 2) throw InvalidArgument("whDisplacements: dimension must be >= 2");
  const CMatrix x = shiftOperator(d);
  const CMatrix z = clockOperator(d);
  const auto n = static_cast<Eigen::Index>(d);
  std::vector<UnitaryOperator> out;
  out.reserve(d * d);
  CMatrix xj = CMatrix::Identity(n, n);
  for (std::size_t j = 0; j < d; ++j) {
    CMatrix d_jk = xj;
    for (std::size_t k = 0; k < d; ++k) {
      out.push_back(UnitaryOperator::fromMatrix(d_jk));
      d_jk = d_jk * z;
    }
    xj = x * xj;
  }
  return out;
}

inline std::vector<StateVector> whOrbit(const StateVector& f) {
  std::vector<StateVector> out;
  for (const auto& d : whDisplacements(f.dim())) out.push_back(d.apply(f));
  return out;
}

/// Orbit {D|f⟩⟨f|D†}. Not validated; run validateSic on the result.
inline SicPovm sicFromFiducial(const StateVector& f) {
  SicPovm s;
  s.dim = f.dim();
  for (const auto& psi : whOrbit(f)) s.projectors.push_back(projectorOf(psi));
  s.fiducial = f;
  return s;
}

namespace fiducials {

/// Qubit fiducial with Bloch vector (1,1,1)/√3; its orbit is a regular tetrahedron.
inline StateVector qubitTetrahedron() {
  const double c = 1.0 / std::sqrt(3.0);
  return stateFromBloch(BlochVector::normalize(Eigen::Vector3d(c, c, c)));
}

/// Hesse qutrit fiducial (0, 1, −1)/√2.
inline StateVector qutritHesse() {
  CVector v(3);
  v << 0.0, 1.0, -1.0;
  return StateVector::normalize(std::move(v));
}

inline std::optional<StateVector> builtin(std::size_t d) {
  if (d == 2) return qubitTetrahedron();
  if (d == 3) return qutritHesse();
  return std::nullopt;
}

}  // namespace fiducials

inline SicValidation validateSic(const SicPovm& s, double tol) {
  SicValidation r;
  const std::size_t d = s.dim;
  const auto n = static_cast<Eigen::Index>(d);
  const double target = 1.0 / (static_cast<double>(d) + 1.0);
  CMatrix sum = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < s.projectors.size(); ++k) {
    const CMatrix& pk = s.projectors[k].matrix();
    if (pk.rows() != n) throw DimensionMismatch("validateSic: projector dimension differs from SIC dimension");
    sum += pk;
    for (std::size_t l = k + 1; l < s.projectors.size(); ++l) {
      const double t = pk.cwiseProduct(s.projectors[l].matrix().transpose()).sum().real();
      r.maxPairDeviation = std::max(r.maxPairDeviation, std::abs(t - target));
    }
  }
  r.identityDeviation = (sum - static_cast<double>(d) * CMatrix::Identity(n, n)).norm();
  r.pass = s.projectors.size() == d * d && r.maxPairDeviation <= tol && r.identityDeviation <= tol;
  return r;
}

namespace detail {

inline constexpr double kSicUsableTolerance = 1e-8;

inline void requireValidSic(const SicPovm& s, const char* what) {
  const SicValidation v = validateSic(s, kSicUsableTolerance);
  if (!v.pass) {
    throw InvalidSic(std::string(what) + ": SIC fails validation (pair deviation " +
                     std::to_string(v.maxPairDeviation) + ", identity deviation " +
                     std::to_string(v.identityDeviation) + ")");
  }
}

}  // namespace detail

/// λ_k = [(d+1) tr(r Π_k) − tr r] / d, so that r = Σ_k λ_k Π_k.
inline SicCoefficients sicExpand(const CMatrix& r, const SicPovm& s) {
  detail::requireSquare(r, "sicExpand");
  detail::requireSameDim(r.rows(), static_cast<Eigen::Index>(s.dim), "sicExpand");
  detail::requireValidSic(s, "sicExpand");
  const double d = static_cast<double>(s.dim);
  SicCoefficients c;
  const Complex tr = r.trace();
  if (std::abs(tr.imag()) > kTolerances.imaginaryResidue * std::max(1.0, std::abs(tr))) {
    throw InvariantViolation("sicExpand: operator trace is not real");
  }
  c.traceOfRho = tr.real();
  c.lambdas.reserve(s.projectors.size());
  for (const auto& p : s.projectors) c.lambdas.push_back(((d + 1.0) * traceProduct(r, p) - c.traceOfRho) / d);
  return c;
}

inline CMatrix sicReconstruct(const SicCoefficients& c, const SicPovm& s) {
  if (c.lambdas.size() != s.projectors.size()) throw DimensionMismatch("sicReconstruct: coefficient count");
  const auto n = static_cast<Eigen::Index>(s.dim);
  CMatrix out = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < c.lambdas.size(); ++k) out += c.lambdas[k] * s.projectors[k].matrix();
  return out;
}

/// Outcome rule for the SIC element Π_k applied to ρ↑ + ρ↓, written on its
/// expansion coefficient: λ_k > 1 − 1/d. Requires tr(ρ↑ + ρ↓) = 2.
inline bool sicRuleCheck(const SicCoefficients& c, std::size_t k, std::size_t d) {
  if (!(std::abs(c.traceOfRho - 2.0) <= 1e-8)) {
    throw InvalidArgument("sicRuleCheck: coefficients must describe an operator of trace 2, got " +
                          std::to_string(c.traceOfRho));
  }
  if (k >= c.lambdas.size()) throw InvalidArgument("sicRuleCheck: index out of range");
  const double dd = static_cast<double>(d);
  // Same rounding guard as the trace form, mapped through λ = ((d+1)t − 2)/d.
  const double guard = kTolerances.ruleGuard * (dd + 1.0) / dd;
  return c.lambdas[k] > 1.0 - 1.0 / dd + guard;
}

/// First SIC index (in displacement order) whose rule outcome differs between
/// the two pairs, or NoSeparator.
inline SeparatorResult sicDistinguish(const TwoStatePairMixed& pair0, const TwoStatePairMixed& pair1,
                                      const SicPovm& s) {
  detail::requireSameDim(static_cast<Eigen::Index>(pair0.dim()), static_cast<Eigen::Index>(pair1.dim()),
                         "sicDistinguish");
  const SicCoefficients c0 = sicExpand(pair0.summed(), s);
  const SicCoefficients c1 = sicExpand(pair1.summed(), s);
  for (std::size_t k = 0; k < s.projectors.size(); ++k) {
    if (sicRuleCheck(c0, k, s.dim) != sicRuleCheck(c1, k, s.dim)) return Separator{k};
  }
  return NoSeparator{};
}

/// Σ_{k,l} |⟨ψ_k|ψ_l⟩|⁴, diagonal included.
inline double framePotential(const std::vector<StateVector>& states) {
  if (states.empty()) return 0.0;
  const std::size_t d = states.front().dim();
  CMatrix psi(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    detail::requireSameDim(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(states[k].dim()),
                           "framePotential");
    psi.col(static_cast<Eigen::Index>(k)) = states[k].amplitudes();
  }
  const CMatrix gram = psi.adjoint() * psi;
  return gram.cwiseAbs2().cwiseAbs2().sum();
}

namespace detail {

// Frame potential of the Weyl–Heisenberg orbit of z/‖z‖ as a function of
// the 2d real coordinates of z. For an orbit, ⟨D_k f|D_l f⟩ is (up to
// phase) ⟨f|D_m f⟩ for some m, so the potential is d² Σ_m |⟨f|D_m f⟩|⁴.
class OrbitPotential final : public ceres::FirstOrderFunction {
 public:
  explicit OrbitPotential(std::size_t d) : d_(d) {
    for (const auto& u : whDisplacements(d)) ops_.push_back(u.matrix());
  }

  int NumParameters() const override { return static_cast<int>(2 * d_); }

  bool Evaluate(const double* params, double* cost, double* gradient) const override {
    const auto n = static_cast<Eigen::Index>(d_);
    CVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = Complex(params[2 * i], params[2 * i + 1]);
    const double nz2 = z.squaredNorm();
    if (!(nz2 > 0.0)) return false;

    // N(z) = Σ_m |z† D_m z|⁴ is homogeneous of degree 8, g = N / ‖z‖⁸.
    double num = 0.0;
    CVector dnum = CVector::Zero(n);  // ∂N/∂z̄
    for (const CMatrix& op : ops_) {
      const CVector dz = op * z;
      const Complex c = z.dot(dz);
      const double c2 = std::norm(c);
      num += c2 * c2;
      if (gradient != nullptr) dnum += 2.0 * c2 * (std::conj(c) * dz + c * (op.adjoint() * z));
    }
    const double scale = static_cast<double>(d_ * d_);
    const double n8 = nz2 * nz2 * nz2 * nz2;
    *cost = scale * num / n8;
    if (gradient != nullptr) {
      // ∂g/∂z̄ = ∂N/∂z̄ / ‖z‖⁸ − 4 N z / ‖z‖¹⁰; real gradient is 2 Re/Im of it.
      const CVector dg = (dnum / n8 - (4.0 * num / (n8 * nz2)) * z) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        gradient[2 * i] = 2.0 * dg(i).real();
        gradient[2 * i + 1] = 2.0 * dg(i).imag();
      }
    }
    return true;
  }

 private:
  std::size_t d_;
  std::vector<CMatrix> ops_;
};

}  // namespace detail

/// Minimizes the frame potential of the Weyl–Heisenberg orbit over candidate
/// fiducials with L-BFGS, from `restarts` Haar-random starting points.
/// Restart r starts from RngStream(seed, r). The best restart wins (ties go
/// to the lower index). One progress line per restart goes to `log`.
inline FiducialSearchReport searchFiducial(std::size_t d, std::size_t restarts, std::size_t maxIters,
                                           std::uint64_t seed, std::ostream* log = &std::cerr) {
  if (d < 2 || d > 8) throw InvalidArgument("searchFiducial: dimension must be in [2, 8]");
  if (restarts < 1) throw InvalidArgument("searchFiducial: need at least one restart");
  const double bound = welchBound(d);

  std::optional<FiducialSearchReport> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    SampleRng gen = RngStream(seed, r).sample(0);
    const StateVector start = haarState(d, gen);
    std::vector<double> x(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      x[2 * i] = start[i].real();
      x[2 * i + 1] = start[i].imag();
    }

    ceres::GradientProblem problem(new detail::OrbitPotential(d));
    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.max_num_iterations = static_cast<int>(maxIters);
    options.function_tolerance = 1e-16;
    options.gradient_tolerance = 1e-14;
    options.parameter_tolerance = 1e-16;
    options.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);

    CVector z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) z(static_cast<Eigen::Index>(i)) = Complex(x[2 * i], x[2 * i + 1]);
    StateVector f = StateVector::normalize(std::move(z));
    const double potential = framePotential(whOrbit(f));
    if (log != nullptr) {
      *log << "searchFiducial d=" << d << " restart=" << r << " potential=" << std::setprecision(17)
           << potential << '\n';
    }
    if (!best || potential < best->framePotential) {
      best = FiducialSearchReport{std::move(f), potential, bound, summary.iterations.size(), 0, r, false};
    }
  }
  best->restarts = restarts;
  best->converged = best->framePotential <= bound + 1e-6;
  return *best;
}

}  // namespace tsv
