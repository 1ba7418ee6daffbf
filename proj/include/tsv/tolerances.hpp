#pragma once

#include <limits>

namespace tsv {

// Every numerical threshold the library uses lives here.
struct Tolerances {
  double norm = 1e-12;          // |‖ψ‖ − 1|
  double hermitian = 1e-12;     // max |A − A†| element
  double trace = 1e-12;         // |tr ρ − 1|
  double psd = 1e-10;           // smallest admissible eigenvalue is −psd
  double unitary = 1e-10;       // ‖U†U − I‖_F
  double idempotent = 1e-10;    // max |Π² − Π| element
  double orthonormal = 1e-10;   // max |⟨v_i|v_j⟩ − δ_ij|
  double reconstruction = 1e-10;
  double imaginaryResidue = 1e-10;
  double relativeGap = 1e-9;    // degeneracy gap, relative to the spectral scale
  double postSelection = 1e-12; // |⟨Φ|Ψ⟩| below this makes the weak value singular
  double commutatorFeasibility = 1e-10;
  double parallelAngle = 1e-9;  // radians
  // Absorbs rounding in overlap sums so that exact boundary cases
  // (p + q = 1 in exact arithmetic) land on the NoOutcome side.
  double ruleGuard = 64 * std::numeric_limits<double>::epsilon();
};

inline constexpr Tolerances kTolerances{};

}  // namespace tsv
