#pragma once

// Shared helpers for the test suites: seeded generators and statistical
// oracles that are independent of the library code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "tsv/qcore.hpp"
#include "tsv/random.hpp"
#include "tsv/rng.hpp"

namespace tsv::testing {

inline SampleRng gen(std::uint64_t seed, std::uint64_t i = 0) { return RngStream(seed, 99).sample(i); }

inline StateVector ket(std::initializer_list<Complex> amps) {
  CVector v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (auto a : amps) v(i++) = a;
  return StateVector::normalize(v);
}

inline StateVector plus() { return ket({1.0, 1.0}); }
inline StateVector minus() { return ket({1.0, -1.0}); }

inline double maxDiff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Equality of states up to a global phase.
inline double phaseDistance(const StateVector& a, const StateVector& b) {
  return 1.0 - std::abs(a.amplitudes().dot(b.amplitudes()));
}

/// Kolmogorov–Smirnov statistic sup_x |F_n(x) − F(x)|.
inline double ksStatistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ksCritical1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

}  // namespace tsv::testing
