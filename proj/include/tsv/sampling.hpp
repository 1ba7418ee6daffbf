#pragma once

// Backward-state distributions and the seeded Monte Carlo engine that
// estimates outcome frequencies by averaging the deterministic rule over
// sampled backward states.
//
// Sample i always draws from RngStream(seed, kBackwardStream).sample(i).
// Work is split into contiguous chunks, one per worker, and chunk tallies
// are summed as integers, so results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "tsv/assignment.hpp"
#include "tsv/random.hpp"
#include "tsv/rng.hpp"

namespace tsv {

/// |⟨n|target⟩|² uniform on [0,1]; the rest of n is Haar in the complement.
struct UniformOverlap {
  StateVector target;
};

struct HaarPure {};

struct Fixed {
  StateVector state;
};

using BackwardDistribution = std::variant<UniformOverlap, HaarPure, Fixed>;

inline std::string distributionName(const BackwardDistribution& dist) {
  struct Visitor {
    std::string operator()(const UniformOverlap&) const { return "uniform-overlap"; }
    std::string operator()(const HaarPure&) const { return "haar"; }
    std::string operator()(const Fixed&) const { return "fixed"; }
  };
  return std::visit(Visitor{}, dist);
}

inline constexpr std::uint64_t kBackwardStream = 0;

struct BornEstimate {
  double frequency = 0.0;
  double stdErr = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  std::optional<double> noAssignRate;  // basis experiments only

  static BornEstimate fromCounts(std::uint64_t hits, std::uint64_t samples) {
    BornEstimate e;
    e.hits = hits;
    e.samples = samples;
    if (samples > 0) {
      e.frequency = static_cast<double>(hits) / static_cast<double>(samples);
      e.stdErr = std::sqrt(e.frequency * (1.0 - e.frequency) / static_cast<double>(samples));
    }
    return e;
  }
};

struct BasisEstimate {
  std::vector<BornEstimate> outcomes;
  std::vector<std::uint64_t> counts;
  std::uint64_t noAssignCount = 0;
  std::uint64_t samples = 0;
  double noAssignRate = 0.0;

  /// Frequency of outcome k among samples that produced some outcome.
  BornEstimate conditional(std::size_t k) const {
    return BornEstimate::fromCounts(counts.at(k), samples - noAssignCount);
  }
};

/// Haar-random n with |⟨n|a⟩|² = u, u ~ U(0,1): the component along a
/// carries an independent uniform phase and the remainder points in a
/// Haar-random direction of a's orthogonal complement.
inline StateVector backwardUniformOverlap(const StateVector& a, SampleRng& gen) {
  const double u = gen.uniform();
  const double phase = 2.0 * std::numbers::pi * gen.uniform();
  const CVector& av = a.amplitudes();
  CVector perp(av.size());
  for (;;) {
    for (Eigen::Index i = 0; i < perp.size(); ++i) perp(i) = gen.complexNormal();
    perp -= av * av.dot(perp);
    const double n = perp.norm();
    if (n > 1e-8) {
      perp /= n;
      break;
    }
  }
  CVector n = av * std::polar(std::sqrt(u), phase) + perp * std::sqrt(1.0 - u);
  return StateVector::normalize(std::move(n));
}

inline StateVector drawBackward(const BackwardDistribution& dist, std::size_t d, SampleRng& gen) {
  struct Visitor {
    std::size_t d;
    SampleRng& gen;
    StateVector operator()(const UniformOverlap& u) const { return backwardUniformOverlap(u.target, gen); }
    StateVector operator()(const HaarPure&) const { return haarState(d, gen); }
    StateVector operator()(const Fixed& f) const { return f.state; }
  };
  return std::visit(Visitor{d, gen}, dist);
}

namespace detail {

inline void checkDistributionDim(const BackwardDistribution& dist, std::size_t d, const char* what) {
  if (const auto* u = std::get_if<UniformOverlap>(&dist)) {
    requireSameDim(static_cast<Eigen::Index>(u->target.dim()), static_cast<Eigen::Index>(d), what);
  } else if (const auto* f = std::get_if<Fixed>(&dist)) {
    requireSameDim(static_cast<Eigen::Index>(f->state.dim()), static_cast<Eigen::Index>(d), what);
  }
}

}  // namespace detail

/// Counts, for i in [0, n), how often `classify(i)` returns each bin in
/// [0, bins); a std::nullopt return is counted in the extra last slot.
/// The index range is cut into `workers` contiguous chunks; the first
/// exception (in chunk order) is rethrown after all workers finish.
template <class Classify>
std::vector<std::uint64_t> shardedTally(std::uint64_t n, unsigned workers, std::size_t bins, Classify classify) {
  workers = std::max(1u, workers);
  if (static_cast<std::uint64_t>(workers) > n) workers = static_cast<unsigned>(std::max<std::uint64_t>(n, 1));
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(bins + 1, 0));
  std::vector<std::exception_ptr> errors(workers);

  auto run = [&](unsigned w) {
    const std::uint64_t begin = n * w / workers;
    const std::uint64_t end = n * (w + 1) / workers;
    try {
      for (std::uint64_t i = begin; i < end; ++i) {
        const std::optional<std::size_t> bin = classify(i);
        ++partial[w][bin ? *bin : bins];
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run, w);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::uint64_t> total(bins + 1, 0);
  for (const auto& p : partial)
    for (std::size_t b = 0; b <= bins; ++b) total[b] += p[b];
  return total;
}

/// Fraction of sampled backward states n for which (forward, n) assigns
/// the outcome `a`.
inline BornEstimate bornMc(const StateVector& forward, const StateVector& a, const BackwardDistribution& dist,
                           std::uint64_t samples, std::uint64_t seed, double tieTol = 0.0, unsigned workers = 1) {
  detail::requireSameDim(static_cast<Eigen::Index>(forward.dim()), static_cast<Eigen::Index>(a.dim()), "bornMc");
  detail::checkDistributionDim(dist, forward.dim(), "bornMc");
  if (samples < 1) throw InvalidArgument("bornMc: need at least one sample");
  const RngStream stream(seed, kBackwardStream);
  const std::size_t d = forward.dim();
  const auto tally = shardedTally(samples, workers, 1, [&](std::uint64_t i) -> std::optional<std::size_t> {
    SampleRng gen = stream.sample(i);
    const TwoStatePairPure pair(forward, drawBackward(dist, d, gen));
    if (satisfiesPure(pair, a, tieTol)) return 0;
    return std::nullopt;
  });
  return BornEstimate::fromCounts(tally[0], samples);
}

/// Per-outcome frequencies over a full measurement basis plus the rate of
/// samples for which no outcome is assigned.
inline BasisEstimate basisMc(const StateVector& forward, const OrthonormalBasis& basis,
                             const BackwardDistribution& dist, std::uint64_t samples, std::uint64_t seed,
                             double tieTol = 0.0, unsigned workers = 1) {
  detail::requireSameDim(static_cast<Eigen::Index>(forward.dim()), static_cast<Eigen::Index>(basis.dim()),
                         "basisMc");
  detail::checkDistributionDim(dist, forward.dim(), "basisMc");
  if (samples < 1) throw InvalidArgument("basisMc: need at least one sample");
  const RngStream stream(seed, kBackwardStream);
  const std::size_t d = forward.dim();
  const auto tally = shardedTally(samples, workers, d, [&](std::uint64_t i) -> std::optional<std::size_t> {
    SampleRng gen = stream.sample(i);
    const TwoStatePairPure pair(forward, drawBackward(dist, d, gen));
    const AssignmentResult r = assignOverBasis(pair, basis, tieTol);
    if (const auto* hit = std::get_if<Assigned>(&r)) return hit->index;
    return std::nullopt;
  });

  BasisEstimate out;
  out.samples = samples;
  out.counts.assign(tally.begin(), tally.begin() + static_cast<std::ptrdiff_t>(d));
  out.noAssignCount = tally[d];
  out.noAssignRate = static_cast<double>(out.noAssignCount) / static_cast<double>(samples);
  for (std::size_t k = 0; k < d; ++k) {
    BornEstimate e = BornEstimate::fromCounts(out.counts[k], samples);
    e.noAssignRate = out.noAssignRate;
    out.outcomes.push_back(e);
  }
  return out;
}

/// Analytic probability that the rule fires for an outcome with Born weight
/// p: p under UniformOverlap, p^(d−1) under HaarPure (the Beta(1, d−1) tail
/// of a Haar overlap).
inline double bornOracle(const BackwardDistribution& dist, double p, std::size_t d) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("bornOracle: p must lie in [0, 1]");
  if (d < 2) throw InvalidArgument("bornOracle: dimension must be >= 2");
  if (std::holds_alternative<UniformOverlap>(dist)) return p;
  if (std::holds_alternative<HaarPure>(dist)) return std::pow(p, static_cast<double>(d - 1));
  throw NotApplicable("bornOracle: no analytic oracle for a fixed backward state");
}

}  // namespace tsv
