#pragma once

// Experiment harness: declarative configuration, deterministic dispatch to
// the library, and CSV / JSON emission of result records.
//
// Every record starts with the schema version and an echo of the effective
// configuration (the worker count is deliberately not echoed: it must not
// change payloads). The last column is wall_time_s, which byte-comparison
// mode leaves out.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsv/assignment.hpp"
#include "tsv/bloch.hpp"
#include "tsv/dynamics.hpp"
#include "tsv/fixture_io.hpp"
#include "tsv/qcore.hpp"
#include "tsv/random.hpp"
#include "tsv/sampling.hpp"
#include "tsv/sic.hpp"

namespace tsv::exp {

using nlohmann::json;
using ResultRecord = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Experiment {
  BornMc,
  BasisMc,
  ExclusivityScan,
  SicValidate,
  SicSearch,
  SicDistinguish,
  StationarySolve,
  PbrGeometric,
  WeakValue,
};

inline constexpr std::array<std::pair<Experiment, std::string_view>, 9> kExperimentNames{{
    {Experiment::BornMc, "born-mc"},
    {Experiment::BasisMc, "basis-mc"},
    {Experiment::ExclusivityScan, "exclusivity-scan"},
    {Experiment::SicValidate, "sic-validate"},
    {Experiment::SicSearch, "sic-search"},
    {Experiment::SicDistinguish, "sic-distinguish"},
    {Experiment::StationarySolve, "stationary-solve"},
    {Experiment::PbrGeometric, "pbr-geometric"},
    {Experiment::WeakValue, "weak-value"},
}};

inline std::string_view toString(Experiment e) {
  for (const auto& [k, name] : kExperimentNames)
    if (k == e) return name;
  return "unknown";
}

inline std::optional<Experiment> parseExperiment(std::string_view s) {
  for (const auto& [k, name] : kExperimentNames)
    if (name == s) return k;
  return std::nullopt;
}

enum class Format { Csv, Json };

struct ExperimentConfig {
  Experiment experiment = Experiment::BornMc;
  std::size_t dim = 2;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> seed;
  double tieTol = 0.0;
  std::optional<std::string> dist;
  unsigned workers = 1;
  json params = json::object();
};

/// Result of a run. `violation` is set when an acceptance property of the
/// model was observed to fail (e.g. two outcomes assigned at once).
struct RunOutput {
  std::vector<ResultRecord> records;
  std::optional<std::string> violation;
};

// ---------------------------------------------------------------------------
// Configuration

namespace detail {

using ::tsv::detail::requireSameDim;

inline bool usesDistribution(Experiment e) { return e == Experiment::BornMc || e == Experiment::BasisMc; }

inline std::uint64_t defaultSamples(Experiment e) {
  switch (e) {
    case Experiment::BornMc:
    case Experiment::BasisMc: return 100000;
    case Experiment::ExclusivityScan: return 10000;
    case Experiment::SicDistinguish:
    case Experiment::PbrGeometric: return 1000;
    case Experiment::StationarySolve: return 100;
    default: return 1;
  }
}

template <class T>
T getField(const json& j, const char* field) {
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + field + "': " + e.what());
  }
}

inline json paramOr(const json& params, const char* key, json fallback) {
  return params.contains(key) ? params.at(key) : std::move(fallback);
}

inline std::vector<double> numberList(const json& j, const char* field) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string("params.") + field + ": expected a non-empty array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string("params.") + field + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

/// Reads a declarative config. Unknown top-level fields are rejected.
inline ExperimentConfig configFromJson(const json& j, std::optional<Experiment> experiment = std::nullopt) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::array<std::string_view, 8> known{"experiment", "dim", "samples", "seed",
                                                     "tie_tol", "dist", "workers", "params"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("config: unknown field '" + key + "'");
    }
  }
  ExperimentConfig c;
  if (j.contains("experiment")) {
    const auto name = detail::getField<std::string>(j, "experiment");
    const auto parsed = parseExperiment(name);
    if (!parsed) throw ConfigError("config field 'experiment': unknown experiment '" + name + "'");
    c.experiment = *parsed;
  } else if (!experiment) {
    throw ConfigError("config field 'experiment': missing");
  }
  if (experiment) c.experiment = *experiment;
  if (j.contains("dim")) c.dim = detail::getField<std::size_t>(j, "dim");
  if (j.contains("samples")) c.samples = detail::getField<std::uint64_t>(j, "samples");
  if (j.contains("seed")) c.seed = detail::getField<std::uint64_t>(j, "seed");
  if (j.contains("tie_tol")) c.tieTol = detail::getField<double>(j, "tie_tol");
  if (j.contains("dist")) c.dist = detail::getField<std::string>(j, "dist");
  if (j.contains("workers")) c.workers = detail::getField<unsigned>(j, "workers");
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("config field 'params': expected an object");
    c.params = j.at("params");
  }
  return c;
}

/// Checks field-level constraints and fills in per-experiment defaults.
inline ExperimentConfig resolve(ExperimentConfig c) {
  if (!c.seed) throw ConfigError("config field 'seed': a seed is required (unseeded runs are rejected)");
  if (c.dim < 2) throw ConfigError("config field 'dim': must be >= 2");
  if (c.dim > 32) throw ConfigError("config field 'dim': must be <= 32");
  if (!c.samples) c.samples = detail::defaultSamples(c.experiment);
  if (*c.samples < 1) throw ConfigError("config field 'samples': must be >= 1");
  if (!(c.tieTol >= 0.0)) throw ConfigError("config field 'tie_tol': must be >= 0");
  if (c.workers < 1) throw ConfigError("config field 'workers': must be >= 1");
  if (detail::usesDistribution(c.experiment)) {
    if (!c.dist) c.dist = "uniform-overlap";
    if (*c.dist != "uniform-overlap" && *c.dist != "haar" && *c.dist != "fixed") {
      throw ConfigError("config field 'dist': expected uniform-overlap, haar or fixed, got '" + *c.dist + "'");
    }
    if (*c.dist == "fixed" && !c.params.contains("backward")) {
      throw ConfigError("config field 'params.backward': required when dist is 'fixed'");
    }
  } else {
    if (c.dist && *c.dist != "none") {
      throw ConfigError("config field 'dist': experiment '" + std::string(toString(c.experiment)) +
                        "' takes no backward distribution");
    }
    c.dist = "none";
  }

  json& p = c.params;
  switch (c.experiment) {
    case Experiment::BornMc:
      p["p"] = detail::paramOr(p, "p", json::array({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}));
      for (double v : detail::numberList(p["p"], "p"))
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("config field 'params.p': values must lie in [0, 1]");
      break;
    case Experiment::BasisMc:
      p["theta_deg"] = detail::paramOr(p, "theta_deg", json::array({30.0, 60.0, 90.0, 120.0, 150.0}));
      detail::numberList(p["theta_deg"], "theta_deg");
      break;
    case Experiment::SicValidate:
      p["tol"] = detail::paramOr(p, "tol", 1e-10);
      [[fallthrough]];
    case Experiment::SicDistinguish:
      if (!p.contains("fiducial") && !fiducials::builtin(c.dim)) {
        throw ConfigError("config field 'params.fiducial': required for dim " + std::to_string(c.dim) +
                          " (built-in fiducials exist for dim 2 and 3)");
      }
      if (c.experiment == Experiment::SicDistinguish) {
        p["states"] = detail::paramOr(p, "states", "pure");
        if (p["states"] != "pure" && p["states"] != "mixed") {
          throw ConfigError("config field 'params.states': expected 'pure' or 'mixed'");
        }
      }
      break;
    case Experiment::SicSearch:
      if (c.dim > 8) throw ConfigError("config field 'dim': sic-search supports dim <= 8");
      p["restarts"] = detail::paramOr(p, "restarts", 20);
      p["max_iters"] = detail::paramOr(p, "max_iters", 1000);
      for (const char* key : {"restarts", "max_iters"}) {
        if (!p[key].is_number_integer() || p[key].get<std::int64_t>() < 1)
          throw ConfigError(std::string("config field 'params.") + key + "': must be a positive integer");
      }
      break;
    case Experiment::StationarySolve:
      if (p.contains("hamiltonian")) {
        if (!p.contains("diagonal")) throw ConfigError("config field 'params.diagonal': required with a hamiltonian");
        if (p.contains("target") == p.contains("rho_down")) {
          throw ConfigError("config field 'params': give exactly one of 'target' or 'rho_down'");
        }
        p["require_psd"] = detail::paramOr(p, "require_psd", p.contains("rho_down"));
        p["dt"] = detail::paramOr(p, "dt", 1e-3);
      }
      break;
    case Experiment::WeakValue:
      if (!p.contains("observable") && c.dim != 2) {
        throw ConfigError("config field 'params.observable': required for dim != 2");
      }
      break;
    default: break;
  }
  return c;
}

/// Echo of everything that determines the payload.
inline ResultRecord configEcho(const ExperimentConfig& c) {
  ResultRecord r;
  r["schema_version"] = kSchemaVersion;
  r["experiment"] = std::string(toString(c.experiment));
  r["dist"] = c.dist.value_or("none");
  r["d"] = c.dim;
  r["N"] = c.samples.value_or(0);
  r["seed"] = c.seed.value_or(0);
  r["tie_tol"] = c.tieTol;
  r["params"] = c.params.dump();
  return r;
}

// ---------------------------------------------------------------------------
// Columns

namespace detail {

inline std::vector<std::string> specificColumns(Experiment e) {
  switch (e) {
    case Experiment::BornMc: return {"p_or_theta", "frequency", "stderr", "noAssignRate", "oracle"};
    case Experiment::BasisMc:
      return {"p_or_theta", "outcome", "frequency", "stderr", "noAssignRate", "cond_frequency", "cond_stderr",
              "oracle"};
    case Experiment::ExclusivityScan:
      return {"draws", "assigned", "no_outcome", "multiple_outcomes", "time_symmetry_mismatches"};
    case Experiment::SicValidate:
      return {"source", "tol", "max_pair_deviation", "identity_deviation", "pass", "fiducial"};
    case Experiment::SicSearch:
      return {"frame_potential", "oracle", "gap", "iterations", "restarts", "best_restart", "converged",
              "max_pair_deviation", "fiducial"};
    case Experiment::SicDistinguish: return {"draws", "separated", "no_separator", "no_separator_rate"};
    case Experiment::StationarySolve:
      return {"instance", "mode", "degenerate", "residual", "residual_bound", "min_eigenvalue", "halving_ratio",
              "rho"};
    case Experiment::PbrGeometric:
      return {"instances", "separated", "degenerate", "rule_failures", "min_margin", "a"};
    case Experiment::WeakValue: return {"value_re", "value_im", "event_probability"};
  }
  return {};
}

}  // namespace detail

/// Ordered CSV/JSON columns for an experiment (wall_time_s last).
inline std::vector<std::string> columnsFor(Experiment e) {
  std::vector<std::string> cols{"schema_version", "experiment", "dist", "d", "N", "seed", "tie_tol", "params"};
  for (auto& c : detail::specificColumns(e)) cols.push_back(std::move(c));
  cols.emplace_back("wall_time_s");
  return cols;
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

inline json optionalNumber(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline BackwardDistribution makeDistribution(const ExperimentConfig& c, const StateVector& target) {
  if (*c.dist == "haar") return HaarPure{};
  if (*c.dist == "fixed") {
    StateVector b = io::stateFromJson(c.params.at("backward"));
    requireSameDim(static_cast<Eigen::Index>(b.dim()), static_cast<Eigen::Index>(c.dim), "params.backward");
    return Fixed{std::move(b)};
  }
  return UniformOverlap{target};
}

/// √p e0 + √(1−p) e1: a forward state whose Born weight on e0 is p.
inline StateVector forwardWithWeight(std::size_t d, double p) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
  v(0) = std::sqrt(p);
  v(1) = std::sqrt(1.0 - p);
  return StateVector::normalize(std::move(v));
}

/// Computational basis with e0, e1 rotated by half-angle θ/2 (for d = 2 the
/// first vector has Bloch vector (sin θ, 0, cos θ)).
inline OrthonormalBasis tiltedBasis(std::size_t d, double thetaRad) {
  const auto n = static_cast<Eigen::Index>(d);
  CMatrix m = CMatrix::Identity(n, n);
  const double c = std::cos(thetaRad / 2.0);
  const double s = std::sin(thetaRad / 2.0);
  m(0, 0) = c;
  m(1, 0) = s;
  m(0, 1) = -s;
  m(1, 1) = c;
  return OrthonormalBasis::fromColumns(m);
}

inline RunOutput runBornMc(const ExperimentConfig& c) {
  RunOutput out;
  const StateVector a = StateVector::basis(c.dim, 0);
  const BackwardDistribution dist = makeDistribution(c, a);
  for (double p : numberList(c.params.at("p"), "p")) {
    const StateVector forward = forwardWithWeight(c.dim, p);
    const BornEstimate est = bornMc(forward, a, dist, *c.samples, *c.seed, c.tieTol, c.workers);
    ResultRecord r = configEcho(c);
    r["p_or_theta"] = p;
    r["frequency"] = est.frequency;
    r["stderr"] = est.stdErr;
    r["noAssignRate"] = nullptr;
    r["oracle"] = std::holds_alternative<Fixed>(dist) ? json(nullptr) : json(bornOracle(dist, p, c.dim));
    out.records.push_back(std::move(r));
  }
  return out;
}

inline RunOutput runBasisMc(const ExperimentConfig& c) {
  RunOutput out;
  const StateVector forward = StateVector::basis(c.dim, 0);
  for (double thetaDeg : numberList(c.params.at("theta_deg"), "theta_deg")) {
    const OrthonormalBasis basis = tiltedBasis(c.dim, thetaDeg * std::numbers::pi / 180.0);
    const BackwardDistribution dist = makeDistribution(c, basis[0]);
    const BasisEstimate est = basisMc(forward, basis, dist, *c.samples, *c.seed, c.tieTol, c.workers);
    for (std::size_t k = 0; k < c.dim; ++k) {
      const BornEstimate cond = est.conditional(k);
      ResultRecord r = configEcho(c);
      r["p_or_theta"] = thetaDeg;
      r["outcome"] = k;
      r["frequency"] = est.outcomes[k].frequency;
      r["stderr"] = est.outcomes[k].stdErr;
      r["noAssignRate"] = est.noAssignRate;
      r["cond_frequency"] = cond.samples > 0 ? json(cond.frequency) : json(nullptr);
      r["cond_stderr"] = cond.samples > 0 ? json(cond.stdErr) : json(nullptr);
      r["oracle"] = overlapSquared(forward, basis[k]);
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

inline RunOutput runExclusivityScan(const ExperimentConfig& c) {
  enum Bin : std::size_t { kAssigned, kNoOutcome, kMultiple, kMismatch, kBins };
  const RngStream stream(*c.seed, 0);
  const auto tally = shardedTally(*c.samples, c.workers, kBins, [&](std::uint64_t i) -> std::optional<std::size_t> {
    SampleRng gen = stream.sample(i);
    const StateVector forward = haarState(c.dim, gen);
    const StateVector backward = haarState(c.dim, gen);
    const OrthonormalBasis basis = haarBasis(c.dim, gen);
    const TwoStatePairPure pair(forward, backward);
    try {
      const AssignmentResult r = assignOverBasis(pair, basis, c.tieTol);
      const AssignmentResult rr = assignOverBasis(timeReverse(pair), basis, c.tieTol);
      if (r != rr) return kMismatch;
      return isAssigned(r) ? kAssigned : kNoOutcome;
    } catch (const MultipleOutcomes&) {
      return kMultiple;
    }
  });
  RunOutput out;
  ResultRecord r = configEcho(c);
  r["draws"] = *c.samples;
  r["assigned"] = tally[kAssigned];
  r["no_outcome"] = tally[kNoOutcome];
  r["multiple_outcomes"] = tally[kMultiple];
  r["time_symmetry_mismatches"] = tally[kMismatch];
  out.records.push_back(std::move(r));
  if (tally[kMultiple] > 0 || tally[kMismatch] > 0) {
    out.violation = "exclusivity-scan: " + std::to_string(tally[kMultiple]) + " MultipleOutcomes events, " +
                    std::to_string(tally[kMismatch]) + " time-symmetry mismatches";
  }
  return out;
}

inline StateVector fiducialFor(const ExperimentConfig& c) {
  if (c.params.contains("fiducial")) {
    StateVector f = io::stateFromJson(c.params.at("fiducial"));
    requireSameDim(static_cast<Eigen::Index>(f.dim()), static_cast<Eigen::Index>(c.dim), "params.fiducial");
    return f;
  }
  return *fiducials::builtin(c.dim);
}

inline RunOutput runSicValidate(const ExperimentConfig& c) {
  const StateVector f = fiducialFor(c);
  const double tol = c.params.at("tol").get<double>();
  const SicValidation v = validateSic(sicFromFiducial(f), tol);
  RunOutput out;
  ResultRecord r = configEcho(c);
  const bool builtin = !c.params.contains("fiducial");
  r["source"] = builtin ? "builtin" : "config";
  r["tol"] = tol;
  r["max_pair_deviation"] = v.maxPairDeviation;
  r["identity_deviation"] = v.identityDeviation;
  r["pass"] = v.pass;
  r["fiducial"] = io::toJson(f).dump();
  out.records.push_back(std::move(r));
  if (builtin && !v.pass) out.violation = "sic-validate: built-in fiducial failed validation";
  return out;
}

inline RunOutput runSicSearch(const ExperimentConfig& c, std::ostream* log) {
  const FiducialSearchReport rep =
      searchFiducial(c.dim, c.params.at("restarts").get<std::size_t>(), c.params.at("max_iters").get<std::size_t>(),
                     *c.seed, log);
  const SicValidation v = validateSic(sicFromFiducial(rep.fiducial), 1e-5);
  RunOutput out;
  ResultRecord r = configEcho(c);
  r["frame_potential"] = rep.framePotential;
  r["oracle"] = rep.lowerBound;
  r["gap"] = rep.framePotential - rep.lowerBound;
  r["iterations"] = rep.iterations;
  r["restarts"] = rep.restarts;
  r["best_restart"] = rep.bestRestart;
  r["converged"] = rep.converged;
  r["max_pair_deviation"] = v.maxPairDeviation;
  r["fiducial"] = io::toJson(rep.fiducial).dump();
  out.records.push_back(std::move(r));
  return out;
}

inline RunOutput runSicDistinguish(const ExperimentConfig& c) {
  const SicPovm sic = sicFromFiducial(fiducialFor(c));
  const bool mixed = c.params.at("states") == "mixed";
  const RngStream stream(*c.seed, 0);
  auto draw = [&](SampleRng& gen) {
    if (mixed) return TwoStatePairMixed(randomDensityMatrix(c.dim, gen), randomDensityMatrix(c.dim, gen));
    return TwoStatePairMixed(DensityMatrix::pure(haarState(c.dim, gen)), DensityMatrix::pure(haarState(c.dim, gen)));
  };
  const auto tally = shardedTally(*c.samples, c.workers, 1, [&](std::uint64_t i) -> std::optional<std::size_t> {
    SampleRng gen = stream.sample(i);
    const TwoStatePairMixed p0 = draw(gen);
    const TwoStatePairMixed p1 = draw(gen);
    if (std::holds_alternative<Separator>(sicDistinguish(p0, p1, sic))) return 0;
    return std::nullopt;
  });
  RunOutput out;
  ResultRecord r = configEcho(c);
  r["draws"] = *c.samples;
  r["separated"] = tally[0];
  r["no_separator"] = tally[1];
  r["no_separator_rate"] = static_cast<double>(tally[1]) / static_cast<double>(*c.samples);
  out.records.push_back(std::move(r));
  return out;
}

inline RVector realVector(const json& j, const char* field) {
  const std::vector<double> v = numberList(j, field);
  RVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline RunOutput runStationarySolve(const ExperimentConfig& c) {
  RunOutput out;
  const json& p = c.params;
  if (p.contains("hamiltonian")) {
    const HermitianOperator h = io::hermitianFromJson(p.at("hamiltonian"));
    requireSameDim(static_cast<Eigen::Index>(h.dim()), static_cast<Eigen::Index>(c.dim), "params.hamiltonian");
    const RVector diagonal = realVector(p.at("diagonal"), "diagonal");
    const bool degenerate = spectral(h).degeneracyBlocks.size() < h.dim();
    ResultRecord r = configEcho(c);
    r["instance"] = 0;
    if (p.contains("target")) {
      const StationarySolveInput in{h, CommutatorTarget::fromMatrix(io::matrixFromJson(p.at("target"))), diagonal};
      const CommutatorSolution sol = commutatorSolve(in, p.at("require_psd").get<bool>());
      r["mode"] = "solve";
      r["degenerate"] = degenerate;
      r["residual"] = sol.residual;
      r["residual_bound"] = 1e-12 * std::max(1.0, in.target.matrix().norm());
      r["min_eigenvalue"] = sol.minEigenvalue;
      r["halving_ratio"] = nullptr;
      r["rho"] = io::toJson(sol.rho).dump();
    } else {
      const DensityMatrix down = io::densityFromJson(p.at("rho_down"));
      const DensityMatrix up = stationaryPartner(down, h, diagonal);
      const TwoStatePairMixed pair(up, down);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(up.matrix(), Eigen::EigenvaluesOnly);
      r["mode"] = "partner";
      r["degenerate"] = degenerate;
      r["residual"] = stationarityDefect(pair, h);
      r["residual_bound"] = 1e-9;
      r["min_eigenvalue"] = es.eigenvalues().minCoeff();
      const double ratio = invarianceHalvingRatio(pair, h, p.at("dt").get<double>());
      r["halving_ratio"] = std::isfinite(ratio) ? json(ratio) : json(nullptr);
      r["rho"] = io::toJson(up).dump();
    }
    out.records.push_back(std::move(r));
    return out;
  }

  // Random feasible instances K = [X, H]; instance 0 has a two-fold
  // degenerate H when d >= 3.
  const RngStream stream(*c.seed, 0);
  for (std::uint64_t i = 0; i < *c.samples; ++i) {
    SampleRng gen = stream.sample(i);
    const bool degenerate = i == 0 && c.dim >= 3;
    HermitianOperator h = randomHermitian(c.dim, gen);
    if (degenerate) {
      const UnitaryOperator u = haarUnitary(c.dim, gen);
      RVector e(static_cast<Eigen::Index>(c.dim));
      for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = static_cast<double>(std::max<Eigen::Index>(k, 1));
      h = HermitianOperator::fromMatrix(
          ::tsv::detail::hermitianPart(u.matrix() * e.cast<Complex>().asDiagonal() * u.matrix().adjoint()));
    }
    const HermitianOperator x = randomHermitian(c.dim, gen);
    const CMatrix k = commutator(x.matrix(), h.matrix());
    const SpectralDecomposition sd = spectral(h);
    const CMatrix xEig = sd.eigenvectors.matrix().adjoint() * x.matrix() * sd.eigenvectors.matrix();
    const StationarySolveInput in{h, CommutatorTarget::fromMatrix((k - k.adjoint()) * 0.5),
                                  xEig.diagonal().real()};
    const CommutatorSolution sol = commutatorSolve(in, false);
    ResultRecord r = configEcho(c);
    r["instance"] = i;
    r["mode"] = "random";
    r["degenerate"] = degenerate;
    r["residual"] = sol.residual;
    r["residual_bound"] = 1e-12 * std::max(1.0, in.target.matrix().norm());
    r["min_eigenvalue"] = sol.minEigenvalue;
    r["halving_ratio"] = nullptr;
    r["rho"] = nullptr;
    if (sol.residual > 1e-12 * std::max(1.0, in.target.matrix().norm()) && !out.violation) {
      out.violation = "stationary-solve: residual above bound on instance " + std::to_string(i);
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline BlochVector blochFromJson(const json& j, const char* field) {
  const std::vector<double> v = numberList(j, field);
  if (v.size() != 3) throw ConfigError(std::string("params.instance.") + field + ": expected a 3-vector");
  return BlochVector::normalize(Eigen::Vector3d(v[0], v[1], v[2]));
}

/// Both pairs' rule outcomes for `a`, evaluated on states rather than Bloch vectors.
inline bool pbrRuleSeparates(const PbrGeometricInstance& inst, const BlochVector& a) {
  const StateVector as = stateFromBloch(a);
  const bool first = satisfiesPure({stateFromBloch(inst.m), stateFromBloch(inst.mPrime)}, as);
  const bool second = satisfiesPure({stateFromBloch(inst.x), stateFromBloch(inst.xPrime)}, as);
  return first && !second;
}

inline double pbrMargin(const PbrGeometricInstance& inst, const BlochVector& a) {
  const Eigen::Vector3d u = (inst.m.vec() + inst.mPrime.vec()).normalized();
  const Eigen::Vector3d v = (inst.x.vec() + inst.xPrime.vec()).normalized();
  return std::min(a.vec().dot(u), -a.vec().dot(v));
}

inline RunOutput runPbrGeometric(const ExperimentConfig& c) {
  RunOutput out;
  ResultRecord r = configEcho(c);
  if (c.dim != 2) throw ConfigError("config field 'dim': pbr-geometric is a qubit construction (dim 2)");
  if (c.params.contains("instance")) {
    const json& j = c.params.at("instance");
    const PbrGeometricInstance inst{blochFromJson(j.at("m"), "m"), blochFromJson(j.at("m_prime"), "m_prime"),
                                    blochFromJson(j.at("x"), "x"), blochFromJson(j.at("x_prime"), "x_prime")};
    const BlochVector a = pbrDistinguishingVector(inst);
    const bool ok = pbrRuleSeparates(inst, a);
    r["instances"] = 1;
    r["separated"] = ok ? 1 : 0;
    r["degenerate"] = 0;
    r["rule_failures"] = ok ? 0 : 1;
    r["min_margin"] = pbrMargin(inst, a);
    r["a"] = json::array({a.x(), a.y(), a.z()}).dump();
    if (!ok) out.violation = "pbr-geometric: separator failed direct rule evaluation";
    out.records.push_back(std::move(r));
    return out;
  }

  const RngStream stream(*c.seed, 0);
  std::uint64_t separated = 0, degenerate = 0, failures = 0;
  double minMargin = std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < *c.samples; ++i) {
    SampleRng gen = stream.sample(i);
    auto draw = [&] { return blochFromState(haarState(2, gen)); };
    const BlochVector m = draw(), mp = draw(), x = draw(), xp = draw();
    const PbrGeometricInstance inst{m, mp, x, xp};
    try {
      const BlochVector a = pbrDistinguishingVector(inst);
      const double margin = pbrMargin(inst, a);
      minMargin = std::min(minMargin, margin);
      if (pbrRuleSeparates(inst, a) && margin >= 1e-9) {
        ++separated;
      } else {
        ++failures;
      }
    } catch (const DegenerateInstance&) {
      ++degenerate;
    }
  }
  r["instances"] = *c.samples;
  r["separated"] = separated;
  r["degenerate"] = degenerate;
  r["rule_failures"] = failures;
  r["min_margin"] = std::isfinite(minMargin) ? json(minMargin) : json(nullptr);
  r["a"] = nullptr;
  if (failures > 0) out.violation = "pbr-geometric: " + std::to_string(failures) + " separators failed";
  out.records.push_back(std::move(r));
  return out;
}

inline RunOutput runWeakValue(const ExperimentConfig& c) {
  const json& p = c.params;
  const HermitianOperator a =
      p.contains("observable") ? io::hermitianFromJson(p.at("observable")) : HermitianOperator::fromMatrix(pauli::z());
  CVector plus(2);
  plus << 1.0, 1.0;
  const StateVector forward = p.contains("forward") ? io::stateFromJson(p.at("forward")) : StateVector::normalize(plus);
  const StateVector final = p.contains("final") ? io::stateFromJson(p.at("final")) : StateVector::basis(2, 0);
  requireSameDim(static_cast<Eigen::Index>(a.dim()), static_cast<Eigen::Index>(c.dim), "params.observable");
  requireSameDim(static_cast<Eigen::Index>(forward.dim()), static_cast<Eigen::Index>(c.dim), "params.forward");
  requireSameDim(static_cast<Eigen::Index>(final.dim()), static_cast<Eigen::Index>(c.dim), "params.final");
  const WeakValueResult w = weakValue(a, forward, final);
  RunOutput out;
  ResultRecord r = configEcho(c);
  r["value_re"] = w.value.real();
  r["value_im"] = w.value.imag();
  r["event_probability"] = w.eventProbability;
  out.records.push_back(std::move(r));
  return out;
}

}  // namespace detail

/// Runs one experiment. `cfg` must have passed through resolve().
inline RunOutput runExperiment(const ExperimentConfig& cfg, std::ostream* log = &std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  switch (cfg.experiment) {
    case Experiment::BornMc: out = detail::runBornMc(cfg); break;
    case Experiment::BasisMc: out = detail::runBasisMc(cfg); break;
    case Experiment::ExclusivityScan: out = detail::runExclusivityScan(cfg); break;
    case Experiment::SicValidate: out = detail::runSicValidate(cfg); break;
    case Experiment::SicSearch: out = detail::runSicSearch(cfg, log); break;
    case Experiment::SicDistinguish: out = detail::runSicDistinguish(cfg); break;
    case Experiment::StationarySolve: out = detail::runStationarySolve(cfg); break;
    case Experiment::PbrGeometric: out = detail::runPbrGeometric(cfg); break;
    case Experiment::WeakValue: out = detail::runWeakValue(cfg); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& r : out.records) r["wall_time_s"] = wall;
  return out;
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string csvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string csvField(const ResultRecord& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return csvEscape(v.get<std::string>());
  return csvEscape(v.dump());
}

}  // namespace detail

inline std::string toCsv(const std::vector<ResultRecord>& records, Experiment e, bool includeWallTime = true) {
  std::vector<std::string> cols = columnsFor(e);
  if (!includeWallTime) cols.pop_back();
  std::ostringstream os;
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      os << (i ? "," : "");
      if (r.contains(cols[i])) os << detail::csvField(r.at(cols[i]));
    }
    os << '\n';
  }
  return os.str();
}

inline std::string toJsonText(const std::vector<ResultRecord>& records, bool includeWallTime = true) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (auto r : records) {
    if (!includeWallTime) r.erase("wall_time_s");
    arr.push_back(std::move(r));
  }
  return arr.dump(2) + "\n";
}

/// Writes records to `path` ("-" is standard output).
inline void emitResults(const std::vector<ResultRecord>& records, Experiment e, Format format,
                        const std::string& path, bool includeWallTime = true) {
  const std::string payload =
      format == Format::Csv ? toCsv(records, e, includeWallTime) : toJsonText(records, includeWallTime);
  if (path == "-") {
    std::cout << payload << std::flush;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("emitResults: cannot open '" + path + "' for writing");
  f << payload;
  if (!f.flush()) throw Error("emitResults: write to '" + path + "' failed");
}

}  // namespace tsv::exp
