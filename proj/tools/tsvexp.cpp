// tsvexp: command-line driver for the two-state-vector experiments.
//
// Exit codes: 0 success, 2 config error, 3 runtime error,
// 4 a model property was observed to fail.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsv/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitViolation = 4;

struct Overrides {
  std::optional<std::size_t> dim;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> tieTol;
  std::optional<std::string> dist;
  std::optional<unsigned> workers;
  std::vector<std::string> params;
  std::string config;
  std::string out = "-";
  std::string format = "csv";
  bool noWallTime = false;
  bool quiet = false;
};

const std::map<tsv::exp::Experiment, std::string> kHelp{
    {tsv::exp::Experiment::BornMc,
     "Born-rule Monte Carlo for one outcome a. The pair (fwd, bwd) yields a iff "
     "|<fwd|a>|^2 + |<bwd|a>|^2 > 1 + tie_tol. The forward state has Born weight p on a; "
     "backward states are drawn from --dist. params: p (list of weights), backward (fixed dist)."},
    {tsv::exp::Experiment::BasisMc,
     "Monte Carlo over a full basis tilted by theta from the forward state, same outcome rule "
     "as born-mc, reporting per-outcome frequencies and the no-outcome rate. params: theta_deg."},
    {tsv::exp::Experiment::ExclusivityScan,
     "Random (pair, orthonormal basis) draws: counts draws where two orthogonal outcomes satisfy "
     "the rule at once (must be 0) and draws where swapping forward and backward changes the outcome."},
    {tsv::exp::Experiment::SicValidate,
     "Builds the Weyl-Heisenberg orbit of a fiducial and checks tr(P_k P_l) = 1/(d+1) for k != l "
     "and sum_k P_k = d I. params: fiducial (state literal), tol."},
    {tsv::exp::Experiment::SicSearch,
     "Searches for a SIC fiducial by minimizing the orbit frame potential toward the bound "
     "2d^3/(d+1). params: restarts, max_iters. Progress goes to stderr."},
    {tsv::exp::Experiment::SicDistinguish,
     "For random pairs of two-state pairs, looks for a SIC element P_k whose mixed rule "
     "tr[(rho_fwd + rho_bwd) P_k] > 1 (equivalently lambda_k > 1 - 1/d) differs between them. "
     "params: fiducial, states (pure|mixed)."},
    {tsv::exp::Experiment::StationarySolve,
     "Stationary pairs satisfy [rho_fwd, H] = [rho_bwd, H]. Solves [rho, H] = K via "
     "rho_ij = K_ij / (E_j - E_i) in H's eigenbasis. params: hamiltonian + target + diagonal "
     "(+ require_psd), or hamiltonian + rho_down + diagonal (+ dt); none for random instances."},
    {tsv::exp::Experiment::PbrGeometric,
     "Qubit construction: finds a Bloch vector a with a.(m+m') > 0 and a.(x+x') < 0, so one "
     "measurement separates the pairs (m,m') and (x,x'). params: instance {m, m_prime, x, x_prime}."},
    {tsv::exp::Experiment::WeakValue,
     "Weak value <final|A|fwd>/<final|fwd> and event probability |<fwd|final>|^2. "
     "params: observable, forward, final."},
};

void addCommonOptions(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON config file; flags override its fields");
  sub->add_option("--dim", o.dim, "Hilbert-space dimension");
  sub->add_option("--samples", o.samples, "Sample / draw / instance count");
  sub->add_option("--seed", o.seed, "RNG seed (required)");
  sub->add_option("--tie-tol", o.tieTol, "Extra margin added to the outcome threshold");
  sub->add_option("--dist", o.dist, "Backward distribution: uniform-overlap | haar | fixed");
  sub->add_option("--workers", o.workers, "Worker threads (does not change results)");
  sub->add_option("--param", o.params, "Experiment parameter as key=<json value>; repeatable");
  sub->add_option("--out", o.out, "Output path, '-' for stdout");
  sub->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--no-wall-time", o.noWallTime, "Omit the wall_time_s column (byte-comparable output)");
  sub->add_flag("--quiet", o.quiet, "Suppress progress output on stderr");
}

tsv::exp::ExperimentConfig buildConfig(tsv::exp::Experiment e, const Overrides& o) {
  using tsv::ConfigError;
  nlohmann::json file = nlohmann::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("--config: cannot open '" + o.config + "'");
    try {
      in >> file;
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("--config: '" + o.config + "' is not valid JSON: " + ex.what());
    }
    if (file.contains("experiment") && file["experiment"] != std::string(tsv::exp::toString(e))) {
      throw ConfigError("config field 'experiment': file says " + file["experiment"].dump() + " but subcommand is " +
                        std::string(tsv::exp::toString(e)));
    }
  }
  tsv::exp::ExperimentConfig c = tsv::exp::configFromJson(file, e);
  if (o.dim) c.dim = *o.dim;
  if (o.samples) c.samples = *o.samples;
  if (o.seed) c.seed = *o.seed;
  if (o.tieTol) c.tieTol = *o.tieTol;
  if (o.dist) c.dist = *o.dist;
  if (o.workers) c.workers = *o.workers;
  for (const std::string& kv : o.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param: expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    try {
      c.params[key] = nlohmann::json::parse(kv.substr(eq + 1));
    } catch (const nlohmann::json::exception&) {
      c.params[key] = kv.substr(eq + 1);
    }
  }
  return tsv::exp::resolve(std::move(c));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-state-vector outcome-rule experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::map<CLI::App*, tsv::exp::Experiment> subs;
  for (const auto& [e, name] : tsv::exp::kExperimentNames) {
    CLI::App* sub = app.add_subcommand(std::string(name), kHelp.at(e));
    addCommonOptions(sub, o);
    subs[sub] = e;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  tsv::exp::Experiment experiment{};
  for (const auto& [sub, e] : subs)
    if (sub->parsed()) experiment = e;

  tsv::exp::ExperimentConfig cfg;
  try {
    cfg = buildConfig(experiment, o);
  } catch (const tsv::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const tsv::exp::RunOutput run = tsv::exp::runExperiment(cfg, o.quiet ? nullptr : &std::cerr);
    tsv::exp::emitResults(run.records, experiment,
                          o.format == "json" ? tsv::exp::Format::Json : tsv::exp::Format::Csv, o.out,
                          !o.noWallTime);
    if (run.violation) {
      std::cerr << "property violation: " << *run.violation << '\n';
      return kExitViolation;
    }
  } catch (const tsv::MultipleOutcomes& e) {
    std::cerr << "property violation: " << e.what() << '\n';
    return kExitViolation;
  } catch (const tsv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
