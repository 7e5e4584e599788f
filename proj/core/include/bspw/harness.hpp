#pragma once

// Reproducible experiment drivers: phase-transition curves, broadband DOA
// comparisons, robustness-constant tables and statistical-dimension sweeps.
// Every random draw comes from a stream keyed by (seed, experiment
// coordinates), so results do not depend on the number of workers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bspw/doa.hpp"
#include "bspw/io.hpp"
#include "bspw/model.hpp"
#include "bspw/recovery.hpp"
#include "bspw/weights.hpp"

namespace bspw::harness {

enum class ExperimentKind { phase_transition, doa, robustness, statdim_sweep };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

enum class SchemeKind { optimal, heuristic, equal };

struct WeightScheme {
  SchemeKind kind = SchemeKind::optimal;
  double eps = 0.01;  // heuristic only

  std::string label() const;
};

/// "optimal", "equal", "heuristic" (eps 0.01) or "heuristic:<eps>".
WeightScheme parse_scheme(const std::string& text);

struct PhaseTransitionSetup {
  std::size_t n = 250;
  std::vector<std::size_t> block_sizes;
  std::vector<double> prior;  // Model 1 probabilities per block
  std::vector<std::size_t> m_grid;
  double success_threshold = kDefaultSuccessThreshold;
};

struct DoaSetup {
  doa::DoaScenario scenario = doa::reference_scenario();
  std::vector<std::vector<std::size_t>> sets;
  std::vector<double> alphas;
  std::optional<double> complement_alpha;
  double peak_threshold = 0.1;
  doa::EtaRule eta_rule = doa::EtaRule::realized_noise;
};

struct RobustnessSetup {
  std::vector<int> k_list = {1, 5, 10};
  std::vector<double> p_grid;
  double delta_p = 1e-3;
};

struct StatdimSweepSetup {
  std::size_t instances = 50;
  std::size_t max_dim = 100;
  std::size_t samples = 10000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::phase_transition;
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  std::vector<WeightScheme> schemes = {{SchemeKind::optimal}, {SchemeKind::heuristic}, {SchemeKind::equal}};
  SolverConfig solver;
  WeightSolverConfig weight_solver;

  PhaseTransitionSetup phase;
  DoaSetup doa;
  RobustnessSetup robustness;
  StatdimSweepSetup statdim;

  void validate() const;
};

/// Parses an experiment JSON document. Unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON of a parsed config (used for the manifest hash).
std::string canonical_json(const ExperimentConfig& cfg);

/// Built-in configurations: "phase" (n=250), "phase-small" (n=100),
/// "doa", "robustness", "statdim".
ExperimentConfig preset(const std::string& name);

// ---------------------------------------------------------------------------

struct SchemeCurve {
  WeightScheme scheme;
  std::vector<double> success_rate;  // per m
  double predicted_bound = 0.0;      // expected-measurement bound for these weights
  std::optional<double> crossover;   // m at which the rate first reaches 0.5
};

struct PhaseTransitionResult {
  std::vector<std::size_t> m_grid;
  std::size_t trials = 0;
  std::vector<SchemeCurve> curves;
};

/// Linear interpolation of the first m where rate reaches `level`.
std::optional<double> crossover_point(const std::vector<std::size_t>& m_grid, const std::vector<double>& rates,
                                      double level = 0.5);

/// Weights a scheme assigns under a Model 1 prior.
WeightVector scheme_weights(const WeightScheme& scheme, const PriorModel1& prior, const BlockPartition& partition,
                            const WeightSolverConfig& cfg = {});
/// Lambdas a scheme assigns under a Model 2 prior with block size k.
LambdaVector scheme_lambdas(const WeightScheme& scheme, const PriorModel2& prior, int k,
                            const WeightSolverConfig& cfg = {});

PhaseTransitionResult run_phase_transition(const ExperimentConfig& cfg);
std::vector<io::Table> to_tables(const PhaseTransitionResult& result);

struct DoaSeedOutcome {
  std::uint64_t seed_index = 0;
  doa::PeakScore score;
  std::vector<std::size_t> peaks;
  std::vector<double> power;
  bool converged = true;
};

struct DoaSchemeResult {
  WeightScheme scheme;
  std::vector<double> lambda;
  std::vector<DoaSeedOutcome> seeds;
};

struct DoaExperimentResult {
  std::vector<double> angles_deg;
  std::vector<std::size_t> truth;
  std::vector<DoaSchemeResult> schemes;
};

/// Planted indices whose spectrum exceeds rel_threshold * max count as
/// detected; local maxima away from planted indices count as spurious.
doa::PeakScore score_doa(const doa::SpectrumEstimate& estimate, std::span<const std::size_t> truth,
                         double rel_threshold);

/// Runs cfg.trials seeds; each seed draws one scenario realization shared by all schemes.
DoaExperimentResult run_doa_experiment(const ExperimentConfig& cfg);
std::vector<io::Table> to_tables(const DoaExperimentResult& result);

struct RobustnessRow {
  int k = 0;
  double p = 0.0;
  double weight = 0.0;
  double constant = 0.0;      // +inf when it overflows
  double sensitivity = 0.0;   // |w(p) - w(p + dp)| / dp
  bool violated = false;
};

std::vector<RobustnessRow> run_robustness_table(const RobustnessSetup& setup, const WeightSolverConfig& cfg = {});
io::Table to_table(const std::vector<RobustnessRow>& rows);

struct StatdimSweepRow {
  std::size_t instance = 0;
  std::size_t n = 0;
  std::size_t q = 0;
  std::size_t support = 0;
  double bound = 0.0;
  double empirical_mean = 0.0;
  double std_error = 0.0;
  bool within = true;  // mean <= bound + 3 stderr
};

std::vector<StatdimSweepRow> run_statdim_sweep(const StatdimSweepSetup& setup, std::uint64_t seed);
io::Table to_table(const std::vector<StatdimSweepRow>& rows);

using OutputFormat = io::Format;
OutputFormat parse_format(const std::string& name);

struct Manifest {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> extra;
};

std::string tool_version();

/// Writes `{experiment}_{scheme}.{csv|json}` per table plus manifest.json and
/// returns the written paths. Creates out_dir if needed.
std::vector<std::filesystem::path> emit_results(const std::vector<io::Table>& tables, OutputFormat format,
                                                const std::filesystem::path& out_dir, const Manifest& manifest);

} // namespace bspw::harness
