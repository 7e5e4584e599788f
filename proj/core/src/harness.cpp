#include "bspw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "bspw/parallel.hpp"
#include "bspw/rng.hpp"
#include "bspw/statdim.hpp"

#ifndef BSPW_VERSION
#define BSPW_VERSION "0.0.0"
#endif

namespace bspw::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using io::format_double;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(where + "." + key + ": " + e.what());
  }
}

std::vector<std::size_t> parse_range(const json& r, const std::string& where) {
  reject_unknown_keys(r, {"start", "stop", "step"}, where);
  const auto start = r.at("start").get<std::size_t>();
  const auto stop = r.at("stop").get<std::size_t>();
  const auto step = r.at("step").get<std::size_t>();
  if (step == 0) throw std::invalid_argument(where + ": step must be positive");
  std::vector<std::size_t> out;
  for (std::size_t m = start; m <= stop; m += step) out.push_back(m);
  return out;
}

std::vector<std::size_t> repeat(std::size_t count, std::size_t value) { return std::vector<std::size_t>(count, value); }

std::vector<double> piecewise_prior(std::initializer_list<std::pair<std::size_t, double>> runs) {
  std::vector<double> p;
  for (const auto& [count, value] : runs) p.insert(p.end(), count, value);
  return p;
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s + "]";
}

} // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::phase_transition: return "phase_transition";
    case ExperimentKind::doa: return "doa";
    case ExperimentKind::robustness: return "robustness";
    case ExperimentKind::statdim_sweep: return "statdim_sweep";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "phase_transition" || name == "phase-transition") return ExperimentKind::phase_transition;
  if (name == "doa") return ExperimentKind::doa;
  if (name == "robustness") return ExperimentKind::robustness;
  if (name == "statdim_sweep" || name == "statdim-sweep") return ExperimentKind::statdim_sweep;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string WeightScheme::label() const {
  switch (kind) {
    case SchemeKind::optimal: return "optimal";
    case SchemeKind::equal: return "equal";
    case SchemeKind::heuristic: return eps == 0.01 ? "heuristic" : "heuristic-" + format_double(eps);
  }
  return "unknown";
}

WeightScheme parse_scheme(const std::string& text) {
  if (text == "optimal") return {SchemeKind::optimal};
  if (text == "equal") return {SchemeKind::equal};
  if (text == "heuristic") return {SchemeKind::heuristic, 0.01};
  const std::string prefix = "heuristic:";
  if (text.rfind(prefix, 0) == 0) {
    double eps = 0.0;
    try {
      eps = std::stod(text.substr(prefix.size()));
    } catch (const std::exception&) {
      throw std::invalid_argument("scheme '" + text + "': bad epsilon");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("scheme '" + text + "': epsilon must be > 0");
    return {SchemeKind::heuristic, eps};
  }
  throw std::invalid_argument("unknown weight scheme '" + text + "' (optimal | heuristic[:eps] | equal)");
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (schemes.empty()) throw std::invalid_argument("config: no weight schemes");
  solver.validate();
  weight_solver.validate();
  switch (kind) {
    case ExperimentKind::phase_transition: {
      const auto& ph = phase;
      const auto partition = validate_partition(ph.n, ph.block_sizes);
      if (ph.prior.size() != partition.num_blocks()) {
        throw std::invalid_argument("config: prior has " + std::to_string(ph.prior.size()) + " entries for " +
                                    std::to_string(partition.num_blocks()) + " blocks");
      }
      PriorModel1 check(ph.prior);
      if (ph.m_grid.empty()) throw std::invalid_argument("config: m grid is empty");
      for (std::size_t i = 0; i < ph.m_grid.size(); ++i) {
        if (ph.m_grid[i] < 1) throw std::invalid_argument("config: m grid entries must be >= 1");
        if (i && ph.m_grid[i] <= ph.m_grid[i - 1]) throw std::invalid_argument("config: m grid must be strictly increasing");
      }
      if (!(ph.success_threshold > 0.0)) throw std::invalid_argument("config: success threshold must be > 0");
      break;
    }
    case ExperimentKind::doa: {
      doa.scenario.validate();
      PriorModel2 check(doa.scenario.grid_size, doa.sets, doa.alphas, doa.complement_alpha);
      if (!(doa.peak_threshold > 0.0 && doa.peak_threshold < 1.0)) {
        throw std::invalid_argument("config: peak threshold must lie in (0, 1)");
      }
      break;
    }
    case ExperimentKind::robustness:
      if (robustness.k_list.empty() || robustness.p_grid.empty()) throw std::invalid_argument("config: empty robustness grid");
      for (int k : robustness.k_list) {
        if (k < 1) throw std::invalid_argument("config: block sizes must be >= 1");
      }
      for (double p : robustness.p_grid) {
        if (!(p > 0.0 && p + robustness.delta_p < 1.0)) {
          throw std::invalid_argument("config: p grid must lie in (0, 1 - delta_p)");
        }
      }
      if (!(robustness.delta_p > 0.0)) throw std::invalid_argument("config: delta_p must be > 0");
      break;
    case ExperimentKind::statdim_sweep:
      if (statdim.instances < 1 || statdim.samples < 1 || statdim.max_dim < 2) {
        throw std::invalid_argument("config: statdim sweep needs instances, samples >= 1 and max_dim >= 2");
      }
      break;
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(j, {"experiment", "preset", "seed", "trials", "schemes", "solver", "weight_solver",
                          "phase_transition", "doa", "robustness", "statdim"},
                      "config");
  ExperimentConfig cfg;
  if (j.contains("preset")) {
    cfg = preset(j.at("preset").get<std::string>());
  } else if (j.contains("experiment")) {
    cfg.kind = parse_experiment_kind(j.at("experiment").get<std::string>());
  } else {
    throw std::invalid_argument("config: need 'experiment' or 'preset'");
  }
  if (j.contains("preset") && j.contains("experiment")) {
    cfg.kind = parse_experiment_kind(j.at("experiment").get<std::string>());
  }
  read_opt(j, "seed", cfg.seed, "config");
  read_opt(j, "trials", cfg.trials, "config");
  if (j.contains("schemes")) {
    cfg.schemes.clear();
    for (const auto& s : j.at("schemes")) cfg.schemes.push_back(parse_scheme(s.get<std::string>()));
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown_keys(s, {"rho", "abs_tol", "rel_tol", "max_iters", "relaxation", "adaptive_rho", "adapt_until"},
                        "config.solver");
    read_opt(s, "rho", cfg.solver.rho, "solver");
    read_opt(s, "abs_tol", cfg.solver.abs_tol, "solver");
    read_opt(s, "rel_tol", cfg.solver.rel_tol, "solver");
    read_opt(s, "max_iters", cfg.solver.max_iters, "solver");
    read_opt(s, "relaxation", cfg.solver.relaxation, "solver");
    read_opt(s, "adaptive_rho", cfg.solver.adaptive_rho, "solver");
    read_opt(s, "adapt_until", cfg.solver.adapt_until, "solver");
  }
  if (j.contains("weight_solver")) {
    const auto& s = j.at("weight_solver");
    reject_unknown_keys(s, {"root_tol", "max_bracket_doublings", "max_iters", "lambda_cap_factor", "lambda_min"},
                        "config.weight_solver");
    read_opt(s, "root_tol", cfg.weight_solver.root_tol, "weight_solver");
    read_opt(s, "max_bracket_doublings", cfg.weight_solver.max_bracket_doublings, "weight_solver");
    read_opt(s, "max_iters", cfg.weight_solver.max_iters, "weight_solver");
    read_opt(s, "lambda_cap_factor", cfg.weight_solver.lambda_cap_factor, "weight_solver");
    read_opt(s, "lambda_min", cfg.weight_solver.lambda_min, "weight_solver");
  }
  if (j.contains("phase_transition")) {
    const auto& s = j.at("phase_transition");
    reject_unknown_keys(s, {"n", "block_sizes", "block_size", "p", "m_grid", "m_range", "success_threshold"},
                        "config.phase_transition");
    auto& ph = cfg.phase;
    read_opt(s, "n", ph.n, "phase_transition");
    read_opt(s, "block_sizes", ph.block_sizes, "phase_transition");
    if (s.contains("block_size")) {
      const auto k = s.at("block_size").get<std::size_t>();
      if (k == 0 || ph.n % k != 0) throw std::invalid_argument("config.phase_transition: block_size must divide n");
      ph.block_sizes = repeat(ph.n / k, k);
    }
    read_opt(s, "p", ph.prior, "phase_transition");
    read_opt(s, "m_grid", ph.m_grid, "phase_transition");
    if (s.contains("m_range")) ph.m_grid = parse_range(s.at("m_range"), "config.phase_transition.m_range");
    read_opt(s, "success_threshold", ph.success_threshold, "phase_transition");
  }
  if (j.contains("doa")) {
    const auto& s = j.at("doa");
    reject_unknown_keys(s, {"sensors", "grid_size", "grid", "spacing", "velocity", "freq_bins", "band", "snapshots",
                            "sources_deg", "sigma", "sets", "alphas", "complement_alpha", "peak_threshold", "eta_rule"},
                        "config.doa");
    auto& d = cfg.doa;
    auto& sc = d.scenario;
    read_opt(s, "sensors", sc.sensors, "doa");
    read_opt(s, "grid_size", sc.grid_size, "doa");
    if (s.contains("grid")) sc.grid = doa::parse_grid(s.at("grid").get<std::string>());
    read_opt(s, "spacing", sc.spacing, "doa");
    read_opt(s, "velocity", sc.velocity, "doa");
    read_opt(s, "freq_bins", sc.freq_bins, "doa");
    if (s.contains("band")) {
      const auto& b = s.at("band");
      reject_unknown_keys(b, {"low", "high", "count"}, "config.doa.band");
      sc.freq_bins = doa::uniform_frequency_bins(b.at("low").get<double>(), b.at("high").get<double>(),
                                                 b.at("count").get<std::size_t>());
    }
    read_opt(s, "snapshots", sc.snapshots, "doa");
    read_opt(s, "sources_deg", sc.source_angles_deg, "doa");
    read_opt(s, "sigma", sc.sigma, "doa");
    read_opt(s, "sets", d.sets, "doa");
    read_opt(s, "alphas", d.alphas, "doa");
    if (s.contains("complement_alpha")) d.complement_alpha = s.at("complement_alpha").get<double>();
    read_opt(s, "peak_threshold", d.peak_threshold, "doa");
    if (s.contains("eta_rule")) {
      const auto rule = s.at("eta_rule").get<std::string>();
      if (rule == "realized_noise") {
        d.eta_rule = doa::EtaRule::realized_noise;
      } else if (rule == "sigma_bound") {
        d.eta_rule = doa::EtaRule::sigma_bound;
      } else {
        throw std::invalid_argument("config.doa.eta_rule: expected realized_noise or sigma_bound");
      }
    }
  }
  if (j.contains("robustness")) {
    const auto& s = j.at("robustness");
    reject_unknown_keys(s, {"k", "p_grid", "delta_p"}, "config.robustness");
    read_opt(s, "k", cfg.robustness.k_list, "robustness");
    read_opt(s, "p_grid", cfg.robustness.p_grid, "robustness");
    read_opt(s, "delta_p", cfg.robustness.delta_p, "robustness");
  }
  if (j.contains("statdim")) {
    const auto& s = j.at("statdim");
    reject_unknown_keys(s, {"instances", "max_dim", "samples"}, "config.statdim");
    read_opt(s, "instances", cfg.statdim.instances, "statdim");
    read_opt(s, "max_dim", cfg.statdim.max_dim, "statdim");
    read_opt(s, "samples", cfg.statdim.samples, "statdim");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  try {
    return parse_experiment_config(io::read_text(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(cfg.kind);
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  std::vector<std::string> schemes;
  for (const auto& s : cfg.schemes) schemes.push_back(s.kind == SchemeKind::heuristic ? "heuristic:" + format_double(s.eps) : s.label());
  j["schemes"] = schemes;
  j["solver"] = {{"rho", cfg.solver.rho},
                 {"abs_tol", cfg.solver.abs_tol},
                 {"rel_tol", cfg.solver.rel_tol},
                 {"max_iters", cfg.solver.max_iters},
                 {"relaxation", cfg.solver.relaxation},
                 {"adaptive_rho", cfg.solver.adaptive_rho},
                 {"adapt_until", cfg.solver.adapt_until}};
  j["weight_solver"] = {{"root_tol", cfg.weight_solver.root_tol},
                        {"max_bracket_doublings", cfg.weight_solver.max_bracket_doublings},
                        {"max_iters", cfg.weight_solver.max_iters},
                        {"lambda_cap_factor", cfg.weight_solver.lambda_cap_factor},
                        {"lambda_min", cfg.weight_solver.lambda_min}};
  switch (cfg.kind) {
    case ExperimentKind::phase_transition:
      j["phase_transition"] = {{"n", cfg.phase.n},
                               {"block_sizes", cfg.phase.block_sizes},
                               {"p", cfg.phase.prior},
                               {"m_grid", cfg.phase.m_grid},
                               {"success_threshold", cfg.phase.success_threshold}};
      break;
    case ExperimentKind::doa: {
      const auto& d = cfg.doa;
      const auto& sc = d.scenario;
      j["doa"] = {{"sensors", sc.sensors},
                  {"grid_size", sc.grid_size},
                  {"grid", doa::to_string(sc.grid)},
                  {"spacing", sc.spacing},
                  {"velocity", sc.velocity},
                  {"freq_bins", sc.freq_bins},
                  {"snapshots", sc.snapshots},
                  {"sources_deg", sc.source_angles_deg},
                  {"sigma", sc.sigma},
                  {"sets", d.sets},
                  {"alphas", d.alphas},
                  {"peak_threshold", d.peak_threshold},
                  {"eta_rule", d.eta_rule == doa::EtaRule::realized_noise ? "realized_noise" : "sigma_bound"}};
      if (d.complement_alpha) j["doa"]["complement_alpha"] = *d.complement_alpha;
      break;
    }
    case ExperimentKind::robustness:
      j["robustness"] = {{"k", cfg.robustness.k_list}, {"p_grid", cfg.robustness.p_grid}, {"delta_p", cfg.robustness.delta_p}};
      break;
    case ExperimentKind::statdim_sweep:
      j["statdim"] = {{"instances", cfg.statdim.instances}, {"max_dim", cfg.statdim.max_dim}, {"samples", cfg.statdim.samples}};
      break;
  }
  return j.dump();
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "phase" || name == "phase-small") {
    const bool full = name == "phase";
    cfg.kind = ExperimentKind::phase_transition;
    cfg.seed = 2019;
    cfg.trials = full ? 100 : 30;
    auto& ph = cfg.phase;
    // A few near-certain blocks, a band of coin flips and a long tail of
    // unlikely blocks.
    if (full) {
      ph.n = 250;
      ph.block_sizes = repeat(50, 5);
      ph.prior = piecewise_prior({{8, 0.95}, {20, 0.5}, {22, 0.04}});
      for (std::size_t m = 50; m <= 250; m += 5) ph.m_grid.push_back(m);
    } else {
      ph.n = 100;
      ph.block_sizes = repeat(20, 5);
      ph.prior = piecewise_prior({{3, 0.95}, {8, 0.5}, {9, 0.04}});
      for (std::size_t m = 20; m <= 100; m += 5) ph.m_grid.push_back(m);
    }
    return cfg;
  }
  if (name == "doa") {
    cfg.kind = ExperimentKind::doa;
    cfg.seed = 2019;
    cfg.trials = 20;
    cfg.doa.scenario = doa::reference_scenario();
    // Sets around the planted sources on the 100-point sine grid (sources sit
    // at 4 6 16 17 45 48 56 57 67 84); everything else is the alpha = 0 set.
    cfg.doa.sets = {{4, 5, 6, 16, 17}, {45, 46, 48, 56, 57, 58, 67, 84, 85}};
    cfg.doa.alphas = {4.0 / 5.0, 2.0 / 3.0};
    cfg.doa.complement_alpha = 0.0;
    return cfg;
  }
  if (name == "robustness") {
    cfg.kind = ExperimentKind::robustness;
    cfg.robustness.k_list = {1, 5, 10};
    for (int i = 1; i <= 19; ++i) cfg.robustness.p_grid.push_back(i / 20.0);
    return cfg;
  }
  if (name == "statdim") {
    cfg.kind = ExperimentKind::statdim_sweep;
    cfg.seed = 7;
    return cfg;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (phase, phase-small, doa, robustness, statdim)");
}

// ---------------------------------------------------------------------------

std::optional<double> crossover_point(const std::vector<std::size_t>& m_grid, const std::vector<double>& rates,
                                      double level) {
  if (m_grid.size() != rates.size()) throw std::invalid_argument("crossover: size mismatch");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] >= level) {
      if (i == 0) return static_cast<double>(m_grid[0]);
      const double m0 = static_cast<double>(m_grid[i - 1]);
      const double m1 = static_cast<double>(m_grid[i]);
      const double r0 = rates[i - 1];
      const double r1 = rates[i];
      return m0 + (level - r0) / (r1 - r0) * (m1 - m0);
    }
  }
  return std::nullopt;
}

WeightVector scheme_weights(const WeightScheme& scheme, const PriorModel1& prior, const BlockPartition& partition,
                            const WeightSolverConfig& cfg) {
  switch (scheme.kind) {
    case SchemeKind::optimal: return solve_model1(prior, partition, cfg);
    case SchemeKind::heuristic: return heuristic_weights(prior, scheme.eps);
    case SchemeKind::equal: return WeightVector::uniform(partition.num_blocks());
  }
  throw std::logic_error("unhandled scheme");
}

LambdaVector scheme_lambdas(const WeightScheme& scheme, const PriorModel2& prior, int k, const WeightSolverConfig& cfg) {
  switch (scheme.kind) {
    case SchemeKind::optimal: return solve_model2(prior, k, cfg);
    case SchemeKind::heuristic: return heuristic_lambdas(prior, scheme.eps);
    case SchemeKind::equal: return LambdaVector(std::vector<double>(prior.num_sets(), 1.0));
  }
  throw std::logic_error("unhandled scheme");
}

PhaseTransitionResult run_phase_transition(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::phase_transition) throw std::invalid_argument("run_phase_transition: wrong experiment kind");
  cfg.validate();
  const auto& ph = cfg.phase;
  const auto partition = validate_partition(ph.n, ph.block_sizes);
  const PriorModel1 prior(ph.prior);
  const std::size_t S = cfg.schemes.size();
  const std::size_t q = partition.num_blocks();
  const auto n = static_cast<Eigen::Index>(ph.n);

  std::vector<WeightVector> weights;
  PhaseTransitionResult out;
  out.m_grid = ph.m_grid;
  out.trials = cfg.trials;
  for (const auto& scheme : cfg.schemes) {
    weights.push_back(scheme_weights(scheme, prior, partition, cfg.weight_solver));
    SchemeCurve curve;
    curve.scheme = scheme;
    curve.predicted_bound = expected_bound_model1(partition, prior, weights.back()).bound;
    out.curves.push_back(std::move(curve));
  }

  const std::size_t M = ph.m_grid.size();
  std::vector<char> ok(M * cfg.trials * S, 0);
  parallel_for(M * cfg.trials, [&](std::size_t task) {
    const std::size_t mi = task / cfg.trials;
    const std::size_t trial = task % cfg.trials;
    const std::size_t m = ph.m_grid[mi];
    auto rng = make_rng(cfg.seed, {m, trial});
    std::uniform_real_distribution<double> unif;
    std::normal_distribution<double> normal;

    std::vector<char> active(q, 0);
    auto draw_support = [&](Rng& r) {
      bool any = false;
      for (std::size_t b = 0; b < q; ++b) {
        active[b] = unif(r) < prior[b] ? 1 : 0;
        any = any || active[b];
      }
      return any;
    };
    bool nonzero = draw_support(rng);
    if (!nonzero) {
      auto retry = make_rng(cfg.seed, {m, trial, 1});
      nonzero = draw_support(retry);
    }
    char* slot = &ok[task * S];
    if (!nonzero) {
      std::fill(slot, slot + S, 1);  // x = 0 is recovered exactly by every scheme
      return;
    }
    Mat<double> x = Mat<double>::Zero(n, 1);
    for (std::size_t b = 0; b < q; ++b) {
      if (!active[b]) continue;
      for (auto i : partition.block(b)) x(static_cast<Eigen::Index>(i), 0) = normal(rng);
    }
    MeasurementSystem<double> sys;
    sys.A.resize(static_cast<Eigen::Index>(m), n);
    for (Eigen::Index r = 0; r < sys.A.rows(); ++r)
      for (Eigen::Index c = 0; c < n; ++c) sys.A(r, c) = normal(rng);
    sys.y = sys.A * x;
    for (std::size_t s = 0; s < S; ++s) {
      const auto res = solve_weighted(partition, weights[s], sys, cfg.solver);
      slot[s] = success(res.x_hat, x, ph.success_threshold) ? 1 : 0;
    }
  });

  for (std::size_t s = 0; s < S; ++s) {
    auto& curve = out.curves[s];
    curve.success_rate.resize(M);
    for (std::size_t mi = 0; mi < M; ++mi) {
      std::size_t hits = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) hits += ok[(mi * cfg.trials + t) * S + s];
      curve.success_rate[mi] = static_cast<double>(hits) / static_cast<double>(cfg.trials);
    }
    curve.crossover = crossover_point(out.m_grid, curve.success_rate);
  }
  return out;
}

std::vector<io::Table> to_tables(const PhaseTransitionResult& result) {
  std::vector<io::Table> tables;
  for (const auto& curve : result.curves) {
    io::Table t;
    t.experiment = "phase_transition";
    t.scheme = curve.scheme.label();
    t.columns = {"m", "scheme", "success_rate", "trials", "predicted_bound"};
    for (std::size_t i = 0; i < result.m_grid.size(); ++i) {
      t.rows.push_back({std::to_string(result.m_grid[i]), t.scheme, format_double(curve.success_rate[i]),
                        std::to_string(result.trials), format_double(curve.predicted_bound)});
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

doa::PeakScore score_doa(const doa::SpectrumEstimate& estimate, std::span<const std::size_t> truth,
                         double rel_threshold) {
  doa::PeakScore s;
  const double top = estimate.power.empty() ? 0.0 : *std::max_element(estimate.power.begin(), estimate.power.end());
  for (auto idx : truth) {
    if (top > 0.0 && estimate.power.at(idx) > rel_threshold * top) ++s.detected;
  }
  s.missed = truth.size() - s.detected;
  for (auto p : estimate.peaks) {
    if (std::find(truth.begin(), truth.end(), p) == truth.end()) ++s.spurious;
  }
  return s;
}

DoaExperimentResult run_doa_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::doa) throw std::invalid_argument("run_doa_experiment: wrong experiment kind");
  cfg.validate();
  const auto& d = cfg.doa;
  const auto& sc = d.scenario;
  const PriorModel2 prior(sc.grid_size, d.sets, d.alphas, d.complement_alpha);
  // A complex row of k snapshots is a real block of size 2k.
  const int k_real = static_cast<int>(2 * sc.snapshots);

  DoaExperimentResult out;
  out.angles_deg = doa::grid_angles_deg(sc);
  std::vector<LambdaVector> lambdas;
  for (const auto& scheme : cfg.schemes) {
    lambdas.push_back(scheme_lambdas(scheme, prior, k_real, cfg.weight_solver));
    DoaSchemeResult r;
    r.scheme = scheme;
    r.lambda.assign(lambdas.back().values().begin(), lambdas.back().values().end());
    out.schemes.push_back(std::move(r));
  }
  for (std::size_t s = 0; s < cfg.trials; ++s) {
    const auto obs = doa::synthesize(sc, derive_seed(cfg.seed, {s}));
    if (s == 0) out.truth = obs.source_indices;
    for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
      const auto est = doa::estimate(sc, prior, lambdas[i], obs, d.eta_rule, d.peak_threshold, cfg.solver);
      DoaSeedOutcome o;
      o.seed_index = s;
      o.score = score_doa(est, obs.source_indices, d.peak_threshold);
      o.peaks = est.peaks;
      o.power = est.power;
      o.converged = est.all_converged;
      out.schemes[i].seeds.push_back(std::move(o));
    }
  }
  return out;
}

std::vector<io::Table> to_tables(const DoaExperimentResult& result) {
  std::vector<io::Table> tables;
  for (const auto& sr : result.schemes) {
    io::Table spectrum;
    spectrum.experiment = "doa_spectrum";
    spectrum.scheme = sr.scheme.label();
    spectrum.columns = {"seed", "grid_index", "angle_deg", "power", "scheme"};
    spectrum.format = io::Format::csv;
    for (const auto& o : sr.seeds) {
      for (std::size_t j = 0; j < o.power.size(); ++j) {
        spectrum.rows.push_back({std::to_string(o.seed_index), std::to_string(j), format_double(result.angles_deg[j]),
                                 format_double(o.power[j]), spectrum.scheme});
      }
    }
    io::Table peaks;
    peaks.experiment = "doa_peaks";
    peaks.scheme = sr.scheme.label();
    peaks.columns = {"seed", "detected", "spurious", "missed", "converged", "peaks"};
    peaks.format = io::Format::json;
    for (const auto& o : sr.seeds) {
      peaks.rows.push_back({std::to_string(o.seed_index), std::to_string(o.score.detected),
                            std::to_string(o.score.spurious), std::to_string(o.score.missed),
                            o.converged ? "true" : "false", join_indices(o.peaks)});
    }
    tables.push_back(std::move(spectrum));
    tables.push_back(std::move(peaks));
  }
  return tables;
}

std::vector<RobustnessRow> run_robustness_table(const RobustnessSetup& setup, const WeightSolverConfig& cfg) {
  std::vector<RobustnessRow> rows;
  for (int k : setup.k_list) {
    for (double p : setup.p_grid) {
      RobustnessRow r;
      r.k = k;
      r.p = p;
      r.weight = solve_weight_scalar(p, k, cfg);
      try {
        r.constant = robustness_constant(k, p, cfg);
      } catch (const std::overflow_error&) {
        r.constant = std::numeric_limits<double>::infinity();
      }
      const double shifted = solve_weight_scalar(p + setup.delta_p, k, cfg);
      r.sensitivity = std::abs(r.weight - shifted) / setup.delta_p;
      r.violated = r.sensitivity > r.constant;
      rows.push_back(r);
    }
  }
  return rows;
}

io::Table to_table(const std::vector<RobustnessRow>& rows) {
  io::Table t;
  t.experiment = "robustness";
  t.columns = {"k", "p", "weight", "c", "sensitivity", "violated"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.k), format_double(r.p), format_double(r.weight), format_double(r.constant),
                      format_double(r.sensitivity), r.violated ? "true" : "false"});
  }
  return t;
}

std::vector<StatdimSweepRow> run_statdim_sweep(const StatdimSweepSetup& setup, std::uint64_t seed) {
  std::vector<StatdimSweepRow> rows;
  for (std::size_t i = 0; i < setup.instances; ++i) {
    auto rng = make_rng(seed, {i});
    std::uniform_int_distribution<std::size_t> block_size(1, std::min<std::size_t>(10, setup.max_dim / 2));
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    for (;;) {
      const auto k = block_size(rng);
      if (n + k > setup.max_dim) break;
      sizes.push_back(k);
      n += k;
      if (sizes.size() >= 2 && std::uniform_real_distribution<double>()(rng) < 0.08) break;
    }
    if (sizes.size() < 2) {
      sizes = {1, 1};
      n = 2;
    }
    const auto partition = validate_partition(n, sizes);
    const std::size_t q = partition.num_blocks();
    std::vector<std::size_t> order(q);
    for (std::size_t b = 0; b < q; ++b) order[b] = b;
    std::shuffle(order.begin(), order.end(), rng);
    const auto support_size = std::uniform_int_distribution<std::size_t>(0, q)(rng);
    std::vector<std::size_t> support(order.begin(), order.begin() + static_cast<long>(support_size));
    std::sort(support.begin(), support.end());
    std::vector<double> wv(q);
    std::uniform_real_distribution<double> wdist(0.2, 3.0);
    for (auto& v : wv) v = wdist(rng);
    const WeightVector w(wv);
    std::normal_distribution<double> normal;
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = normal(rng);

    const auto bound = statdim_bound(partition, support, w);
    const auto emp = empirical_statdim(partition, support, w, x, setup.samples, derive_seed(seed, {i, 1}));
    StatdimSweepRow r;
    r.instance = i;
    r.n = n;
    r.q = q;
    r.support = support.size();
    r.bound = bound.bound;
    r.empirical_mean = emp.mean;
    r.std_error = emp.std_error;
    r.within = emp.mean <= bound.bound + 3.0 * emp.std_error;
    rows.push_back(r);
  }
  return rows;
}

io::Table to_table(const std::vector<StatdimSweepRow>& rows) {
  io::Table t;
  t.experiment = "statdim_sweep";
  t.columns = {"instance", "n", "q", "support", "bound", "empirical_mean", "std_error", "within_3se"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.instance), std::to_string(r.n), std::to_string(r.q), std::to_string(r.support),
                      format_double(r.bound), format_double(r.empirical_mean), format_double(r.std_error),
                      r.within ? "true" : "false"});
  }
  return t;
}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown output format '" + name + "' (csv | json)");
}

std::string tool_version() { return BSPW_VERSION; }

std::vector<fs::path> emit_results(const std::vector<io::Table>& tables, OutputFormat format, const fs::path& out_dir,
                                   const Manifest& manifest) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error(out_dir.string() + ": cannot create directory: " + ec.message());
  std::vector<fs::path> written;
  std::vector<std::string> names;
  for (const auto& t : tables) {
    const auto fmt = t.format.value_or(format);
    const std::string stem = t.scheme.empty() ? t.experiment : t.experiment + "_" + t.scheme;
    const auto path = out_dir / (stem + (fmt == OutputFormat::csv ? ".csv" : ".json"));
    io::write_text(path, fmt == OutputFormat::csv ? io::to_csv(t) : io::to_json(t));
    written.push_back(path);
    names.push_back(path.filename().string());
  }
  json m;
  m["experiment"] = manifest.experiment;
  m["seed"] = manifest.seed;
  m["config_hash"] = manifest.config_hash;
  m["tool_version"] = tool_version();
  m["files"] = names;
  for (const auto& [key, value] : manifest.extra) m["extra"][key] = value;
  const auto mpath = out_dir / "manifest.json";
  io::write_text(mpath, m.dump(2) + "\n");
  written.push_back(mpath);
  return written;
}

} // namespace bspw::harness
