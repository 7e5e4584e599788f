// bspw command-line front end.

#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bspw/doa.hpp"
#include "bspw/harness.hpp"
#include "bspw/io.hpp"
#include "bspw/recovery.hpp"
#include "bspw/rng.hpp"
#include "bspw/statdim.hpp"
#include "bspw/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bspw;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool need_config) {
  auto* c = cmd->add_option("--config", opts.config, "input JSON file");
  if (need_config) c->required();
  cmd->add_option("--out", opts.out, "output directory (stdout when omitted, where supported)");
  cmd->add_option("--format", opts.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", opts.seed, "base seed (u64)");
  cmd->add_option("--trials", opts.trials, "trials / seeds per point")->check(CLI::PositiveNumber);
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const auto v = std::stoull(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad index '" + item + "'");
    out.push_back(v);
  }
  return out;
}

json to_json_array(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double constant_or_inf(int k, double p, const WeightSolverConfig& cfg) {
  if (!(p > 0.0 && p < 1.0)) return std::numeric_limits<double>::infinity();
  try {
    return robustness_constant(k, p, cfg);
  } catch (const std::overflow_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

void write_or_print(const std::string& out, const std::string& name, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(out);
  io::write_text(fs::path(out) / name, text);
}

harness::Manifest make_manifest(const std::string& experiment, std::uint64_t seed, const std::string& canonical) {
  return {experiment, seed, io::fnv1a_hex(canonical), {}};
}

// --------------------------------------------------------------------------- weights

int run_weights(const CommonOptions& opts, const std::string& scheme_text) {
  const auto spec = io::load_model(opts.config);
  const auto scheme = harness::parse_scheme(scheme_text);
  const WeightSolverConfig wcfg;
  io::Table t;
  t.experiment = "weights";
  json j;
  if (spec.prior1) {
    const auto& prior = *spec.prior1;
    const auto w = harness::scheme_weights(scheme, prior, spec.partition, wcfg);
    t.columns = {"block", "k", "p", "w", "residual", "c"};
    json rows = json::array();
    for (std::size_t b = 0; b < w.size(); ++b) {
      const int k = static_cast<int>(spec.partition.block_size(b));
      const double res = weight_equation_residual(prior[b], k, w[b]);
      const double c = constant_or_inf(k, prior[b], wcfg);
      t.rows.push_back({std::to_string(b), std::to_string(k), io::format_double(prior[b]), io::format_double(w[b]),
                        io::format_double(res), io::format_double(c)});
      rows.push_back({{"block", b}, {"k", k}, {"p", prior[b]}, {"w", w[b]}, {"residual", res}, {"c", finite_or_null(c)}});
    }
    j = {{"model", 1}, {"scheme", scheme.label()}, {"block_sizes", spec.partition.sizes()},
         {"w", to_json_array(w.values())}, {"blocks", rows}};
  } else if (spec.prior2) {
    const auto& prior = *spec.prior2;
    const auto k_common = spec.partition.common_block_size();
    if (!k_common) throw std::invalid_argument("Model 2 weights need equal block sizes");
    const int k = static_cast<int>(*k_common);
    const auto lambda = harness::scheme_lambdas(scheme, prior, k, wcfg);
    const auto w = expand_lambda(spec.partition, prior, lambda);
    t.columns = {"set", "k", "alpha", "lambda", "residual", "c"};
    json rows = json::array();
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      const double a = prior.alpha(i);
      const double res = (a > 0.0 && a < 1.0) ? weight_equation_residual(a, k, lambda[i]) : 0.0;
      const double c = constant_or_inf(k, a, wcfg);
      t.rows.push_back({std::to_string(i), std::to_string(k), io::format_double(a), io::format_double(lambda[i]),
                        io::format_double(res), io::format_double(c)});
      rows.push_back({{"set", i}, {"k", k}, {"alpha", a}, {"lambda", lambda[i]}, {"residual", res},
                      {"c", finite_or_null(c)}});
    }
    j = {{"model", 2}, {"scheme", scheme.label()}, {"block_sizes", spec.partition.sizes()},
         {"lambda", to_json_array(lambda.values())}, {"w", to_json_array(w.values())}, {"sets", rows}};
  } else {
    throw std::invalid_argument(opts.config + ": model has neither 'p' nor 'sets'/'alphas'");
  }
  if (opts.format == "csv") {
    write_or_print(opts.out, "weights.csv", io::to_csv(t));
  } else {
    write_or_print(opts.out, "weights.json", j.dump(2) + "\n");
  }
  return 0;
}

// --------------------------------------------------------------------------- statdim

WeightVector load_weight_file(const std::string& path, std::size_t q) {
  const auto j = json::parse(io::read_text(path));
  const auto w = j.is_array() ? j.get<std::vector<double>>() : j.at("w").get<std::vector<double>>();
  if (w.size() != q) throw std::invalid_argument(path + ": expected " + std::to_string(q) + " weights");
  return WeightVector(w);
}

int run_statdim(const CommonOptions& opts, const std::string& support_text, const std::string& weights_file,
                const std::string& scheme_text, std::size_t samples) {
  const auto spec = io::load_model(opts.config);
  const auto& part = spec.partition;
  const std::uint64_t seed = opts.seed.value_or(0);
  WeightVector w = WeightVector::uniform(part.num_blocks());
  const auto scheme = harness::parse_scheme(scheme_text);
  if (!weights_file.empty()) {
    w = load_weight_file(weights_file, part.num_blocks());
  } else if (spec.prior1) {
    w = harness::scheme_weights(scheme, *spec.prior1, part);
  } else if (spec.prior2 && part.common_block_size()) {
    const auto lambda = harness::scheme_lambdas(scheme, *spec.prior2, static_cast<int>(*part.common_block_size()));
    w = expand_lambda(part, *spec.prior2, lambda);
  }

  json j;
  j["weights"] = to_json_array(w.values());
  if (!support_text.empty()) {
    const auto support = parse_index_list(support_text);
    const auto r = statdim_bound(part, support, w);
    j["bound"] = r.bound;
    j["t_star"] = finite_or_null(r.t_star);
    j["attained"] = r.attained;
    if (samples > 0) {
      auto rng = make_rng(seed, {0});
      std::normal_distribution<double> normal;
      Eigen::VectorXd x(static_cast<Eigen::Index>(part.dim()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
      const auto e = empirical_statdim(part, support, w, x, samples, derive_seed(seed, {1}));
      j["empirical"] = {{"mean", e.mean}, {"std_error", e.std_error}, {"samples", e.samples}};
    }
  } else if (spec.prior1) {
    const auto r = expected_bound_model1(part, *spec.prior1, w);
    j["expected_bound"] = r.bound;
    j["t_star"] = finite_or_null(r.t_star);
  } else if (spec.prior2) {
    const auto lambda = harness::scheme_lambdas(scheme, *spec.prior2, static_cast<int>(part.common_block_size().value_or(1)));
    const auto r = expected_bound_model2(part, *spec.prior2, lambda);
    j["expected_bound"] = r.bound;
    j["t_star"] = finite_or_null(r.t_star);
  } else {
    throw std::invalid_argument("statdim needs --support or a prior in the model file");
  }
  j["seed"] = seed;
  write_or_print(opts.out, "statdim.json", j.dump(2) + "\n");
  return 0;
}

// --------------------------------------------------------------------------- recover

int run_recover(const CommonOptions& opts, const std::string& matrix, const std::string& measurements, double eta,
                int max_iters) {
  // --config is a weights file as produced by `bspw weights --format json`.
  const auto wj = json::parse(io::read_text(opts.config));
  const auto sizes = wj.at("block_sizes").get<std::vector<std::size_t>>();
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  const auto part = validate_partition(n, sizes);
  const WeightVector w(wj.at("w").get<std::vector<double>>());
  if (w.size() != part.num_blocks()) throw std::invalid_argument(opts.config + ": weight count does not match blocks");

  const auto A = io::read_matrix(matrix);
  const auto y = io::read_matrix(measurements);
  if (y.values.rows() != A.values.rows()) {
    throw std::invalid_argument(measurements + ": " + std::to_string(y.values.rows()) + " rows but A has " +
                                std::to_string(A.values.rows()));
  }
  SolverConfig cfg;
  cfg.max_iters = max_iters;
  cfg.record_history = true;

  json log;
  std::string solution;
  auto fill_log = [&](const auto& res) {
    log = {{"iterations", res.iterations}, {"converged", res.converged},
           {"primal_residual", res.primal_residual}, {"dual_residual", res.dual_residual},
           {"objective", res.objective}, {"constraint_residual", res.constraint_residual},
           {"rank", res.rank}, {"final_rho", res.final_rho}, {"merit_history", res.merit_history},
           {"eta", eta}};
  };
  if (A.is_complex || y.is_complex) {
    MeasurementSystem<std::complex<double>> sys{A.values, y.values, eta};
    const auto res = solve_weighted(part, w, sys, cfg);
    fill_log(res);
    std::ostringstream os;
    os.precision(17);
    for (Eigen::Index i = 0; i < res.x_hat.rows(); ++i) {
      for (Eigen::Index c = 0; c < res.x_hat.cols(); ++c) {
        os << (c ? "," : "") << io::format_double(res.x_hat(i, c).real()) << ","
           << io::format_double(res.x_hat(i, c).imag());
      }
      os << "\n";
    }
    solution = os.str();
  } else {
    MeasurementSystem<double> sys{A.values.real(), y.values.real(), eta};
    const auto res = solve_weighted(part, w, sys, cfg);
    fill_log(res);
    std::string s;
    for (Eigen::Index i = 0; i < res.x_hat.rows(); ++i) {
      for (Eigen::Index c = 0; c < res.x_hat.cols(); ++c) s += (c ? "," : "") + io::format_double(res.x_hat(i, c));
      s += "\n";
    }
    solution = s;
  }
  const fs::path out = opts.out.empty() ? fs::path(".") : fs::path(opts.out);
  fs::create_directories(out);
  io::write_text(out / "solution.csv", solution);
  io::write_text(out / "convergence.json", log.dump(2) + "\n");
  std::cerr << "recover: " << log["iterations"] << " iterations, converged=" << log["converged"] << "\n";
  return log["converged"].get<bool>() ? 0 : 3;
}

// --------------------------------------------------------------------------- experiments

harness::ExperimentConfig experiment_config(const CommonOptions& opts, const std::string& preset_name,
                                            harness::ExperimentKind kind, const std::vector<std::string>& schemes) {
  harness::ExperimentConfig cfg;
  if (!opts.config.empty()) {
    cfg = harness::load_experiment_config(opts.config);
  } else if (!preset_name.empty()) {
    cfg = harness::preset(preset_name);
  } else {
    throw std::invalid_argument("need --config or --preset");
  }
  if (cfg.kind != kind) {
    throw std::invalid_argument("configuration describes a '" + harness::to_string(cfg.kind) + "' experiment, not '" +
                                harness::to_string(kind) + "'");
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.trials) cfg.trials = *opts.trials;
  if (!schemes.empty()) {
    cfg.schemes.clear();
    for (const auto& s : schemes) cfg.schemes.push_back(harness::parse_scheme(s));
  }
  cfg.validate();
  return cfg;
}

std::string require_out(const CommonOptions& opts) {
  if (opts.out.empty()) throw std::invalid_argument("--out is required for experiment runs");
  return opts.out;
}

void report_written(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
}

int run_phase(const CommonOptions& opts, const std::string& preset_name, const std::vector<std::string>& schemes) {
  const auto cfg = experiment_config(opts, preset_name, harness::ExperimentKind::phase_transition, schemes);
  const auto out = require_out(opts);
  const auto result = harness::run_phase_transition(cfg);
  auto manifest = make_manifest("phase_transition", cfg.seed, harness::canonical_json(cfg));
  for (const auto& c : result.curves) {
    manifest.extra.emplace_back("crossover_" + c.scheme.label(), c.crossover ? io::format_double(*c.crossover) : "none");
    std::cerr << c.scheme.label() << ": predicted " << c.predicted_bound << ", 50% crossover "
              << (c.crossover ? io::format_double(*c.crossover) : "not reached") << "\n";
  }
  report_written(harness::emit_results(harness::to_tables(result), harness::parse_format(opts.format), out, manifest));
  return 0;
}

int run_doa(const CommonOptions& opts, const std::string& preset_name, const std::vector<std::string>& schemes) {
  const auto cfg = experiment_config(opts, preset_name, harness::ExperimentKind::doa, schemes);
  const auto out = require_out(opts);
  const auto result = harness::run_doa_experiment(cfg);
  auto manifest = make_manifest("doa", cfg.seed, harness::canonical_json(cfg));
  for (const auto& s : result.schemes) {
    std::size_t clean = 0;
    for (const auto& o : s.seeds) clean += (o.score.missed == 0 && o.score.spurious == 0);
    manifest.extra.emplace_back("clean_seeds_" + s.scheme.label(), std::to_string(clean));
    std::cerr << s.scheme.label() << ": " << clean << "/" << s.seeds.size() << " seeds with every source and no spurious peak\n";
  }
  report_written(harness::emit_results(harness::to_tables(result), harness::parse_format(opts.format), out, manifest));
  return 0;
}

int run_robustness(const CommonOptions& opts) {
  auto cfg = opts.config.empty() ? harness::preset("robustness")
                                 : experiment_config(opts, "", harness::ExperimentKind::robustness, {});
  const auto rows = harness::run_robustness_table(cfg.robustness, cfg.weight_solver);
  std::size_t violations = 0;
  for (const auto& r : rows) violations += r.violated;
  auto manifest = make_manifest("robustness", cfg.seed, harness::canonical_json(cfg));
  manifest.extra.emplace_back("violations", std::to_string(violations));
  const auto table = harness::to_table(rows);
  if (opts.out.empty()) {
    std::cout << (opts.format == "csv" ? io::to_csv(table) : io::to_json(table));
  } else {
    report_written(harness::emit_results({table}, harness::parse_format(opts.format), opts.out, manifest));
  }
  if (violations) std::cerr << "robustness: " << violations << " cells exceed c(k,p)\n";
  return 0;
}

int run_statdim_sweep(const CommonOptions& opts) {
  auto cfg = opts.config.empty() ? harness::preset("statdim")
                                 : experiment_config(opts, "", harness::ExperimentKind::statdim_sweep, {});
  if (opts.seed) cfg.seed = *opts.seed;
  const auto rows = harness::run_statdim_sweep(cfg.statdim, cfg.seed);
  const auto table = harness::to_table(rows);
  const auto manifest = make_manifest("statdim_sweep", cfg.seed, harness::canonical_json(cfg));
  if (opts.out.empty()) {
    std::cout << (opts.format == "csv" ? io::to_csv(table) : io::to_json(table));
  } else {
    report_written(harness::emit_results({table}, harness::parse_format(opts.format), opts.out, manifest));
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal weights and experiments for weighted block-sparse recovery"};
  app.set_version_flag("--version", harness::tool_version());
  app.require_subcommand(1);
  app.footer("Worker threads: set BSPW_WORKERS (default: hardware concurrency).");

  CommonOptions weights_opts, statdim_opts, recover_opts, doa_opts, phase_opts, robust_opts, sweep_opts;

  std::string weight_scheme = "optimal";
  auto* weights = app.add_subcommand("weights", "solve block weights for a model JSON");
  add_common(weights, weights_opts, true);
  weights->add_option("--scheme", weight_scheme, "optimal | heuristic[:eps] | equal");

  std::string support, weights_file, statdim_scheme = "optimal";
  std::size_t samples = 10000;
  auto* statdim = app.add_subcommand("statdim", "statistical-dimension bound for a support or a prior");
  add_common(statdim, statdim_opts, true);
  statdim->add_option("--support", support, "comma-separated on-support block indices (zero-based)");
  statdim->add_option("--weights", weights_file, "weights JSON (array or object with 'w')");
  statdim->add_option("--scheme", statdim_scheme, "weight scheme when --weights is absent");
  statdim->add_option("--samples", samples, "Monte-Carlo samples (0 disables)");

  std::string matrix, measurements;
  double eta = 0.0;
  int max_iters = SolverConfig{}.max_iters;
  auto* recover = app.add_subcommand("recover", "solve the weighted l1,2 program");
  add_common(recover, recover_opts, true);
  recover->add_option("--matrix", matrix, "sensing matrix (.csv or .bin)")->required();
  recover->add_option("--measurements", measurements, "measurements y (.csv or .bin)")->required();
  recover->add_option("--eta", eta, "noise bound ||Ax - y|| <= eta")->check(CLI::NonNegativeNumber);
  recover->add_option("--max-iters", max_iters, "ADMM iteration cap")->check(CLI::PositiveNumber);

  std::string doa_preset, phase_preset;
  std::vector<std::string> doa_schemes, phase_schemes;
  auto* doa_cmd = app.add_subcommand("doa", "broadband DOA comparison across weight schemes");
  add_common(doa_cmd, doa_opts, false);
  doa_cmd->add_option("--preset", doa_preset, "built-in configuration (doa)");
  doa_cmd->add_option("--schemes", doa_schemes, "override weight schemes (comma-separated)")->delimiter(',');

  auto* phase = app.add_subcommand("phase-transition", "success rate versus number of measurements");
  add_common(phase, phase_opts, false);
  phase->add_option("--preset", phase_preset, "built-in configuration (phase, phase-small)");
  phase->add_option("--schemes", phase_schemes, "override weight schemes (comma-separated)")->delimiter(',');

  auto* robust = app.add_subcommand("robustness", "sensitivity constant table");
  add_common(robust, robust_opts, false);

  auto* sweep = app.add_subcommand("statdim-sweep", "bound versus Monte-Carlo on random instances");
  add_common(sweep, sweep_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*weights) return run_weights(weights_opts, weight_scheme);
    if (*statdim) return run_statdim(statdim_opts, support, weights_file, statdim_scheme, samples);
    if (*recover) return run_recover(recover_opts, matrix, measurements, eta, max_iters);
    if (*doa_cmd) return run_doa(doa_opts, doa_preset, doa_schemes);
    if (*phase) return run_phase(phase_opts, phase_preset, phase_schemes);
    if (*robust) return run_robustness(robust_opts);
    if (*sweep) return run_statdim_sweep(sweep_opts);
  } catch (const std::exception& e) {
    std::cerr << "bspw: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
