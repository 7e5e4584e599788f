// Acceptance suite: one PASS/FAIL line per criterion.
//
//   bspw_acceptance            run every criterion
//   bspw_acceptance --only 6   run a subset (comma-separated)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bspw/harness.hpp"
#include "bspw/recovery.hpp"
#include "bspw/specfun.hpp"
#include "bspw/statdim.hpp"
#include "bspw/weights.hpp"
#include "oracles.hpp"

using namespace bspw;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome special_functions() {
  double worst_identity = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const double ratio = specfun::phi_b(0.0, k) / specfun::chi_normalizer(k);
    worst_identity = std::max(worst_identity, std::abs(ratio - k) / k);
  }
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uz(0.0, 8.0);
  std::uniform_int_distribution<int> uk(1, 25);
  double worst_quad = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double z = uz(rng);
    const int k = uk(rng);
    const auto err = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
    worst_quad = std::max(worst_quad, err(specfun::tail_moment(k, z), oracle::tail_moment(k, z)));
    worst_quad = std::max(worst_quad, err(specfun::psi(z, k), oracle::psi(z, k)));
    worst_quad = std::max(worst_quad, err(specfun::phi_b(z, k), oracle::phi_b(z, k)));
  }
  return {worst_identity <= 1e-10 && worst_quad <= 1e-9,
          "identity rel err " + fmt("%.2e", worst_identity) + ", quadrature err " + fmt("%.2e", worst_quad)};
}

// 2 -------------------------------------------------------------------------
Outcome weight_residuals() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> up(0.01, 0.99);
  std::uniform_int_distribution<int> uk(1, 30);
  double worst_res = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double p = up(rng);
    const int k = uk(rng);
    worst_res = std::max(worst_res, std::abs(weight_equation_residual(p, k, solve_weight_scalar(p, k))));
  }
  double worst_k1 = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double p = up(rng);
    const double ref = oracle::bisect([p](double w) { return oracle::weight_residual_k1(p, w); }, 0.0, 10.0);
    worst_k1 = std::max(worst_k1, std::abs(solve_weight_scalar(p, 1) - ref));
  }
  return {worst_res <= 1e-10 && worst_k1 <= 1e-10,
          "max residual " + fmt("%.2e", worst_res) + ", k=1 root gap " + fmt("%.2e", worst_k1)};
}

// 3 -------------------------------------------------------------------------
Outcome bound_optimality() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> up(0.02, 0.98), uw(0.05, 5.0);
  std::size_t violations = 0;
  double worst = -1e300;
  const auto check = [&](double star, double other) {
    const double gap = star - other;
    worst = std::max(worst, gap);
    if (gap > 1e-6 * std::max(1.0, other)) ++violations;
  };
  for (int trial = 0; trial < 20; ++trial) {
    // Model 1 with mixed block sizes.
    const std::size_t q = 5 + rng() % 40;
    std::vector<std::size_t> sizes(q);
    std::size_t n = 0;
    for (auto& s : sizes) n += (s = 1 + rng() % 8);
    const auto part = validate_partition(n, sizes);
    std::vector<double> p(q);
    for (auto& v : p) v = up(rng);
    const PriorModel1 prior(p);
    const double star = expected_bound_model1(part, prior, solve_model1(prior, part)).bound;
    check(star, expected_bound_model1(part, prior, WeightVector::uniform(q)).bound);
    for (int r = 0; r < 100; ++r) {
      std::vector<double> w(q);
      for (auto& v : w) v = uw(rng);
      check(star, expected_bound_model1(part, prior, WeightVector(w)).bound);
    }

    // Model 2 with equal block sizes.
    const std::size_t q2 = 6 + rng() % 30;
    const int k = 1 + static_cast<int>(rng() % 10);
    const auto part2 = BlockPartition::uniform(q2, static_cast<std::size_t>(k));
    const std::size_t L = 2 + rng() % 3;
    std::vector<std::vector<std::size_t>> sets(L);
    for (std::size_t b = 0; b < q2; ++b) sets[b < L ? b : rng() % L].push_back(b);
    std::vector<double> alphas(L);
    for (auto& a : alphas) a = up(rng);
    const PriorModel2 prior2(q2, sets, alphas);
    const double star2 = expected_bound_model2(part2, prior2, solve_model2(prior2, k)).bound;
    check(star2, expected_bound_model2(part2, prior2, LambdaVector(std::vector<double>(L, 1.0))).bound);
    for (int r = 0; r < 100; ++r) {
      std::vector<double> lam(L);
      for (auto& v : lam) v = uw(rng);
      check(star2, expected_bound_model2(part2, prior2, LambdaVector(lam)).bound);
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 2 x 20 x 101 comparisons, max(star - other) " +
                               fmt("%.2e", worst)};
}

// 4 -------------------------------------------------------------------------
Outcome lemma_validation() {
  std::mt19937_64 rng(404);
  std::size_t above = 0;
  double worst_scale = 0.0;
  double worst_z = -1e300;
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    for (;;) {
      const std::size_t k = 1 + rng() % 10;
      if (n + k > 100) break;
      sizes.push_back(k);
      n += k;
      if (sizes.size() >= 2 && rng() % 8 == 0) break;
    }
    const auto part = validate_partition(n, sizes);
    std::vector<std::size_t> support;
    for (std::size_t b = 0; b < sizes.size(); ++b)
      if (rng() % 3 == 0) support.push_back(b);
    std::uniform_real_distribution<double> uw(0.2, 3.0);
    std::vector<double> wv(sizes.size());
    for (auto& v : wv) v = uw(rng);
    const WeightVector w(wv);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = nd(rng);

    const auto bound = statdim_bound(part, support, w);
    const auto emp = empirical_statdim(part, support, w, x, 10000, 4040 + inst);
    if (emp.mean > bound.bound + 3.0 * emp.std_error) ++above;
    if (emp.std_error > 0) worst_z = std::max(worst_z, (emp.mean - bound.bound) / emp.std_error);
    for (double c : {1e-3, 0.37, 12.0, 1e3}) {
      const double scaled = statdim_bound(part, support, w.scaled(c)).bound;
      worst_scale = std::max(worst_scale, std::abs(scaled - bound.bound) / std::max(1.0, bound.bound));
    }
  }
  return {above == 0 && worst_scale <= 1e-8, std::to_string(above) + "/50 above bound + 3 se (max z " +
                                                 fmt("%.2f", worst_z) + "), scale drift " + fmt("%.2e", worst_scale)};
}

// 5 -------------------------------------------------------------------------
Outcome recovery_oracle() {
  std::ifstream in(std::string(BSPW_FIXTURE_DIR) + "/recovery_fixtures.json");
  if (!in) return {false, "fixture file missing"};
  const auto fixtures = nlohmann::json::parse(in)["cases"];
  SolverConfig cfg;
  cfg.abs_tol = 1e-11;
  cfg.rel_tol = 1e-10;
  cfg.max_iters = 50000;
  double worst = 0.0;
  for (const auto& fx : fixtures) {
    const auto sizes = fx["block_sizes"].get<std::vector<std::size_t>>();
    std::size_t n = 0;
    for (auto s : sizes) n += s;
    const auto m = fx["y"].size();
    Mat<double> A(m, n), y(m, 1), x_opt(n, 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) A(i, j) = fx["A"][i][j].get<double>();
      y(i, 0) = fx["y"][i].get<double>();
    }
    for (std::size_t j = 0; j < n; ++j) x_opt(j, 0) = fx["x_opt"][j].get<double>();
    const auto r = solve_weighted(validate_partition(n, sizes), WeightVector(fx["w"].get<std::vector<double>>()),
                                  MeasurementSystem<double>{A, y, fx["eta"].get<double>()}, cfg);
    worst = std::max(worst, (r.x_hat - x_opt).norm() / x_opt.norm());
  }
  return {fixtures.size() == 20 && worst <= 1e-5,
          std::to_string(fixtures.size()) + " instances, max relative deviation " + fmt("%.2e", worst)};
}

// 6 -------------------------------------------------------------------------
struct OrderCheck {
  bool ok = false;
  std::string text;
};

OrderCheck crossover_order(const harness::PhaseTransitionResult& r) {
  const double step = static_cast<double>(r.m_grid.at(1) - r.m_grid.at(0));
  std::ostringstream os;
  std::vector<double> m50;
  for (const auto& c : r.curves) {
    os << c.scheme.label() << "=" << (c.crossover ? fmt("%.1f", *c.crossover) : "none") << " ";
    m50.push_back(c.crossover.value_or(std::numeric_limits<double>::infinity()));
  }
  if (m50.size() != 3) return {false, os.str()};
  const double g1 = m50[1] - m50[0];
  const double g2 = m50[2] - m50[1];
  const bool ordered = std::isfinite(m50[2]) && g1 > 0 && g2 > 0;
  const bool ok = std::isfinite(m50[2]) && g1 > 2 * step && g2 > 2 * step;
  os << "(ordered " << (ordered ? "yes" : "no") << ", gaps " << fmt("%.1f", g1) << "/" << fmt("%.1f", g2)
     << ", need > " << fmt("%.0f", 2 * step) << ") ";
  return {ok, os.str()};
}

Outcome phase_transition() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto reduced = harness::run_phase_transition(harness::preset("phase-small"));
  const double reduced_s = std::chrono::duration<double>(clock::now() - t0).count();
  const auto full = harness::run_phase_transition(harness::preset("phase"));
  const auto a = crossover_order(full);
  const auto b = crossover_order(reduced);
  return {a.ok && b.ok && reduced_s < 300.0, "n=250: " + a.text + "| n=100: " + b.text + "(" + fmt("%.0f", reduced_s) +
                                                 " s)"};
}

// 7 -------------------------------------------------------------------------
Outcome doa_experiment() {
  auto cfg = harness::preset("doa");
  cfg.schemes = {{harness::SchemeKind::optimal}, {harness::SchemeKind::equal}};
  const auto r = harness::run_doa_experiment(cfg);
  std::size_t clean = 0, spurious_equal = 0;
  for (const auto& o : r.schemes[0].seeds) clean += (o.score.detected == 10 && o.score.spurious == 0);
  for (const auto& o : r.schemes[1].seeds) spurious_equal += (o.score.spurious >= 1);
  const std::size_t seeds = r.schemes[0].seeds.size();
  const bool ok = seeds == 20 && clean * 5 >= seeds * 4 && spurious_equal * 5 >= seeds * 4;
  return {ok, "optimal clean on " + std::to_string(clean) + "/" + std::to_string(seeds) +
                  " seeds, equal spurious on " + std::to_string(spurious_equal) + "/" + std::to_string(seeds)};
}

// 8 -------------------------------------------------------------------------
Outcome lipschitz_table() {
  harness::RobustnessSetup setup;
  setup.k_list = {1, 5, 10};
  setup.p_grid.clear();
  for (int i = 3; i <= 18; ++i) setup.p_grid.push_back(i / 20.0);
  const auto rows = harness::run_robustness_table(setup);
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (const auto& r : rows) {
    violations += r.violated;
    worst_ratio = std::max(worst_ratio, r.sensitivity / r.constant);
  }
  // Shape: finite and non-increasing in p from p = 0.1 on.
  std::size_t rises = 0;
  for (int k : setup.k_list) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 2; i <= 18; ++i) {
      const double c = robustness_constant(k, i / 20.0);
      if (!std::isfinite(c) || c > prev) ++rises;
      prev = c;
    }
  }
  std::ostringstream os;
  os << violations << "/" << rows.size() << " cells with |dw|/dp > c (worst ratio " << fmt("%.2f", worst_ratio)
     << "), " << rises << " non-decreasing steps in c";
  return {violations == 0 && rises == 0, os.str()};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (1-8)")->delimiter(',')->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"special-function identities and quadrature agreement", special_functions},
      {"weight-equation residuals and k=1 reduction", weight_residuals},
      {"optimal weights minimise the expected bound", bound_optimality},
      {"Monte-Carlo statistical dimension below the bound", lemma_validation},
      {"recovery matches the convex oracle", recovery_oracle},
      {"phase-transition crossover ordering", phase_transition},
      {"broadband DOA detection", doa_experiment},
      {"empirical Lipschitz table", lipschitz_table},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s -- %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
