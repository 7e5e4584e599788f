#include "bspw/doa.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bspw/parallel.hpp"
#include "bspw/rng.hpp"

namespace bspw::doa {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

} // namespace

AngularGrid parse_grid(const std::string& name) {
  if (name == "sine" || name == "uniform_sine") return AngularGrid::uniform_sine;
  if (name == "degrees" || name == "uniform_degrees") return AngularGrid::uniform_degrees;
  throw std::invalid_argument("unknown angular grid '" + name + "' (expected 'sine' or 'degrees')");
}

std::string to_string(AngularGrid grid) {
  return grid == AngularGrid::uniform_sine ? "sine" : "degrees";
}

void DoaScenario::validate() const {
  if (sensors < 1) throw std::invalid_argument("doa: need at least one sensor");
  if (grid_size < 1) throw std::invalid_argument("doa: angular grid is empty");
  if (!(spacing > 0.0) || !(velocity > 0.0)) throw std::invalid_argument("doa: spacing and velocity must be > 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("doa: sigma must be >= 0");
  if (snapshots < 1) throw std::invalid_argument("doa: need at least one snapshot");
  if (freq_bins.empty()) throw std::invalid_argument("doa: no frequency bins");
  for (double f : freq_bins) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("doa: frequencies must be finite and >= 0");
  }
  for (double a : source_angles_deg) {
    if (!(a >= -90.0 && a < 90.0)) {
      throw std::invalid_argument("doa: source angle " + std::to_string(a) + " outside [-90, 90)");
    }
  }
}

std::vector<double> uniform_frequency_bins(double f_lo, double f_hi, std::size_t count) {
  if (count == 0 || !(f_hi > f_lo)) throw std::invalid_argument("frequency band must be non-empty");
  std::vector<double> f(count);
  const double width = (f_hi - f_lo) / static_cast<double>(count);
  for (std::size_t l = 0; l < count; ++l) f[l] = f_lo + (static_cast<double>(l) + 0.5) * width;
  return f;
}

DoaScenario reference_scenario() {
  DoaScenario s;
  s.sensors = 15;
  s.grid_size = 100;
  s.grid = AngularGrid::uniform_sine;
  s.spacing = 5.0;
  s.velocity = 3e8;
  s.freq_bins = uniform_frequency_bins(0.0, 5e9, 16);
  s.snapshots = 10;
  s.source_angles_deg = {-66.9, -61.64, -42.84, -41.3, -5.74, -2.3, 6.89, 8.05, 19.88, 42.84};
  s.sigma = 1.0;
  return s;
}

std::vector<double> grid_angles_deg(const DoaScenario& scenario) {
  const auto q = scenario.grid_size;
  std::vector<double> angles(q);
  for (std::size_t j = 0; j < q; ++j) {
    const double frac = static_cast<double>(j) / static_cast<double>(q);
    angles[j] = scenario.grid == AngularGrid::uniform_sine ? std::asin(-1.0 + 2.0 * frac) / kDeg
                                                           : -90.0 + 180.0 * frac;
  }
  return angles;
}

std::size_t nearest_grid_index(const DoaScenario& scenario, double angle_deg) {
  if (!(angle_deg >= -90.0 && angle_deg < 90.0)) {
    throw std::invalid_argument("doa: angle " + std::to_string(angle_deg) + " outside [-90, 90)");
  }
  const double q = static_cast<double>(scenario.grid_size);
  const double pos = scenario.grid == AngularGrid::uniform_sine ? (std::sin(angle_deg * kDeg) + 1.0) * q / 2.0
                                                                : (angle_deg + 90.0) * q / 180.0;
  const auto j = static_cast<long>(std::lround(pos));
  return static_cast<std::size_t>(std::clamp<long>(j, 0, static_cast<long>(scenario.grid_size) - 1));
}

Eigen::MatrixXcd steering_matrix(const DoaScenario& scenario, double freq) {
  const auto angles = grid_angles_deg(scenario);
  const auto m = static_cast<Eigen::Index>(scenario.sensors);
  const auto q = static_cast<Eigen::Index>(scenario.grid_size);
  Eigen::MatrixXcd A(m, q);
  const double base = -2.0 * std::numbers::pi * freq * scenario.spacing / scenario.velocity;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double s = std::sin(angles[static_cast<std::size_t>(j)] * kDeg);
    for (Eigen::Index p = 0; p < m; ++p) {
      A(p, j) = std::polar(1.0, base * static_cast<double>(p) * s);
    }
  }
  return A;
}

Observations synthesize(const DoaScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  Observations out;
  std::vector<std::size_t> rows;
  for (double a : scenario.source_angles_deg) rows.push_back(nearest_grid_index(scenario, a));
  out.source_indices = rows;
  std::sort(out.source_indices.begin(), out.source_indices.end());
  out.source_indices.erase(std::unique(out.source_indices.begin(), out.source_indices.end()),
                           out.source_indices.end());

  const auto m = static_cast<Eigen::Index>(scenario.sensors);
  const auto q = static_cast<Eigen::Index>(scenario.grid_size);
  const auto k = static_cast<Eigen::Index>(scenario.snapshots);
  const double amp_sd = std::sqrt(0.5);
  const double noise_sd = scenario.sigma * std::sqrt(0.5);

  out.bins.resize(scenario.freq_bins.size());
  for (std::size_t l = 0; l < scenario.freq_bins.size(); ++l) {
    auto rng = make_rng(seed, {l});
    std::normal_distribution<double> normal;
    auto& bin = out.bins[l];
    bin.freq = scenario.freq_bins[l];
    bin.X = Eigen::MatrixXcd::Zero(q, k);
    for (auto r : rows) {
      for (Eigen::Index t = 0; t < k; ++t) {
        const double re = amp_sd * normal(rng);
        const double im = amp_sd * normal(rng);
        bin.X(static_cast<Eigen::Index>(r), t) += std::complex<double>(re, im);
      }
    }
    Eigen::MatrixXcd E(m, k);
    for (Eigen::Index t = 0; t < k; ++t) {
      for (Eigen::Index p = 0; p < m; ++p) {
        const double re = noise_sd * normal(rng);
        const double im = noise_sd * normal(rng);
        E(p, t) = {re, im};
      }
    }
    bin.noise_norm = E.norm();
    bin.Y = steering_matrix(scenario, bin.freq) * bin.X + E;
  }
  return out;
}

std::vector<std::size_t> detect_peaks(std::span<const double> power, double rel_threshold) {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
    throw std::invalid_argument("detect_peaks: threshold must lie in (0, 1)");
  }
  std::vector<std::size_t> peaks;
  if (power.empty()) return peaks;
  const double top = *std::max_element(power.begin(), power.end());
  if (!(top > 0.0)) return peaks;
  const double floor = rel_threshold * top;
  for (std::size_t i = 0; i < power.size(); ++i) {
    if (power[i] <= floor) continue;
    const bool left = i == 0 || power[i] > power[i - 1];
    const bool right = i + 1 == power.size() || power[i] > power[i + 1];
    if (left && right) peaks.push_back(i);
  }
  return peaks;
}

SpectrumEstimate estimate(const DoaScenario& scenario, const PriorModel2& prior, const LambdaVector& lambda,
                          const Observations& observations, EtaRule eta_rule, double peak_threshold,
                          const SolverConfig& cfg) {
  scenario.validate();
  const auto rows = BlockPartition::uniform(scenario.grid_size, 1);
  const auto w = expand_lambda(rows, prior, lambda);
  const auto& bins = observations.bins;

  std::vector<std::vector<double>> per_bin(bins.size());
  std::vector<int> iterations(bins.size(), 0);
  std::vector<char> converged(bins.size(), 1);
  parallel_for(bins.size(), [&](std::size_t l) {
    const auto& bin = bins[l];
    const auto A = steering_matrix(scenario, bin.freq);
    const double eta = eta_rule == EtaRule::realized_noise
                           ? bin.noise_norm
                           : scenario.sigma * std::sqrt(2.0 * static_cast<double>(bin.Y.rows() * bin.Y.cols()));
    const auto res = solve_mmv<std::complex<double>>(rows, w, A, bin.Y, eta, cfg);
    per_bin[l].resize(scenario.grid_size);
    for (std::size_t j = 0; j < scenario.grid_size; ++j) {
      per_bin[l][j] = res.x_hat.row(static_cast<Eigen::Index>(j)).squaredNorm();
    }
    iterations[l] = res.iterations;
    converged[l] = res.converged ? 1 : 0;
  });

  SpectrumEstimate out;
  out.power.assign(scenario.grid_size, 0.0);
  for (std::size_t l = 0; l < bins.size(); ++l) {
    for (std::size_t j = 0; j < scenario.grid_size; ++j) out.power[j] += per_bin[l][j];
    out.total_iterations += iterations[l];
    out.all_converged = out.all_converged && converged[l];
  }
  out.peaks = detect_peaks(out.power, peak_threshold);
  return out;
}

PeakScore score_peaks(std::span<const std::size_t> peaks, std::span<const std::size_t> truth) {
  PeakScore s;
  for (auto p : peaks) {
    if (std::find(truth.begin(), truth.end(), p) != truth.end()) {
      ++s.detected;
    } else {
      ++s.spurious;
    }
  }
  s.missed = truth.size() - s.detected;
  return s;
}

} // namespace bspw::doa
