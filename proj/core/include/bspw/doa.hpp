#pragma once

// Broadband direction-of-arrival estimation on a uniform linear array.
//
// Per frequency bin f, snapshots Y(f) = A(f) X(f) + E(f) with A(f) the m x q
// steering matrix over an angular grid. Sources are time invariant, so X(f)
// is row sparse with the same support in every snapshot and the estimate is a
// joint-sparse recovery per bin. The angular spectrum sums squared row norms
// of the recovered X(f) over bins.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bspw/model.hpp"
#include "bspw/recovery.hpp"

namespace bspw::doa {

enum class AngularGrid {
  /// sin(theta_j) = -1 + 2 j / q, j = 0..q-1 (uniform spatial frequency)
  uniform_sine,
  /// theta_j = -90 + 180 j / q degrees
  uniform_degrees,
};

AngularGrid parse_grid(const std::string& name);
std::string to_string(AngularGrid grid);

struct DoaScenario {
  std::size_t sensors = 15;
  std::size_t grid_size = 100;
  AngularGrid grid = AngularGrid::uniform_sine;
  double spacing = 5.0;      // meters
  double velocity = 3e8;     // m/s
  std::vector<double> freq_bins;  // Hz
  std::size_t snapshots = 10;
  std::vector<double> source_angles_deg;
  double sigma = 1.0;

  void validate() const;
};

/// Midpoints of `count` equal sub-bands of [f_lo, f_hi].
std::vector<double> uniform_frequency_bins(double f_lo, double f_hi, std::size_t count);

/// Ten-source, 15-sensor broadband reference scenario over a 0-5 GHz band.
DoaScenario reference_scenario();

std::vector<double> grid_angles_deg(const DoaScenario& scenario);
std::size_t nearest_grid_index(const DoaScenario& scenario, double angle_deg);

/// Column j: exp(-i 2 pi f (p-1) d sin(theta_j) / c) for sensors p = 1..m.
Eigen::MatrixXcd steering_matrix(const DoaScenario& scenario, double freq);

struct BinObservation {
  double freq = 0.0;
  Eigen::MatrixXcd Y;  // m x k
  Eigen::MatrixXcd X;  // q x k ground truth
  double noise_norm = 0.0;  // ||E||_F
};

struct Observations {
  std::vector<BinObservation> bins;
  /// Sorted, de-duplicated grid indices of the planted sources.
  std::vector<std::size_t> source_indices;
};

/// Draws per-bin ground truth and noisy snapshots. Source amplitudes are
/// i.i.d. CN(0, 1) per (source, snapshot, bin); noise entries are CN(0, sigma^2).
Observations synthesize(const DoaScenario& scenario, std::uint64_t seed);

enum class EtaRule {
  /// eta = ||E(f)||_F of the synthesized noise
  realized_noise,
  /// eta = sigma sqrt(2 m k)
  sigma_bound,
};

struct SpectrumEstimate {
  std::vector<double> power;  // per grid angle
  std::vector<std::size_t> peaks;
  int total_iterations = 0;
  bool all_converged = true;
};

/// Local maxima (strictly above their neighbours) whose power exceeds
/// rel_threshold * max power. Empty for an all-zero spectrum.
std::vector<std::size_t> detect_peaks(std::span<const double> power, double rel_threshold);

/// Per-bin weighted joint-sparse recovery with w = D lambda, spectrum
/// aggregation and peak detection.
SpectrumEstimate estimate(const DoaScenario& scenario, const PriorModel2& prior, const LambdaVector& lambda,
                          const Observations& observations, EtaRule eta_rule, double peak_threshold = 0.1,
                          const SolverConfig& cfg = {});

struct PeakScore {
  std::size_t detected = 0;  // true sources found
  std::size_t spurious = 0;  // peaks not at a source
  std::size_t missed = 0;
};

PeakScore score_peaks(std::span<const std::size_t> peaks, std::span<const std::size_t> truth);

} // namespace bspw::doa
