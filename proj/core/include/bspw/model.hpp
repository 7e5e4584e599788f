#pragma once

// Block structure, prior information and weight vectors shared by every
// other part of the library. All indices are zero-based.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bspw {

/// Disjoint blocks V_0..V_{q-1} covering the coordinates {0..n-1}.
///
/// Blocks are explicit index sets, so non-contiguous layouts (for example
/// interleaved real/imaginary parts, or matrix rows) are representable.
class BlockPartition {
public:
  /// Consecutive blocks of the given sizes. Throws std::invalid_argument if a
  /// size is zero or the sizes do not sum to n.
  static BlockPartition contiguous(std::size_t n, std::span<const std::size_t> sizes);

  /// q blocks of equal size k (n = q * k).
  static BlockPartition uniform(std::size_t num_blocks, std::size_t block_size);

  /// Arbitrary disjoint index sets whose union must be exactly {0..n-1}.
  static BlockPartition from_index_sets(std::size_t n, std::vector<std::vector<std::size_t>> blocks);

  std::size_t dim() const noexcept { return block_of_.size(); }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  std::span<const std::size_t> block(std::size_t b) const { return blocks_.at(b); }
  std::size_t block_size(std::size_t b) const { return blocks_.at(b).size(); }
  std::size_t block_of(std::size_t index) const { return block_of_.at(index); }
  std::vector<std::size_t> sizes() const;

  /// Common block size, or nullopt when sizes differ.
  std::optional<std::size_t> common_block_size() const;

  /// Partition of the 2n-dimensional real embedding of a complex vector:
  /// coordinate i maps to real coordinates 2i and 2i+1, so every block doubles.
  BlockPartition real_embedding() const;

private:
  BlockPartition() = default;
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<std::size_t> block_of_;
};

/// Model 1 prior: marginal probability p_b that block b is active.
class PriorModel1 {
public:
  /// Requires 0 < p_b < 1 for all b; exact 0 or 1 is rejected (see clamped()).
  explicit PriorModel1(std::vector<double> p);

  /// Clamps every entry into [eps, 1 - eps] before validating.
  static PriorModel1 clamped(std::vector<double> p, double eps = kDefaultClamp);

  static constexpr double kDefaultClamp = 1e-6;

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t b) const { return p_[b]; }
  std::span<const double> values() const noexcept { return p_; }

private:
  std::vector<double> p_;
};

/// Model 2 prior: L disjoint sets of block indices with expected accuracies.
class PriorModel2 {
public:
  /// `sets` must be pairwise disjoint subsets of {0..q-1}. If they do not cover
  /// every block, a complement set is appended and `complement_alpha` must be
  /// given for it. Every alpha must lie in [0, 1].
  PriorModel2(std::size_t num_blocks, std::vector<std::vector<std::size_t>> sets,
              std::vector<double> alphas, std::optional<double> complement_alpha = std::nullopt);

  std::size_t num_blocks() const noexcept { return set_of_.size(); }
  std::size_t num_sets() const noexcept { return sets_.size(); }
  std::span<const std::size_t> set(std::size_t i) const { return sets_.at(i); }
  double alpha(std::size_t i) const { return alphas_.at(i); }
  std::span<const double> alphas() const noexcept { return alphas_; }
  /// Index of the set containing block b.
  std::size_t set_of(std::size_t b) const { return set_of_.at(b); }
  /// True when the last set was added as the implicit complement.
  bool has_implicit_complement() const noexcept { return implicit_complement_; }

private:
  std::vector<std::vector<std::size_t>> sets_;
  std::vector<double> alphas_;
  std::vector<std::size_t> set_of_;
  bool implicit_complement_ = false;
};

/// Strictly positive per-block weights w_b.
class WeightVector {
public:
  explicit WeightVector(std::vector<double> w);
  static WeightVector uniform(std::size_t q, double value = 1.0);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t b) const { return w_[b]; }
  std::span<const double> values() const noexcept { return w_; }
  WeightVector scaled(double c) const;

private:
  std::vector<double> w_;
};

/// Strictly positive per-set weights lambda_i of Model 2.
class LambdaVector {
public:
  explicit LambdaVector(std::vector<double> lambda);

  std::size_t size() const noexcept { return lambda_.size(); }
  double operator[](std::size_t i) const { return lambda_[i]; }
  std::span<const double> values() const noexcept { return lambda_; }

private:
  std::vector<double> lambda_;
};

/// Contiguous-block partition from a list of block sizes (validated).
BlockPartition validate_partition(std::size_t n, std::span<const std::size_t> block_sizes);

/// w = D * lambda: every block takes the weight of the set that contains it.
WeightVector expand_lambda(const BlockPartition& partition, const PriorModel2& prior,
                           const LambdaVector& lambda);

} // namespace bspw
