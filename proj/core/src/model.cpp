#include "bspw/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bspw {

namespace {

constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

void require_positive_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw std::invalid_argument(std::string(what) + "[" + std::to_string(i) +
                                  "] must be positive and finite, got " + std::to_string(v[i]));
    }
  }
}

} // namespace

BlockPartition BlockPartition::contiguous(std::size_t n, std::span<const std::size_t> sizes) {
  if (n == 0) throw std::invalid_argument("partition: n must be at least 1");
  if (sizes.empty()) throw std::invalid_argument("partition: at least one block is required");
  std::size_t total = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (sizes[b] == 0) {
      throw std::invalid_argument("partition: block " + std::to_string(b) + " has size 0");
    }
    total += sizes[b];
  }
  if (total != n) {
    throw std::invalid_argument("partition: block sizes sum to " + std::to_string(total) +
                                ", expected n = " + std::to_string(n));
  }
  BlockPartition out;
  out.blocks_.reserve(sizes.size());
  out.block_of_.resize(n);
  std::size_t next = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    std::vector<std::size_t> idx(sizes[b]);
    std::iota(idx.begin(), idx.end(), next);
    for (auto i : idx) out.block_of_[i] = b;
    next += sizes[b];
    out.blocks_.push_back(std::move(idx));
  }
  return out;
}

BlockPartition BlockPartition::uniform(std::size_t num_blocks, std::size_t block_size) {
  std::vector<std::size_t> sizes(num_blocks, block_size);
  return contiguous(num_blocks * block_size, sizes);
}

BlockPartition BlockPartition::from_index_sets(std::size_t n,
                                               std::vector<std::vector<std::size_t>> blocks) {
  if (n == 0) throw std::invalid_argument("partition: n must be at least 1");
  if (blocks.empty()) throw std::invalid_argument("partition: at least one block is required");
  BlockPartition out;
  out.block_of_.assign(n, kUnassigned);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) {
      throw std::invalid_argument("partition: block " + std::to_string(b) + " is empty");
    }
    for (auto i : blocks[b]) {
      if (i >= n) {
        throw std::invalid_argument("partition: index " + std::to_string(i) + " out of range");
      }
      if (out.block_of_[i] != kUnassigned) {
        throw std::invalid_argument("partition: index " + std::to_string(i) +
                                    " belongs to more than one block");
      }
      out.block_of_[i] = b;
    }
  }
  auto hole = std::find(out.block_of_.begin(), out.block_of_.end(), kUnassigned);
  if (hole != out.block_of_.end()) {
    throw std::invalid_argument("partition: index " +
                                std::to_string(hole - out.block_of_.begin()) +
                                " is not covered by any block");
  }
  out.blocks_ = std::move(blocks);
  return out;
}

std::vector<std::size_t> BlockPartition::sizes() const {
  std::vector<std::size_t> s(blocks_.size());
  std::transform(blocks_.begin(), blocks_.end(), s.begin(), [](const auto& v) { return v.size(); });
  return s;
}

std::optional<std::size_t> BlockPartition::common_block_size() const {
  const auto k = blocks_.front().size();
  for (const auto& blk : blocks_) {
    if (blk.size() != k) return std::nullopt;
  }
  return k;
}

BlockPartition BlockPartition::real_embedding() const {
  std::vector<std::vector<std::size_t>> doubled;
  doubled.reserve(blocks_.size());
  for (const auto& blk : blocks_) {
    std::vector<std::size_t> idx;
    idx.reserve(2 * blk.size());
    for (auto i : blk) {
      idx.push_back(2 * i);
      idx.push_back(2 * i + 1);
    }
    doubled.push_back(std::move(idx));
  }
  return from_index_sets(2 * dim(), std::move(doubled));
}

PriorModel1::PriorModel1(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("prior: probability vector is empty");
  for (std::size_t b = 0; b < p_.size(); ++b) {
    if (!(p_[b] > 0.0 && p_[b] < 1.0)) {
      throw std::invalid_argument(
          "prior: p[" + std::to_string(b) + "] = " + std::to_string(p_[b]) +
          " must lie strictly inside (0, 1); clamp endpoints with PriorModel1::clamped");
    }
  }
}

PriorModel1 PriorModel1::clamped(std::vector<double> p, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("prior: clamp eps must be in (0, 0.5)");
  for (auto& v : p) {
    if (std::isnan(v)) throw std::invalid_argument("prior: NaN probability");
    v = std::clamp(v, eps, 1.0 - eps);
  }
  return PriorModel1(std::move(p));
}

PriorModel2::PriorModel2(std::size_t num_blocks, std::vector<std::vector<std::size_t>> sets,
                         std::vector<double> alphas, std::optional<double> complement_alpha)
    : sets_(std::move(sets)), alphas_(std::move(alphas)), set_of_(num_blocks, kUnassigned) {
  if (num_blocks == 0) throw std::invalid_argument("prior2: number of blocks must be positive");
  if (sets_.size() != alphas_.size()) {
    throw std::invalid_argument("prior2: " + std::to_string(sets_.size()) + " sets but " +
                                std::to_string(alphas_.size()) + " alphas");
  }
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    if (sets_[i].empty()) throw std::invalid_argument("prior2: set " + std::to_string(i) + " is empty");
    for (auto b : sets_[i]) {
      if (b >= num_blocks) {
        throw std::invalid_argument("prior2: block index " + std::to_string(b) + " out of range");
      }
      if (set_of_[b] != kUnassigned) {
        throw std::invalid_argument("prior2: block " + std::to_string(b) +
                                    " appears in more than one set");
      }
      set_of_[b] = i;
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    if (set_of_[b] == kUnassigned) rest.push_back(b);
  }
  if (!rest.empty()) {
    if (!complement_alpha) {
      throw std::invalid_argument("prior2: sets leave " + std::to_string(rest.size()) +
                                  " blocks uncovered and no complement alpha was supplied");
    }
    for (auto b : rest) set_of_[b] = sets_.size();
    sets_.push_back(std::move(rest));
    alphas_.push_back(*complement_alpha);
    implicit_complement_ = true;
  }
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (!(alphas_[i] >= 0.0 && alphas_[i] <= 1.0)) {
      throw std::invalid_argument("prior2: alpha[" + std::to_string(i) + "] = " +
                                  std::to_string(alphas_[i]) + " must lie in [0, 1]");
    }
  }
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw std::invalid_argument("weights: empty weight vector");
  require_positive_finite(w_, "w");
}

WeightVector WeightVector::uniform(std::size_t q, double value) {
  return WeightVector(std::vector<double>(q, value));
}

WeightVector WeightVector::scaled(double c) const {
  std::vector<double> out(w_);
  for (auto& v : out) v *= c;
  return WeightVector(std::move(out));
}

LambdaVector::LambdaVector(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  if (lambda_.empty()) throw std::invalid_argument("lambda: empty vector");
  require_positive_finite(lambda_, "lambda");
}

BlockPartition validate_partition(std::size_t n, std::span<const std::size_t> block_sizes) {
  return BlockPartition::contiguous(n, block_sizes);
}

WeightVector expand_lambda(const BlockPartition& partition, const PriorModel2& prior,
                           const LambdaVector& lambda) {
  if (prior.num_blocks() != partition.num_blocks()) {
    throw std::invalid_argument("expand_lambda: prior covers " + std::to_string(prior.num_blocks()) +
                                " blocks, partition has " +
                                std::to_string(partition.num_blocks()));
  }
  if (lambda.size() != prior.num_sets()) {
    throw std::invalid_argument("expand_lambda: lambda has " + std::to_string(lambda.size()) +
                                " entries for " + std::to_string(prior.num_sets()) + " sets");
  }
  std::vector<double> w(partition.num_blocks());
  for (std::size_t b = 0; b < w.size(); ++b) w[b] = lambda[prior.set_of(b)];
  return WeightVector(std::move(w));
}

} // namespace bspw
