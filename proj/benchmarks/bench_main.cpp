#include <benchmark/benchmark.h>

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "bspw/model.hpp"
#include "bspw/recovery.hpp"
#include "bspw/rng.hpp"
#include "bspw/specfun.hpp"
#include "bspw/statdim.hpp"
#include "bspw/weights.hpp"

namespace {

void BM_PhiB(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  double z = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bspw::specfun::phi_b(z, k));
    z = z > 6.0 ? 0.0 : z + 0.013;
  }
}
BENCHMARK(BM_PhiB)->Arg(1)->Arg(5)->Arg(20);

void BM_SolveWeightScalar(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  double p = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bspw::solve_weight_scalar(p, k));
    p = p > 0.98 ? 0.01 : p + 0.017;
  }
}
BENCHMARK(BM_SolveWeightScalar)->Arg(1)->Arg(5)->Arg(20);

void BM_ExpectedBoundModel1(benchmark::State& state) {
  const auto q = static_cast<std::size_t>(state.range(0));
  const auto part = bspw::BlockPartition::uniform(q, 5);
  std::vector<double> p(q);
  for (std::size_t b = 0; b < q; ++b) p[b] = 0.02 + 0.96 * static_cast<double>(b) / static_cast<double>(q);
  const bspw::PriorModel1 prior(p);
  const auto w = bspw::solve_model1(prior, part);
  for (auto _ : state) benchmark::DoNotOptimize(bspw::expected_bound_model1(part, prior, w).bound);
}
BENCHMARK(BM_ExpectedBoundModel1)->Arg(50)->Arg(500);

void BM_SolveWeighted(benchmark::State& state) {
  const auto q = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 5;
  const std::size_t n = q * k;
  const auto m = static_cast<Eigen::Index>(state.range(1));
  auto rng = bspw::make_rng(11, {q, static_cast<std::uint64_t>(m)});
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(m, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < 3 * k; ++i) x(static_cast<Eigen::Index>(i), 0) = g(rng);
  const auto part = bspw::BlockPartition::uniform(q, k);
  const auto w = bspw::WeightVector::uniform(q);
  const bspw::MeasurementSystem<double> sys{A, A * x, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(bspw::solve_weighted(part, w, sys).iterations);
}
BENCHMARK(BM_SolveWeighted)->Args({20, 40})->Args({50, 120})->Unit(benchmark::kMillisecond);

void BM_SolveMmvComplex(benchmark::State& state) {
  const Eigen::Index m = 15, q = 100, snaps = 10;
  auto rng = bspw::make_rng(12, {});
  std::normal_distribution<double> g;
  Eigen::MatrixXcd A(m, q);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = {g(rng), g(rng)};
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(q, snaps);
  for (Eigen::Index r : {4, 17, 56})
    for (Eigen::Index c = 0; c < snaps; ++c) X(r, c) = {g(rng), g(rng)};
  const auto part = bspw::BlockPartition::uniform(static_cast<std::size_t>(q), 1);
  const auto w = bspw::WeightVector::uniform(static_cast<std::size_t>(q));
  const Eigen::MatrixXcd Y = A * X;
  for (auto _ : state) benchmark::DoNotOptimize(bspw::solve_mmv(part, w, A, Y, 0.0).iterations);
}
BENCHMARK(BM_SolveMmvComplex)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
