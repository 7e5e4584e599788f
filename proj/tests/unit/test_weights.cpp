#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bspw/weights.hpp"
#include "oracles.hpp"

using namespace bspw;

TEST(WeightScalar, ResidualIsTinyAndRootIsPositive) {
  for (int k : {1, 2, 5, 10, 40}) {
    for (double p : {0.01, 0.1, 0.3, 0.5, 0.8, 0.99}) {
      const double w = solve_weight_scalar(p, k);
      EXPECT_GT(w, 0.0);
      EXPECT_LE(std::abs(weight_equation_residual(p, k, w)), 1e-10) << "p=" << p << " k=" << k;
    }
  }
}

TEST(WeightScalar, KOneMatchesScalarClosedForm) {
  const double w = solve_weight_scalar(0.5, 1);
  const double ref = oracle::bisect([](double x) { return oracle::weight_residual_k1(0.5, x); }, 0.0, 5.0);
  EXPECT_NEAR(w, ref, 1e-10);
}

TEST(WeightScalar, GridScanOracle) {
  const auto scan = oracle::scan_root([](double w) { return oracle::weight_residual_boost(0.2, 5, w); }, 0.0, 10.0,
                                      1e-5);
  ASSERT_EQ(scan.sign_changes, 1);
  EXPECT_NEAR(solve_weight_scalar(0.2, 5), scan.root, 1e-9);
}

TEST(WeightScalar, UniqueRootOnWideGrid) {
  for (int k : {1, 3, 8}) {
    for (double p : {0.05, 0.4, 0.9}) {
      const double w = solve_weight_scalar(p, k);
      EXPECT_LT(weight_equation_residual(p, k, 0.0), 0.0);
      const auto scan = oracle::scan_root([&](double x) { return weight_equation_residual(p, k, x); }, 0.0,
                                          4.0 * w + 10.0, 1e-3);
      EXPECT_EQ(scan.sign_changes, 1) << "p=" << p << " k=" << k;
    }
  }
}

TEST(WeightScalar, TendsToZeroAsPToOne) {
  double prev = solve_weight_scalar(0.9, 4);
  for (double p : {0.99, 0.999, 0.9999, 1.0 - 1e-6}) {
    const double w = solve_weight_scalar(p, 4);
    EXPECT_LT(w, prev);
    prev = w;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(WeightScalar, DecreasingInPIncreasingInK) {
  for (int k : {1, 2, 5, 10}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 19; ++i) {
      const double w = solve_weight_scalar(i / 20.0, k);
      EXPECT_LT(w, prev);
      prev = w;
    }
  }
  for (int i = 1; i <= 19; ++i) {
    double prev = 0.0;
    for (int k = 1; k <= 30; ++k) {
      const double w = solve_weight_scalar(i / 20.0, k);
      EXPECT_GT(w, prev) << "p=" << i / 20.0 << " k=" << k;
      prev = w;
    }
  }
}

TEST(WeightScalar, RejectsInvalidInput) {
  EXPECT_THROW(solve_weight_scalar(0.0, 3), std::invalid_argument);
  EXPECT_THROW(solve_weight_scalar(1.0, 3), std::invalid_argument);
  EXPECT_THROW(solve_weight_scalar(0.5, 0), std::invalid_argument);
  WeightSolverConfig bad;
  bad.root_tol = 0.0;
  EXPECT_THROW(solve_weight_scalar(0.5, 2, bad), std::invalid_argument);
}

TEST(WeightScalar, BracketFailureIsReported) {
  WeightSolverConfig cfg;
  cfg.max_bracket_doublings = 1;
  EXPECT_THROW(solve_weight_scalar(1e-9, 1, cfg), RootFindingError);
}

TEST(Model1, UniformPriorGivesEqualWeights) {
  const auto part = BlockPartition::uniform(7, 3);
  const auto w = solve_model1(PriorModel1(std::vector<double>(7, 0.3)), part);
  for (double v : w.values()) EXPECT_EQ(v, w[0]);
}

TEST(Model1, LikelyBlocksGetSmallerWeights) {
  const auto part = BlockPartition::uniform(2, 3);
  const auto w = solve_model1(PriorModel1({0.9, 0.1}), part);
  EXPECT_LT(w[0], w[1]);
  EXPECT_DOUBLE_EQ(w[0], solve_weight_scalar(0.9, 3));
  EXPECT_DOUBLE_EQ(w[1], solve_weight_scalar(0.1, 3));
}

TEST(Model1, MixedBlockSizes) {
  const std::vector<std::size_t> sizes = {1, 4, 9};
  const auto part = validate_partition(14, sizes);
  const auto w = solve_model1(PriorModel1({0.4, 0.4, 0.4}), part);
  EXPECT_LT(w[0], w[1]);
  EXPECT_LT(w[1], w[2]);
  EXPECT_THROW(solve_model1(PriorModel1({0.4, 0.4}), part), std::invalid_argument);
}

TEST(Model1, LargeParallelBatchMatchesScalarSolves) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> p(600);
  for (auto& v : p) v = u(rng);
  const auto part = BlockPartition::uniform(600, 2);
  const auto w = solve_model1(PriorModel1(p), part);
  for (std::size_t b = 0; b < p.size(); b += 37) EXPECT_EQ(w[b], solve_weight_scalar(p[b], 2));
}

TEST(Model2, ReferenceAlphasAreOrderedAndCapped) {
  const PriorModel2 prior(100, {{4, 5, 6, 16, 17}, {45, 46, 48, 56, 57, 58, 67, 84, 85}}, {0.8, 2.0 / 3.0}, 0.0);
  const auto lambda = solve_model2(prior, 10);
  ASSERT_EQ(lambda.size(), 3u);
  EXPECT_LT(lambda[0], lambda[1]);
  EXPECT_LT(lambda[1], lambda[2]);
  EXPECT_DOUBLE_EQ(lambda[2], 10.0 * lambda[1]);
}

TEST(Model2, EqualAlphasEqualLambdasAndScalarReduction) {
  const PriorModel2 prior(6, {{0, 1}, {2, 3}, {4, 5}}, {0.3, 0.3, 0.5});
  const auto lambda = solve_model2(prior, 1);
  EXPECT_EQ(lambda[0], lambda[1]);
  EXPECT_EQ(lambda[2], solve_weight_scalar(0.5, 1));
}

TEST(Model2, AlphaOneUsesFloorAndAllZeroStillPositive) {
  WeightSolverConfig cfg;
  const PriorModel2 ones(2, {{0}, {1}}, {1.0, 0.5});
  const auto l1 = solve_model2(ones, 3, cfg);
  EXPECT_EQ(l1[0], cfg.lambda_min);
  const PriorModel2 zeros(2, {{0}, {1}}, {0.0, 0.0});
  const auto l0 = solve_model2(zeros, 3, cfg);
  EXPECT_GT(l0[0], 0.0);
  EXPECT_TRUE(std::isfinite(l0[0]));
  EXPECT_EQ(l0[0], l0[1]);
}

TEST(Heuristic, Arithmetic) {
  EXPECT_DOUBLE_EQ(heuristic_weights(PriorModel1({0.5}), 0.5)[0], 1.0);
  const auto w = heuristic_weights(PriorModel1({0.9, 0.1}), 0.1);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 5.0);
  const PriorModel2 prior(1, {{0}}, {0.0});
  EXPECT_DOUBLE_EQ(heuristic_lambdas(prior, 0.01)[0], 100.0);
  EXPECT_THROW(heuristic_weights(PriorModel1({0.5}), 0.0), std::invalid_argument);
}

TEST(Robustness, PositiveAndMatchesDirectFormula) {
  for (int k : {1, 5, 10}) {
    for (int i = 1; i <= 19; ++i) EXPECT_GT(robustness_constant(k, i / 20.0), 0.0);
  }
  // Direct evaluation with an independently scanned h(0.5) and a quadrature upper gamma.
  const auto scan =
      oracle::scan_root([](double w) { return oracle::weight_residual_k1(0.5, w); }, 0.0, 5.0, 1e-5);
  const double h = scan.root;
  const double G = std::tgamma(0.5);
  const double g = oracle::upper_gamma(0.5, 0.5 * h * h);
  const double num = std::sqrt(2.0) * h * (G - g) + 2.0 * g;
  const double ref = num * num / (2.0 * std::sqrt(2.0) * G * g);
  EXPECT_NEAR(robustness_constant(1, 0.5), ref, 1e-9 * ref);
}

TEST(Robustness, DivergesAsPToZero) {
  double prev = robustness_constant(5, 0.1);
  for (double p : {0.05, 0.01, 1e-3, 1e-4}) {
    const double c = robustness_constant(5, p);
    EXPECT_GT(c, prev) << p;
    prev = c;
  }
}

TEST(Robustness, LargeAndFiniteInTheBulk) {
  for (int k : {1, 5, 10}) {
    for (int i = 2; i <= 18; ++i) {
      const double c = robustness_constant(k, i / 20.0);
      EXPECT_TRUE(std::isfinite(c));
    }
  }
}
