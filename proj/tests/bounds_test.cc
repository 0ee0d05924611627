//
// Copyright 2026 The dpsda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpsda/bounds.hpp"

#include <cmath>
#include <limits>

#include "gtest/gtest.h"

namespace dpsda {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoundInputs ExampleInputs() {
  BoundInputs in;
  in.n = 2;
  in.B = 1;
  in.phi = 1.0;
  in.epsilon = 1.0;
  in.lhat = 1.0;
  in.L = 1.0;
  in.G = 1.0;
  in.D_chi = 10.0;
  in.C_psi = 1.0;
  return in;
}

PushSumConstants ExamplePushSum() {
  PushSumConstants c;
  c.gamma = 0.5;
  c.beta = 2.0;
  c.lambda = 0.75;
  c.one_minus_lambda = 0.25;
  return c;
}

TEST(ThetaTest, Examples) {
  EXPECT_DOUBLE_EQ(theta(1.0, 1), 0.75);
  EXPECT_NEAR(theta(0.25, 7), 0.998724, 5e-7);
  EXPECT_DOUBLE_EQ(theta(0.25, 7), 1.0 - 0.25 / 196.0);
  for (int n = 1; n < 50; ++n) {
    for (double phi : {1e-6, 0.1, 0.5, 1.0}) EXPECT_LT(theta(phi, n), 1.0);
  }
  EXPECT_THROW(theta(0.0, 3), std::invalid_argument);
  EXPECT_THROW(theta(1.5, 3), std::invalid_argument);
}

TEST(PushSumLambdaTest, Examples) {
  EXPECT_EQ(pushsum_lambda(1, 1).lambda, 0.0);
  EXPECT_EQ(pushsum_lambda(1, 1).one_minus_lambda, 1.0);
  EXPECT_DOUBLE_EQ(pushsum_lambda(2, 1).lambda, 0.75);
  EXPECT_DOUBLE_EQ(pushsum_lambda(2, 1).one_minus_lambda, 0.25);
  const PushSumConstants big = pushsum_lambda(7, 4);
  EXPECT_EQ(big.lambda, 1.0);
  // 1 − (1 − x)^{1/4} ≈ x/4 for x = 7^{−28}.
  EXPECT_NEAR(big.one_minus_lambda / (std::pow(7.0, -28.0) / 4.0), 1.0, 1e-12);
  EXPECT_EQ(big.beta, 2.0);
}

TEST(PushSumConstantsTest, GammaIsMinimumOfPushedMass) {
  // Cycle 0 -> 1 -> 2 -> 0, every column (1/2 self, 1/2 successor): A·1 = 1.
  const MixingMatrix cycle = pushsum_column_weights({{0, 1}, {1, 2}, {2, 0}}, 3);
  const std::vector<MixingMatrix> period = {cycle};
  EXPECT_DOUBLE_EQ(pushsum_constants(3, 1, period, 20).gamma, 1.0);
  // One edge 0 -> 1 on two nodes: A·1 = (1/2, 3/2), then (1/4, 7/4), ...
  const MixingMatrix one = pushsum_column_weights({{0, 1}}, 2);
  const std::vector<MixingMatrix> single = {one};
  const PushSumConstants c = pushsum_constants(2, 1, single, 3);
  EXPECT_DOUBLE_EQ(c.gamma, 0.125);
  EXPECT_EQ(c.gamma_horizon, 3);
  EXPECT_DOUBLE_EQ(c.lambda, 0.75);
}

TEST(ConsensusBoundTest, CirculationExample) {
  EXPECT_DOUBLE_EQ(consensus_bound_c(2, 1.0, 0.5, 1.0), 25392.0);
  EXPECT_DOUBLE_EQ(consensus_bound_c(2, 1.0, 0.5, kInf), 768.0 + 48.0);
}

TEST(ConsensusBoundTest, CirculationMonotonicity) {
  for (int n = 1; n < 10; ++n) {
    EXPECT_LT(consensus_bound_c(n, 1.0, 0.9, 1.0), consensus_bound_c(n + 1, 1.0, 0.9, 1.0));
    EXPECT_GT(consensus_bound_c(n, 1.0, 0.9, 0.5), consensus_bound_c(n, 1.0, 0.9, 1.0));
  }
}

TEST(ConsensusBoundTest, PushSumExample) {
  EXPECT_NEAR(consensus_bound_ps(2, ExamplePushSum(), 1.0, 1.0), 276707.5555555556,
              1e-6);
  EXPECT_NEAR(consensus_bound_ps(2, ExamplePushSum(), 1.0, kInf), 14563.555555555555,
              1e-7);
  EXPECT_GE(consensus_bound_ps(5, pushsum_lambda(5, 3), 0.0, 0.1), 0.0);
}

TEST(RegretConstantTest, PinnedCirculationValue) {
  // Evaluated independently in double precision from the closed-form terms.
  EXPECT_NEAR(regret_constant_c(ExampleInputs(), 0.5), 6893.653084525574, 1e-9);
}

TEST(RegretConstantTest, NonPrivateLimit) {
  BoundInputs in = ExampleInputs();
  in.epsilon = kInf;
  const double expected =
      4.0 + 1.0 + 2.0 * (1.0 + std::sqrt(2.0) * 10.0) * std::sqrt(2.0 * 816.0);
  EXPECT_NEAR(regret_constant_c(in, 0.5), expected, 1e-9);
}

TEST(RegretConstantTest, SqrtScaling) {
  const BoundReport r = compute_bounds(ExampleInputs(), BoundEngine::kCirculation, 100);
  for (double t : {1.0, 7.0, 500.0}) {
    EXPECT_DOUBLE_EQ(regret_bound(r.M, 4.0 * t), 2.0 * regret_bound(r.M, t));
    EXPECT_DOUBLE_EQ(running_average_regret_bound(r.M, t), 2.0 * regret_bound(r.M, t));
  }
  EXPECT_DOUBLE_EQ(r.regret_bound, r.M * 10.0);
}

TEST(ComputeBoundsTest, CirculationReport) {
  const BoundReport r = compute_bounds(ExampleInputs(), BoundEngine::kCirculation, 16);
  EXPECT_DOUBLE_EQ(r.theta, 0.9375);
  EXPECT_FALSE(r.pushsum.has_value());
  EXPECT_DOUBLE_EQ(r.consensus_bound, consensus_bound_c(2, 1.0, 0.9375, 1.0));
  EXPECT_FALSE(r.vacuous);
}

TEST(ComputeBoundsTest, PushSumReportAndVacuousFlag) {
  BoundInputs in = ExampleInputs();
  const BoundReport small =
      compute_bounds(in, BoundEngine::kPushSum, 16, ExamplePushSum());
  EXPECT_DOUBLE_EQ(small.consensus_bound, 276707.5555555556);
  EXPECT_NEAR(small.M,
              64.0 + 4.0 + 1.0 +
                  2.0 * (1.0 + std::sqrt(2.0) * 10.0) *
                      std::sqrt(2.0 * 276707.5555555556),
              1e-8);
  EXPECT_FALSE(small.vacuous);

  in.n = 7;
  in.B = 4;
  const BoundReport big = compute_bounds(in, BoundEngine::kPushSum, 500);
  EXPECT_TRUE(big.vacuous);
  EXPECT_GT(big.consensus_bound, kVacuousThreshold);
}

TEST(ComputeBoundsTest, RejectsInvalidInputs) {
  BoundInputs in = ExampleInputs();
  in.phi = 0.0;
  EXPECT_THROW(compute_bounds(in, BoundEngine::kCirculation, 1), std::invalid_argument);
  in = ExampleInputs();
  in.epsilon = 0.0;
  EXPECT_THROW(compute_bounds(in, BoundEngine::kCirculation, 1), std::invalid_argument);
  in = ExampleInputs();
  in.L = -1.0;
  EXPECT_THROW(compute_bounds(in, BoundEngine::kCirculation, 1), std::invalid_argument);
}

}  // namespace
}  // namespace dpsda
