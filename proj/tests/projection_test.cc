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

#include "dpsda/projection.hpp"

#include <limits>
#include <random>

#include "gtest/gtest.h"

namespace dpsda {
namespace {

using Eigen::Vector2d;
using Eigen::VectorXd;

VectorXd RandomVector(std::mt19937& gen, int d, double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  VectorXd v(d);
  for (int k = 0; k < d; ++k) v[k] = gauss(gen);
  return v;
}

TEST(PsiTest, Examples) {
  EXPECT_EQ(psi(VectorXd::Zero(4)), 0.0);
  EXPECT_DOUBLE_EQ(psi(Vector2d(3.0, 4.0)), 12.5);
}

TEST(PsiTest, BoundedByCpsiOnTheBox) {
  const ConstraintSet box = ConstraintSet::UniformBox(21, -5.0, 5.0);
  EXPECT_DOUBLE_EQ(box.psi_bound(), 262.5);
  EXPECT_DOUBLE_EQ(psi(VectorXd::Constant(21, 5.0)), box.psi_bound());
  std::mt19937 gen(3);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LE(psi(box.Project(RandomVector(gen, 21, 10.0))), box.psi_bound());
  }
}

TEST(ConstraintSetTest, Geometry) {
  const ConstraintSet ball = ConstraintSet::Ball(3, 2.0);
  EXPECT_DOUBLE_EQ(ball.diameter(), 4.0);
  EXPECT_DOUBLE_EQ(ball.psi_bound(), 2.0);
  const ConstraintSet blocks = ConstraintSet::BlockBalls({2, 2, 3}, 2.0);
  EXPECT_EQ(blocks.dimension(), 7);
  EXPECT_DOUBLE_EQ(blocks.diameter(), 4.0);
  EXPECT_DOUBLE_EQ(blocks.psi_bound(), 6.0);
  const ConstraintSet box = ConstraintSet::Box(Vector2d(-1.0, 0.0), Vector2d(3.0, 1.0));
  EXPECT_DOUBLE_EQ(box.diameter(), 4.0);
  EXPECT_DOUBLE_EQ(box.psi_bound(), 0.5 * (9.0 + 1.0));
}

TEST(ConstraintSetTest, RejectsDegenerate) {
  EXPECT_THROW(ConstraintSet::UniformBox(2, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ConstraintSet::Ball(2, 0.0), std::invalid_argument);
  EXPECT_THROW(ConstraintSet::BlockBalls({2, 0}, 1.0), std::invalid_argument);
  EXPECT_THROW(ConstraintSet::Box(VectorXd::Zero(2), VectorXd::Ones(3)),
               std::invalid_argument);
}

TEST(ProxProjectTest, Examples) {
  const ConstraintSet box = ConstraintSet::UniformBox(2, -5.0, 5.0);
  EXPECT_EQ(prox_project(VectorXd::Zero(2), 0.3, box), VectorXd::Zero(2));
  EXPECT_EQ(prox_project(Vector2d(10.0, -10.0), 1.0, box),
            VectorXd(Vector2d(-5.0, 5.0)));
  const VectorXd y =
      prox_project(Vector2d(3.0, 4.0), 2.0, ConstraintSet::Ball(2, 5.0));
  EXPECT_NEAR(y[0], -3.0, 1e-12);
  EXPECT_NEAR(y[1], -4.0, 1e-12);
  EXPECT_THROW(prox_project(VectorXd::Zero(2), 0.0, box), std::invalid_argument);
}

TEST(ProxProjectTest, BlockBallsProjectEachBlock) {
  const ConstraintSet set = ConstraintSet::BlockBalls({2, 1}, 1.0);
  const VectorXd y = set.Project(Eigen::Vector3d(3.0, 4.0, -0.5));
  EXPECT_NEAR(y[0], 0.6, 1e-15);
  EXPECT_NEAR(y[1], 0.8, 1e-15);
  EXPECT_EQ(y[2], -0.5);
}

TEST(ProxProjectTest, NonExpansiveAndFeasible) {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> alpha_dist(0.01, 3.0);
  const std::vector<ConstraintSet> sets = {
      ConstraintSet::UniformBox(6, -1.0, 2.0),
      ConstraintSet::Box(VectorXd::LinSpaced(6, -3.0, 0.0),
                         VectorXd::LinSpaced(6, 0.5, 4.0)),
      ConstraintSet::Ball(6, 1.5), ConstraintSet::BlockBalls({2, 2, 2}, 0.7)};
  for (int i = 0; i < 10000; ++i) {
    const ConstraintSet& set = sets[i % sets.size()];
    const VectorXd z1 = RandomVector(gen, 6, 3.0);
    const VectorXd z2 = RandomVector(gen, 6, 3.0);
    const double alpha = alpha_dist(gen);
    const VectorXd p1 = prox_project(z1, alpha, set);
    const VectorXd p2 = prox_project(z2, alpha, set);
    EXPECT_LE((p1 - p2).norm(), alpha * (z1 - z2).norm() + 1e-12);
    EXPECT_TRUE(set.Contains(p1, 1e-12));
  }
}

TEST(ProxProjectTest, MatchesGridSearchOnBox) {
  const ConstraintSet box = ConstraintSet::Box(Vector2d(-1.0, -2.0), Vector2d(2.0, 1.0));
  const int kSteps = 2001;
  std::mt19937 gen(23);
  for (int trial = 0; trial < 6; ++trial) {
    const VectorXd z = RandomVector(gen, 2, 2.0);
    const double alpha = 0.5 + trial * 0.3;
    const auto objective = [&](double x0, double x1) {
      return z[0] * x0 + z[1] * x1 + (0.5 * (x0 * x0 + x1 * x1)) / alpha;
    };
    double best = std::numeric_limits<double>::infinity();
    Vector2d arg;
    for (int i = 0; i < kSteps; ++i) {
      const double x0 = -1.0 + 3.0 * i / (kSteps - 1);
      for (int j = 0; j < kSteps; ++j) {
        const double x1 = -2.0 + 3.0 * j / (kSteps - 1);
        const double v = objective(x0, x1);
        if (v < best) {
          best = v;
          arg = {x0, x1};
        }
      }
    }
    EXPECT_LE((prox_project(z, alpha, box) - arg).cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(ProxProjectTest, ZeroIsFixedWhenFeasible) {
  for (const ConstraintSet& set :
       {ConstraintSet::UniformBox(3, -1.0, 1.0), ConstraintSet::Ball(3, 0.1)}) {
    EXPECT_EQ(prox_project(VectorXd::Zero(3), 4.0, set), VectorXd::Zero(3));
  }
}

TEST(StepAlphaTest, Examples) {
  EXPECT_EQ(step_alpha(0), 1.0);
  EXPECT_EQ(step_alpha(1), 1.0);
  EXPECT_DOUBLE_EQ(step_alpha(4), 0.5);
  EXPECT_DOUBLE_EQ(step_alpha(100), 0.1);
  EXPECT_THROW(step_alpha(-1), std::invalid_argument);
  for (int t = 1; t < 1000; ++t) {
    EXPECT_GT(step_alpha(t), 0.0);
    EXPECT_LE(step_alpha(t + 1), step_alpha(t));
  }
}

}  // namespace
}  // namespace dpsda
