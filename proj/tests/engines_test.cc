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

#include "dpsda/engines.hpp"

#include <random>
#include <vector>

#include "dpsda/streams.hpp"
#include "gtest/gtest.h"

namespace dpsda {
namespace {

using Eigen::VectorXd;

SimulationConfig BaseConfig(TopologySchedule schedule, int d,
                            std::optional<double> epsilon, double grad_var,
                            ConstraintSet set) {
  SimulationConfig c;
  c.engine = schedule.directed() ? EngineKind::kPushSum : EngineKind::kCirculation;
  c.weighting = schedule.directed() ? Weighting::kPushSum : Weighting::kUniform;
  c.partition = BlockPartition::Equal(d, schedule.n());
  c.schedule = std::move(schedule);
  c.set = std::move(set);
  c.privacy.epsilon = epsilon;
  c.gradient_noise.variance = grad_var;
  c.key = RngKey{42, 0};
  c.record_history = true;
  return c;
}

// Per-round connected undirected graphs: a random spanning tree plus extras.
TopologySchedule RandomUndirected(std::mt19937& gen, int n, int period) {
  std::vector<EdgeList> rounds(period);
  std::bernoulli_distribution extra(0.3);
  for (EdgeList& edges : rounds) {
    for (int i = 1; i < n; ++i) {
      std::uniform_int_distribution<int> parent(0, i - 1);
      edges.push_back({parent(gen), i});
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (extra(gen)) edges.push_back({i, j});
      }
    }
  }
  return TopologySchedule(n, 1, false, rounds);
}

// Directed ring in every round plus random extra links.
TopologySchedule RandomDirected(std::mt19937& gen, int n, int period) {
  std::vector<EdgeList> rounds(period);
  std::bernoulli_distribution extra(0.3);
  for (EdgeList& edges : rounds) {
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && extra(gen)) edges.push_back({i, j});
      }
    }
  }
  return TopologySchedule(n, 1, true, rounds);
}

TEST(BlockPartitionTest, EqualGivesRemainderToLastNode) {
  const BlockPartition p = BlockPartition::Equal(23, 7);
  EXPECT_EQ(p.dimension(), 23);
  EXPECT_EQ(p.block(0).size, 3);
  EXPECT_EQ(p.block(6).begin, 18);
  EXPECT_EQ(p.block(6).size, 5);
  EXPECT_EQ(p.owner(22), 6);
  EXPECT_EQ(p.owner(3), 1);
  EXPECT_THROW(BlockPartition::Equal(3, 4), std::invalid_argument);
  EXPECT_THROW(BlockPartition({{0, 2}, {3, 1}}), std::invalid_argument);
}

TEST(CirculationRoundTest, ConsensusFixedPoint) {
  const BlockPartition p = BlockPartition::Equal(4, 2);
  const ConstraintSet set = ConstraintSet::UniformBox(4, -1.0, 1.0);
  std::vector<NodeState> states = initial_states(p, set);
  for (NodeState& s : states) s.z = Eigen::Vector4d(0.1, -0.2, 0.3, 0.0);
  const RoundSignals zero{{VectorXd::Zero(4), VectorXd::Zero(4)},
                          {VectorXd::Zero(2), VectorXd::Zero(2)}};
  apply_dpsda_c(states, uniform_row_weights({{0, 1}}, 2), zero, p, set, 0.5);
  for (const NodeState& s : states) {
    EXPECT_EQ(s.z, VectorXd(Eigen::Vector4d(0.1, -0.2, 0.3, 0.0)));
  }
}

TEST(CirculationRoundTest, RejectsWrongMatrixKind) {
  const BlockPartition p = BlockPartition::Equal(2, 2);
  const ConstraintSet set = ConstraintSet::UniformBox(2, -1.0, 1.0);
  std::vector<NodeState> states = initial_states(p, set);
  const RoundSignals zero{{VectorXd::Zero(2), VectorXd::Zero(2)},
                          {VectorXd::Zero(1), VectorXd::Zero(1)}};
  EXPECT_THROW(apply_dpsda_c(states, pushsum_column_weights({{0, 1}}, 2), zero, p,
                             set, 1.0),
               std::invalid_argument);
  EXPECT_THROW(apply_dpsda_ps(states, uniform_row_weights({{0, 1}}, 2), zero, p,
                              set, 1.0),
               std::invalid_argument);
}

TEST(CirculationRoundTest, SingleNodeIsCentralizedNoisyDualAveraging) {
  const OlrStream s = synth_olr_stream(RngKey{3, 0}, 3, 30);
  const SimulationConfig c =
      BaseConfig(TopologySchedule(1, 1, false, {{}}), 3, 0.5, 0.1,
                 ConstraintSet::UniformBox(3, -5.0, 5.0));
  const SimulationResult r = run_simulation(c, s.events);
  VectorXd z = VectorXd::Zero(3);
  for (int t = 0; t < 30; ++t) {
    z += r.history[t].eta[0] + r.history[t].u[0];
    const VectorXd expected = t + 1 < 30 ? r.decisions[t + 1] : r.final_decision;
    EXPECT_LE((c.set.Project(-step_alpha(t) * z) - expected).cwiseAbs().maxCoeff(),
              1e-12);
  }
  EXPECT_LE((r.final_states[0].z - z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CirculationRoundTest, NonPrivateSingleNodeUsesExactGradients) {
  const OlrStream s = synth_olr_stream(RngKey{3, 1}, 2, 20);
  const SimulationConfig c =
      BaseConfig(TopologySchedule(1, 1, false, {{}}), 2, std::nullopt, 0.0,
                 ConstraintSet::UniformBox(2, -5.0, 5.0));
  const SimulationResult r = run_simulation(c, s.events);
  VectorXd z = VectorXd::Zero(2);
  VectorXd x = c.set.Project(VectorXd::Zero(2));
  for (int t = 0; t < 20; ++t) {
    EXPECT_EQ(r.decisions[t], x);
    z += loss_grad(s.events[t], x);
    x = c.set.Project(-step_alpha(t) * z);
  }
  EXPECT_LE((r.final_decision - x).cwiseAbs().maxCoeff(), 1e-14);
}

// Independent unroll of the two-node updates with the recorded noise and
// hand-computed least-squares gradients.
TEST(CirculationRoundTest, TwoNodePathMatchesHandUnroll) {
  const OlrStream s = synth_olr_stream(RngKey{9, 0}, 2, 3);
  const SimulationConfig c =
      BaseConfig(TopologySchedule(2, 1, false, {{{0, 1}}}), 2, 1.0, 0.0,
                 ConstraintSet::UniformBox(2, -1.0, 1.0));
  const SimulationResult r = run_simulation(c, s.events);
  // Uniform weights on the path: every entry 1/2.
  VectorXd z[2] = {VectorXd::Zero(2), VectorXd::Zero(2)};
  VectorXd y[2] = {VectorXd::Zero(2), VectorXd::Zero(2)};
  for (int t = 0; t < 3; ++t) {
    const auto a = s.events[t].sample(0);
    const double b = s.events[t].labels[0];
    double u[2];
    for (int i = 0; i < 2; ++i) u[i] = -2.0 * (b - a.dot(y[i])) * a[i];
    EXPECT_NEAR(r.history[t].u[0][0], u[0], 1e-14);
    EXPECT_NEAR(r.history[t].u[1][0], u[1], 1e-14);
    VectorXd h[2];
    for (int i = 0; i < 2; ++i) h[i] = z[i] + r.history[t].eta[i];
    for (int i = 0; i < 2; ++i) {
      z[i] = h[i] + 0.5 * (h[1 - i] - h[i]);
      z[i][i] += 2.0 * u[i];
      y[i] = (-step_alpha(t) * z[i]).cwiseMax(-1.0).cwiseMin(1.0);
    }
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE((r.final_states[i].z - z[i]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((r.final_states[i].y - y[i]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.final_decision[i], y[i][i], 1e-12);
  }
}

TEST(PushSumRoundTest, TwoNodeSingleEdgeMatchesHandUnroll) {
  const OlrStream s = synth_olr_stream(RngKey{9, 1}, 2, 3);
  // 0 -> 1 then 1 -> 0 keeps the window strongly connected with B = 2.
  const SimulationConfig c =
      BaseConfig(TopologySchedule(2, 2, true, {{{0, 1}}, {{1, 0}}}), 2, 0.5, 0.0,
                 ConstraintSet::UniformBox(2, -1.0, 1.0));
  const SimulationResult r = run_simulation(c, s.events);
  VectorXd z[2] = {VectorXd::Zero(2), VectorXd::Zero(2)};
  VectorXd y[2] = {VectorXd::Zero(2), VectorXd::Zero(2)};
  double w[2] = {1.0, 1.0};
  for (int t = 0; t < 3; ++t) {
    const auto a = s.events[t].sample(0);
    const double b = s.events[t].labels[0];
    double u[2];
    for (int i = 0; i < 2; ++i) u[i] = -2.0 * (b - a.dot(y[i])) * a[i];
    VectorXd h[2];
    for (int i = 0; i < 2; ++i) h[i] = z[i] + r.history[t].eta[i];
    // Sender keeps half of its mass and gives half to the receiver.
    const int from = t % 2 == 0 ? 0 : 1;
    const int to = 1 - from;
    z[from] = 0.5 * h[from];
    z[to] = h[to] + 0.5 * h[from];
    const double w_from = 0.5 * w[from];
    w[to] = w[to] + 0.5 * w[from];
    w[from] = w_from;
    for (int i = 0; i < 2; ++i) {
      z[i][i] += 2.0 * u[i];
      y[i] = (-step_alpha(t) * z[i] / w[i]).cwiseMax(-1.0).cwiseMin(1.0);
    }
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE((r.final_states[i].z - z[i]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.final_states[i].w, w[i], 1e-15);
    EXPECT_LE((r.final_states[i].y - y[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PushSumRoundTest, IsolatedNodesRunIndependently) {
  const int n = 3;
  const OlrStream s = synth_olr_stream(RngKey{2, 0}, 6, 25);
  std::vector<NodeState> states =
      initial_states(BlockPartition::Equal(6, n), ConstraintSet::UniformBox(6, -5, 5));
  const BlockPartition p = BlockPartition::Equal(6, n);
  const ConstraintSet set = ConstraintSet::UniformBox(6, -5.0, 5.0);
  const RoundContext ctx{&p, &set, 0.0, {0.0}, RngKey{1, 0}};
  const MixingMatrix identity = pushsum_column_weights({}, n);
  std::vector<VectorXd> own(n, VectorXd::Zero(2));
  for (int t = 0; t < 25; ++t) {
    const RoundSignals sig = dpsda_ps_round(states, identity, s.events[t], ctx, t);
    for (int i = 0; i < n; ++i) own[i] += n * sig.u[i];
  }
  for (int i = 0; i < n; ++i) {
    EXPECT_EQ(states[i].w, 1.0);
    VectorXd expected = VectorXd::Zero(6);
    expected.segment(2 * i, 2) = own[i];
    EXPECT_LE((states[i].z - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PushSumRoundTest, MassIsConserved) {
  const OlrStream s = synth_olr_stream(RngKey{5, 0}, 21, 1000);
  const SimulationConfig c = BaseConfig(default_directed_schedule(), 21, 1.0, 0.1,
                                        ConstraintSet::UniformBox(21, -5.0, 5.0));
  const SimulationResult r = run_simulation(c, s.events);
  for (double sum : r.weight_sum) EXPECT_LE(std::abs(sum - 7.0), 1e-12);
  for (const NodeState& st : r.final_states) EXPECT_GT(st.w, 0.0);
}

TEST(ClosedFormTest, ZeroAtStart) {
  const std::vector<MixingMatrix> ms;
  const std::vector<RoundSignals> hist;
  const BlockPartition p = BlockPartition::Equal(4, 2);
  EXPECT_EQ(closed_form_dual_c(ms, hist, p, 1, 3, 0), 0.0);
  EXPECT_EQ(closed_form_dual_ps(ms, hist, p, 0, 0, 0), 0.0);
  EXPECT_THROW(closed_form_dual_c(ms, hist, p, 0, 0, 1), std::out_of_range);
}

TEST(ClosedFormTest, OneStepWithIdentityMixing) {
  const BlockPartition p = BlockPartition::Equal(2, 2);
  const ConstraintSet set = ConstraintSet::UniformBox(2, -5.0, 5.0);
  const RoundSignals sig{{Eigen::Vector2d(0.3, -0.1), Eigen::Vector2d(0.7, 0.2)},
                         {VectorXd::Constant(1, 1.5), VectorXd::Constant(1, -0.5)}};
  std::vector<NodeState> states = initial_states(p, set);
  const MixingMatrix w = uniform_row_weights({}, 2);
  apply_dpsda_c(states, w, sig, p, set, 1.0);
  const std::vector<MixingMatrix> ms = {w};
  const std::vector<RoundSignals> hist = {sig};
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      const double expected = (i == k ? 2.0 * sig.u[i][0] : 0.0) + sig.eta[i][k];
      EXPECT_NEAR(closed_form_dual_c(ms, hist, p, i, k, 1), expected, 1e-15);
      EXPECT_NEAR(states[i].z[k], expected, 1e-15);
    }
  }
}

TEST(ClosedFormTest, CompleteDigraphTwoSteps) {
  const int n = 3;
  EdgeList all;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) all.push_back({i, j});
    }
  }
  const OlrStream s = synth_olr_stream(RngKey{6, 0}, 3, 2);
  const SimulationConfig c = BaseConfig(TopologySchedule(n, 1, true, {all}), 3, 1.0,
                                        0.1, ConstraintSet::UniformBox(3, -5, 5));
  const SimulationResult r = run_simulation(c, s.events);
  // Every entry of A is 1/3, so after two steps z_i^k is the same for all i.
  for (int k = 0; k < 3; ++k) {
    double mean_eta0 = 0.0, mean_eta1 = 0.0;
    for (int j = 0; j < n; ++j) {
      mean_eta0 += r.history[0].eta[j][k] / n;
      mean_eta1 += r.history[1].eta[j][k] / n;
    }
    const double u0 = r.history[0].u[k][0], u1 = r.history[1].u[k][0];
    for (int i = 0; i < n; ++i) {
      // z(1) = n u(0) δ + A η(0);  z(2) = n u(1) δ + A (z(1) + η(1)).
      const double expected = (i == k ? n * u1 : 0.0) + u0 + mean_eta0 + mean_eta1;
      EXPECT_NEAR(closed_form_dual_ps(r.matrices, r.history, c.partition, i, k, 2),
                  expected, 1e-12);
      EXPECT_NEAR(r.final_states[i].z[k], expected, 1e-12);
    }
  }
}

void ExpectClosedFormMatchesRecursion(const SimulationConfig& c, int horizon) {
  const OlrStream s = synth_olr_stream(RngKey{11, 0}, c.partition.dimension(), horizon);
  for (int t = 1; t <= horizon; ++t) {
    const SimulationResult r = run_simulation(
        c, std::span<const LossEvent>(s.events).subspan(0, t));
    for (int i = 0; i < c.partition.nodes(); ++i) {
      for (int k = 0; k < c.partition.dimension(); ++k) {
        const double closed =
            c.engine == EngineKind::kPushSum
                ? closed_form_dual_ps(r.matrices, r.history, c.partition, i, k, t)
                : closed_form_dual_c(r.matrices, r.history, c.partition, i, k, t);
        const double rec = r.final_states[i].z[k];
        EXPECT_LE(std::abs(closed - rec), 1e-8 * std::max(1.0, std::abs(rec)))
            << "t=" << t << " i=" << i << " k=" << k;
      }
    }
  }
}

TEST(ClosedFormTest, CirculationMatchesRecursion) {
  std::mt19937 gen(21);
  SimulationConfig c = BaseConfig(RandomUndirected(gen, 4, 20), 8, 0.5, 0.1,
                                  ConstraintSet::UniformBox(8, -2.0, 2.0));
  ExpectClosedFormMatchesRecursion(c, 20);
  c.weighting = Weighting::kMetropolis;
  ExpectClosedFormMatchesRecursion(c, 20);
}

TEST(ClosedFormTest, PushSumMatchesRecursion) {
  std::mt19937 gen(22);
  const SimulationConfig c = BaseConfig(RandomDirected(gen, 5, 20), 10, 0.5, 0.1,
                                        ConstraintSet::UniformBox(10, -2.0, 2.0));
  ExpectClosedFormMatchesRecursion(c, 20);
}

TEST(DualAverageTest, Examples) {
  const BlockPartition p = BlockPartition::Equal(4, 2);
  std::vector<RoundSignals> hist(
      5, RoundSignals{{VectorXd::Zero(4), VectorXd::Zero(4)},
                      {VectorXd::Zero(2), VectorXd::Zero(2)}});
  EXPECT_EQ(dual_average_recursion(hist, p, 5), VectorXd::Zero(4));
  for (RoundSignals& s : hist) {
    s.u = {Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(-1.0, 0.5)};
  }
  EXPECT_EQ(dual_average_recursion(hist, p, 3),
            VectorXd(3.0 * Eigen::Vector4d(1.0, 2.0, -1.0, 0.5)));
}

TEST(DualAverageTest, ExactUnderSymmetricWeights) {
  std::mt19937 gen(31);
  SimulationConfig c = BaseConfig(RandomUndirected(gen, 5, 7), 10, 0.5, 0.1,
                                  ConstraintSet::UniformBox(10, -2.0, 2.0));
  c.weighting = Weighting::kMetropolis;
  const OlrStream s = synth_olr_stream(RngKey{12, 0}, 10, 60);
  const SimulationResult r = run_simulation(c, s.events);
  std::vector<NodeState> states = initial_states(c.partition, c.set);
  VectorXd previous = VectorXd::Zero(10);
  for (int t = 0; t < 60; ++t) {
    apply_dpsda_c(states, r.matrices[t], r.history[t], c.partition, c.set,
                  step_alpha(t));
    const VectorXd zbar = network_average_dual(states);
    VectorXd increment = VectorXd::Zero(10);
    for (int i = 0; i < 5; ++i) {
      increment += r.history[t].eta[i] / 5.0;
      increment.segment(c.partition.block(i).begin, 2) += r.history[t].u[i];
    }
    EXPECT_LE((zbar - previous - increment).norm(), 1e-9) << t;
    EXPECT_LE((zbar - dual_average_recursion(r.history, c.partition, t + 1)).norm(),
              1e-9);
    previous = zbar;
  }
}

TEST(SimulationTest, EmptyStreamGivesEmptyTrace) {
  const SimulationConfig c = BaseConfig(default_undirected_schedule(), 7, 1.0, 0.1,
                                        ConstraintSet::UniformBox(7, -5, 5));
  const SimulationResult r = run_simulation(c, {});
  EXPECT_EQ(r.trace.rounds(), 0);
  EXPECT_TRUE(r.decisions.empty());
  EXPECT_EQ(r.final_decision.size(), 7);
}

TEST(SimulationTest, OlrConfigRunsEndToEnd) {
  const OlrStream s = synth_olr_stream(RngKey{1, 0}, 21, 500);
  for (const TopologySchedule& schedule :
       {default_undirected_schedule(), default_directed_schedule()}) {
    for (std::optional<double> eps : {std::optional<double>{}, std::optional(0.2)}) {
      const SimulationConfig c =
          BaseConfig(schedule, 21, eps, 0.1, ConstraintSet::UniformBox(21, -5, 5));
      const SimulationResult r = run_simulation(c, s.events);
      EXPECT_EQ(r.trace.rounds(), 500);
      EXPECT_EQ(r.consensus_error.size(), 500u);
      for (const VectorXd& x : r.decisions) EXPECT_TRUE(c.set.Contains(x));
      EXPECT_TRUE(c.set.Contains(r.final_decision));
      for (int i = 0; i < 7; ++i) {
        const BlockRange b = c.partition.block(i);
        EXPECT_EQ(r.final_states[i].x_block, r.final_states[i].y.segment(b.begin, b.size));
      }
    }
  }
}

TEST(SimulationTest, BallDecisionsStayFeasible) {
  const OlrStream s = synth_olr_stream(RngKey{1, 0}, 21, 200);
  const SimulationConfig c =
      BaseConfig(default_directed_schedule(), 21, 0.2, 0.1,
                 ConstraintSet::BlockBalls(std::vector<int>(7, 3), 0.5));
  const SimulationResult r = run_simulation(c, s.events);
  for (const VectorXd& x : r.decisions) EXPECT_TRUE(c.set.Contains(x));
}

TEST(SimulationTest, Deterministic) {
  const OlrStream s = synth_olr_stream(RngKey{1, 0}, 21, 100);
  for (std::optional<double> eps : {std::optional<double>{}, std::optional(1.0)}) {
    const SimulationConfig c = BaseConfig(default_undirected_schedule(), 21, eps, 0.1,
                                          ConstraintSet::UniformBox(21, -5, 5));
    const SimulationResult a = run_simulation(c, s.events);
    const SimulationResult b = run_simulation(c, s.events);
    EXPECT_EQ(a.decisions, b.decisions);
    EXPECT_EQ(a.trace.cum_cost, b.trace.cum_cost);
    EXPECT_EQ(a.consensus_error, b.consensus_error);
  }
}

TEST(SimulationTest, NonPrivateRunDrawsNoNoise) {
  const OlrStream s = synth_olr_stream(RngKey{1, 0}, 21, 50);
  const SimulationConfig c = BaseConfig(default_directed_schedule(), 21, std::nullopt,
                                        0.1, ConstraintSet::UniformBox(21, -5, 5));
  const SimulationResult r = run_simulation(c, s.events);
  for (const RoundSignals& sig : r.history) {
    for (const VectorXd& eta : sig.eta) EXPECT_EQ(eta, VectorXd::Zero(21));
  }
}

TEST(SimulationTest, ValidatesConfiguration) {
  const OlrStream s = synth_olr_stream(RngKey{1, 0}, 21, 5);
  SimulationConfig c = BaseConfig(default_undirected_schedule(), 21, 1.0, 0.1,
                                  ConstraintSet::UniformBox(21, -5, 5));
  c.weighting = Weighting::kPushSum;
  EXPECT_THROW(run_simulation(c, s.events), ConfigError);
  c = BaseConfig(default_directed_schedule(7, 2), 21, 1.0, 0.1,
                 ConstraintSet::UniformBox(21, -5, 5));
  EXPECT_THROW(run_simulation(c, s.events), ConfigError);
  c = BaseConfig(default_undirected_schedule(), 21, 1.0, 0.1,
                 ConstraintSet::UniformBox(14, -5, 5));
  EXPECT_THROW(run_simulation(c, s.events), ConfigError);
}

}  // namespace
}  // namespace dpsda
