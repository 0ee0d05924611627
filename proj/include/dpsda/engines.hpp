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

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpsda/error.hpp"
#include "dpsda/graph_model.hpp"
#include "dpsda/loss.hpp"
#include "dpsda/privacy_mech.hpp"
#include "dpsda/projection.hpp"
#include "dpsda/regret.hpp"
#include "dpsda/rng.hpp"

namespace dpsda {

// Assignment of decision coordinates to nodes: node i controls a contiguous
// block, and the blocks tile [0, d).
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<BlockRange> blocks)
      : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("partition needs a node");
    int next = 0;
    for (const BlockRange& b : blocks_) {
      if (b.begin != next || b.size < 1) {
        throw std::invalid_argument(
            "partition blocks must be nonempty, contiguous and in order");
      }
      next = b.end();
    }
    dimension_ = next;
    owner_.resize(dimension_);
    for (int i = 0; i < nodes(); ++i) {
      for (int k = blocks_[i].begin; k < blocks_[i].end(); ++k) owner_[k] = i;
    }
  }

  // ⌊d/n⌋ coordinates per node; the last node also takes the remainder.
  static BlockPartition Equal(int d, int n) {
    if (n < 1 || d < n) {
      throw std::invalid_argument("partition needs 1 <= n <= d");
    }
    std::vector<BlockRange> blocks;
    const int base = d / n;
    for (int i = 0; i < n; ++i) {
      blocks.push_back({i * base, i + 1 == n ? d - i * base : base});
    }
    return BlockPartition(std::move(blocks));
  }

  int nodes() const { return static_cast<int>(blocks_.size()); }
  int dimension() const { return dimension_; }
  BlockRange block(int i) const { return blocks_.at(i); }
  int owner(int k) const { return owner_.at(k); }
  int max_block_size() const {
    int m = 0;
    for (const BlockRange& b : blocks_) m = std::max(m, b.size);
    return m;
  }

 private:
  std::vector<BlockRange> blocks_;
  std::vector<int> owner_;
  int dimension_ = 0;
};

// Local state of node i: dual z_i, primal y_i, push-sum weight w_i and the
// node's slice of the global decision.
struct NodeState {
  Eigen::VectorXd z;
  Eigen::VectorXd y;
  double w = 1.0;
  Eigen::VectorXd x_block;
};

inline std::vector<NodeState> initial_states(const BlockPartition& partition,
                                             const ConstraintSet& set) {
  if (set.dimension() != partition.dimension()) {
    throw std::invalid_argument("constraint set and partition disagree on d");
  }
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(partition.dimension());
  const Eigen::VectorXd y0 = prox_project(z0, step_alpha(0), set);
  std::vector<NodeState> states(partition.nodes());
  for (int i = 0; i < partition.nodes(); ++i) {
    const BlockRange b = partition.block(i);
    states[i] = NodeState{z0, y0, 1.0, y0.segment(b.begin, b.size)};
  }
  return states;
}

// The global decision: every node's own block of its primal variable.
inline Eigen::VectorXd assemble_decision(std::span<const NodeState> states,
                                         const BlockPartition& partition) {
  Eigen::VectorXd x(partition.dimension());
  for (int i = 0; i < partition.nodes(); ++i) {
    const BlockRange b = partition.block(i);
    x.segment(b.begin, b.size) = states[i].x_block;
  }
  return x;
}

// Randomness consumed by one round: Laplace noise η_i (length d) and the
// noisy block gradient u_i (length of node i's block).
struct RoundSignals {
  std::vector<Eigen::VectorXd> eta;
  std::vector<Eigen::VectorXd> u;
};

struct RoundContext {
  const BlockPartition* partition = nullptr;
  const ConstraintSet* set = nullptr;
  double sigma = 0.0;
  GradientNoiseSpec gradient_noise;
  RngKey key;
};

// Each node draws η_i(t) and evaluates u_i(t) at its pre-update primal y_i(t).
inline RoundSignals draw_round_signals(std::span<const NodeState> states,
                                       const LossEvent& f,
                                       const RoundContext& ctx,
                                       std::int64_t t) {
  const BlockPartition& partition = *ctx.partition;
  const int n = partition.nodes();
  if (static_cast<int>(states.size()) != n) {
    throw std::invalid_argument("state count differs from node count");
  }
  RoundSignals signals;
  signals.eta.reserve(n);
  signals.u.reserve(n);
  for (int i = 0; i < n; ++i) {
    CounterRng laplace_rng(ctx.key, i, t, Purpose::kLaplace);
    signals.eta.push_back(
        laplace_vector(ctx.sigma, partition.dimension(), laplace_rng, t, i)
            .values);
    CounterRng grad_rng(ctx.key, i, t, Purpose::kGradientNoise);
    signals.u.push_back(noisy_block_grad(f, states[i].y, partition.block(i),
                                         ctx.gradient_noise, grad_rng));
  }
  return signals;
}

namespace internal {

inline void CheckRoundShapes(std::span<const NodeState> states,
                             const MixingMatrix& m,
                             const RoundSignals& signals,
                             const BlockPartition& partition,
                             MatrixKind expected) {
  const int n = partition.nodes();
  if (m.kind() != expected) {
    throw std::invalid_argument("mixing matrix has the wrong stochastic kind");
  }
  if (m.n() != n || static_cast<int>(states.size()) != n ||
      static_cast<int>(signals.eta.size()) != n ||
      static_cast<int>(signals.u.size()) != n) {
    throw std::invalid_argument("round inputs disagree on node count");
  }
  for (int i = 0; i < n; ++i) {
    if (states[i].z.size() != partition.dimension() ||
        signals.eta[i].size() != partition.dimension() ||
        signals.u[i].size() != partition.block(i).size) {
      throw std::invalid_argument("round inputs disagree on dimension");
    }
  }
}

inline void FinishNode(NodeState& s, const Eigen::VectorXd& dual_for_prox,
                       BlockRange block, const ConstraintSet& set,
                       double alpha) {
  s.y = prox_project(dual_for_prox, alpha, set);
  s.x_block = s.y.segment(block.begin, block.size);
}

}  // namespace internal

// Circulation-based update over an undirected round:
//   h_i = z_i + η_i
//   z_i^k ← n·δ_i^k·u_i + h_i^k + Σ_j W_ij (h_j^k − h_i^k)
//   y_i ← Π(z_i, α)
inline void apply_dpsda_c(std::span<NodeState> states, const MixingMatrix& w,
                          const RoundSignals& signals,
                          const BlockPartition& partition,
                          const ConstraintSet& set, double alpha) {
  internal::CheckRoundShapes(states, w, signals, partition,
                             MatrixKind::kRowStochastic);
  const int n = partition.nodes();
  std::vector<Eigen::VectorXd> h(n);
  for (int i = 0; i < n; ++i) h[i] = states[i].z + signals.eta[i];
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z = h[i];
    for (int j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij != 0.0 && j != i) z += wij * (h[j] - h[i]);
    }
    const BlockRange b = partition.block(i);
    z.segment(b.begin, b.size) += static_cast<double>(n) * signals.u[i];
    states[i].z = std::move(z);
    internal::FinishNode(states[i], states[i].z, b, set, alpha);
  }
}

// Push-sum update over a directed round:
//   z_i^k ← n·δ_i^k·u_i + Σ_j A_ij h_j^k,   w_i ← Σ_j A_ij w_j
//   y_i ← Π(z_i / w_i, α)
inline void apply_dpsda_ps(std::span<NodeState> states, const MixingMatrix& a,
                           const RoundSignals& signals,
                           const BlockPartition& partition,
                           const ConstraintSet& set, double alpha) {
  internal::CheckRoundShapes(states, a, signals, partition,
                             MatrixKind::kColumnStochastic);
  const int n = partition.nodes();
  std::vector<Eigen::VectorXd> h(n);
  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    h[i] = states[i].z + signals.eta[i];
    weights[i] = states[i].w;
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(partition.dimension());
    double wi = 0.0;
    for (int j = 0; j < n; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      z += aij * h[j];
      wi += aij * weights[j];
    }
    if (!(wi >= 1e-12)) {
      throw InvariantError("push-sum weight of node " + std::to_string(i) +
                           " fell below 1e-12");
    }
    const BlockRange b = partition.block(i);
    z.segment(b.begin, b.size) += static_cast<double>(n) * signals.u[i];
    states[i].z = std::move(z);
    states[i].w = wi;
    internal::FinishNode(states[i], states[i].z / wi, b, set, alpha);
  }
}

// One full DPSDA-C round at index t (draw, mix, project with α(t)).
inline RoundSignals dpsda_c_round(std::span<NodeState> states,
                                  const MixingMatrix& w, const LossEvent& f,
                                  const RoundContext& ctx, std::int64_t t) {
  RoundSignals signals = draw_round_signals(states, f, ctx, t);
  apply_dpsda_c(states, w, signals, *ctx.partition, *ctx.set, step_alpha(t));
  return signals;
}

// One full DPSDA-PS round at index t.
inline RoundSignals dpsda_ps_round(std::span<NodeState> states,
                                   const MixingMatrix& a, const LossEvent& f,
                                   const RoundContext& ctx, std::int64_t t) {
  RoundSignals signals = draw_round_signals(states, f, ctx, t);
  apply_dpsda_ps(states, a, signals, *ctx.partition, *ctx.set, step_alpha(t));
  return signals;
}

namespace internal {

// z_i^k(t) = n Σ_s [M(t−1:s+1)]_{i,o(k)} u^k(s) + Σ_s Σ_j [M(t−1:s)]_ij η_j^k(s)
// where o(k) owns coordinate k. Products are accumulated backwards in s.
inline double ClosedFormDual(std::span<const MixingMatrix> matrices,
                             std::span<const RoundSignals> history,
                             const BlockPartition& partition, int i, int k,
                             std::int64_t t) {
  if (t < 0 || t > static_cast<std::int64_t>(history.size()) ||
      t > static_cast<std::int64_t>(matrices.size())) {
    throw std::out_of_range("closed form needs histories for every s < t");
  }
  const int n = partition.nodes();
  const int owner = partition.owner(k);
  const int local = k - partition.block(owner).begin;
  Eigen::RowVectorXd later = Eigen::RowVectorXd::Unit(n, i);  // row i of M(t−1:s+1)
  double value = 0.0;
  for (std::int64_t s = t - 1; s >= 0; --s) {
    const RoundSignals& sig = history[s];
    value += n * later[owner] * sig.u[owner][local];
    const Eigen::RowVectorXd through = later * matrices[s].entries();
    for (int j = 0; j < n; ++j) value += through[j] * sig.eta[j][k];
    later = through;
  }
  return value;
}

}  // namespace internal

inline double closed_form_dual_c(std::span<const MixingMatrix> w_sequence,
                                 std::span<const RoundSignals> history,
                                 const BlockPartition& partition, int i, int k,
                                 std::int64_t t) {
  return internal::ClosedFormDual(w_sequence, history, partition, i, k, t);
}

inline double closed_form_dual_ps(std::span<const MixingMatrix> a_sequence,
                                  std::span<const RoundSignals> history,
                                  const BlockPartition& partition, int i, int k,
                                  std::int64_t t) {
  return internal::ClosedFormDual(a_sequence, history, partition, i, k, t);
}

// z̄(t) = (1/n) Σ_{s<t} Σ_i η_i(s) + Σ_{s<t} u(s), u(s) the stacked block
// signals of all nodes.
inline Eigen::VectorXd dual_average_recursion(
    std::span<const RoundSignals> history, const BlockPartition& partition,
    std::int64_t t) {
  if (t < 0 || t > static_cast<std::int64_t>(history.size())) {
    throw std::out_of_range("dual average needs histories for every s < t");
  }
  const int n = partition.nodes();
  Eigen::VectorXd zbar = Eigen::VectorXd::Zero(partition.dimension());
  for (std::int64_t s = 0; s < t; ++s) {
    for (int i = 0; i < n; ++i) {
      zbar += history[s].eta[i] / static_cast<double>(n);
      const BlockRange b = partition.block(i);
      zbar.segment(b.begin, b.size) += history[s].u[i];
    }
  }
  return zbar;
}

inline Eigen::VectorXd network_average_dual(std::span<const NodeState> states) {
  Eigen::VectorXd zbar = Eigen::VectorXd::Zero(states.front().z.size());
  for (const NodeState& s : states) zbar += s.z;
  return zbar / static_cast<double>(states.size());
}

enum class EngineKind { kCirculation, kPushSum };

// Σ_i ‖z_i − z̄‖² for the circulation engine, Σ_i ‖z_i/w_i − z̄‖² for push-sum.
inline double consensus_error(std::span<const NodeState> states,
                              EngineKind engine) {
  const Eigen::VectorXd zbar = network_average_dual(states);
  double total = 0.0;
  for (const NodeState& s : states) {
    total += engine == EngineKind::kPushSum ? (s.z / s.w - zbar).squaredNorm()
                                            : (s.z - zbar).squaredNorm();
  }
  return total;
}

struct SimulationConfig {
  EngineKind engine = EngineKind::kCirculation;
  TopologySchedule schedule = default_undirected_schedule();
  Weighting weighting = Weighting::kUniform;
  BlockPartition partition = BlockPartition::Equal(7, 7);
  ConstraintSet set = ConstraintSet::UniformBox(7, -5.0, 5.0);
  PrivacyParams privacy;
  GradientNoiseSpec gradient_noise;
  RngKey key;
  // Keep every round's signals and mixing matrix (for oracle checks).
  bool record_history = false;

  void Validate() const {
    privacy.Validate();
    if (partition.nodes() != schedule.n()) {
      throw ConfigError("partition and schedule disagree on n");
    }
    if (set.dimension() != partition.dimension()) {
      throw ConfigError("constraint set and partition disagree on d");
    }
    const bool push_sum = engine == EngineKind::kPushSum;
    if (push_sum != (weighting == Weighting::kPushSum)) {
      throw ConfigError("push-sum engine needs push-sum weights and vice versa");
    }
    if (push_sum != schedule.directed()) {
      throw ConfigError(push_sum ? "push-sum engine needs a directed schedule"
                                 : "circulation engine needs an undirected "
                                   "schedule");
    }
    if (!check_window_connectivity(schedule)) {
      throw ConfigError(schedule.directed()
                            ? "schedule is not B-strongly connected"
                            : "some round of the schedule is disconnected");
    }
    if (gradient_noise.variance < 0.0) {
      throw ConfigError("gradient noise variance must be >= 0");
    }
  }
};

struct SimulationResult {
  // x(t) committed before f_t is revealed, t = 0..T−1.
  std::vector<Eigen::VectorXd> decisions;
  // x̃(t) = mean of x(0..t).
  std::vector<Eigen::VectorXd> running_average;
  // Decision after the last round, x(T).
  Eigen::VectorXd final_decision;
  // Consensus error of the duals after round t's update.
  std::vector<double> consensus_error;
  // Σ_i w_i after round t's update (all ones for the circulation engine).
  std::vector<double> weight_sum;
  // Costs of x(t) and x̃(t); the hindsight comparator is attached by callers.
  RegretTrace trace;
  std::vector<NodeState> final_states;
  std::vector<RoundSignals> history;
  std::vector<MixingMatrix> matrices;
  RngKey key;
  // Largest ‖∇f_t(x(t))‖ and largest noisy block gradient ‖u_i(t)‖ seen.
  double max_gradient_norm = 0.0;
  double max_signal_norm = 0.0;
};

// T = events.size() synchronous rounds. Each round: decide, reveal f_t,
// perturb and exchange duals, mix, project. Deterministic in (config, key).
inline SimulationResult run_simulation(const SimulationConfig& config,
                                       std::span<const LossEvent> events) {
  config.Validate();
  const BlockPartition& partition = config.partition;
  const int n = partition.nodes();
  for (const LossEvent& f : events) {
    if (f.dimension() != partition.dimension()) {
      throw ConfigError("loss events and partition disagree on d");
    }
  }
  const std::vector<MixingMatrix> period =
      mixing_period(config.schedule, config.weighting);
  RoundContext ctx{&partition, &config.set,
                   sigma_for_round(config.privacy, n, 0), config.gradient_noise,
                   config.key};

  SimulationResult result;
  result.key = config.key;
  const std::size_t horizon = events.size();
  result.decisions.reserve(horizon);
  result.running_average.reserve(horizon);
  std::vector<NodeState> states = initial_states(partition, config.set);
  Eigen::VectorXd decision_sum = Eigen::VectorXd::Zero(partition.dimension());

  for (std::size_t t = 0; t < horizon; ++t) {
    const Eigen::VectorXd x = assemble_decision(states, partition);
    if (!config.set.Contains(x, 1e-9)) {
      throw InvariantError("decision left the feasible set at round " +
                           std::to_string(t));
    }
    decision_sum += x;
    const Eigen::VectorXd x_tilde = decision_sum / static_cast<double>(t + 1);
    regret_update(result.trace, static_cast<int>(t + 1), events[t], x, x_tilde);
    result.decisions.push_back(x);
    result.running_average.push_back(x_tilde);

    const MixingMatrix& m = period[t % period.size()];
    RoundSignals signals =
        config.engine == EngineKind::kPushSum
            ? dpsda_ps_round(states, m, events[t], ctx, static_cast<std::int64_t>(t))
            : dpsda_c_round(states, m, events[t], ctx, static_cast<std::int64_t>(t));

    result.max_gradient_norm = std::max(result.max_gradient_norm,
                                        loss_grad(events[t], x).norm());
    for (const Eigen::VectorXd& u : signals.u) {
      result.max_signal_norm = std::max(result.max_signal_norm, u.norm());
    }
    result.consensus_error.push_back(consensus_error(states, config.engine));
    double wsum = 0.0;
    for (const NodeState& s : states) wsum += s.w;
    result.weight_sum.push_back(wsum);
    if (config.record_history) {
      result.history.push_back(std::move(signals));
      result.matrices.push_back(m);
    }
  }
  result.final_decision = assemble_decision(states, partition);
  result.final_states = std::move(states);
  return result;
}

}  // namespace dpsda
