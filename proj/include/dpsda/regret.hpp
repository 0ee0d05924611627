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

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dpsda/loss.hpp"
#include "dpsda/projection.hpp"

namespace dpsda {

struct HindsightOptions {
  // Stop once the projected-gradient norm falls below this times
  // max(1, ‖∇F(x₀)‖).
  double tolerance = 1e-8;
  int max_iterations = 100000;
  // Above this projected-gradient norm at the cap, the result is flagged.
  double failure_threshold = 1e-4;
};

struct HindsightResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

// Σ_t f_t over a span of events.
class EventSumObjective {
 public:
  explicit EventSumObjective(std::span<const LossEvent> events)
      : events_(events) {
    if (events_.empty()) throw std::invalid_argument("no loss events");
  }

  int dimension() const { return events_.front().dimension(); }

  double Value(const Eigen::VectorXd& x) const {
    double total = 0.0;
    for (const LossEvent& f : events_) total += loss_eval(f, x);
    return total;
  }

  Eigen::VectorXd Gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (const LossEvent& f : events_) g += loss_grad(f, x);
    return g;
  }

  bool Smooth() const {
    for (const LossEvent& f : events_) {
      if (f.family == LossFamily::kHinge) return false;
    }
    return true;
  }

  double SmoothnessBound() const {
    double total = 0.0;
    for (const LossEvent& f : events_) total += smoothness_bound(f);
    return total;
  }

  // Lipschitz constant of the sum (used for subgradient step sizes).
  double LipschitzBound() const {
    double total = 0.0;
    for (const LossEvent& f : events_) {
      double s = 0.0;
      for (int j = 0; j < f.batch_size(); ++j) s += f.sample(j).norm();
      total += f.batch_average ? s / f.batch_size() : s;
    }
    return total;
  }

 private:
  std::span<const LossEvent> events_;
};

// vᵀQv − 2cᵀv + e: the sum of least-squares events in closed form. Adding an
// event costs O(d²·batch), which makes per-round hindsight values cheap.
class QuadraticObjective {
 public:
  explicit QuadraticObjective(int d)
      : q_(Eigen::MatrixXd::Zero(d, d)), c_(Eigen::VectorXd::Zero(d)) {}

  void Add(const LossEvent& f) {
    if (f.family != LossFamily::kLeastSquares) {
      throw std::invalid_argument("quadratic objective needs least squares");
    }
    const double scale = f.batch_average ? 1.0 / f.batch_size() : 1.0;
    for (int j = 0; j < f.batch_size(); ++j) {
      const Eigen::VectorXd a = f.sample(j).transpose();
      q_.selfadjointView<Eigen::Lower>().rankUpdate(a, scale);
      c_ += scale * f.labels[j] * a;
      e_ += scale * f.labels[j] * f.labels[j];
    }
    dirty_ = true;
  }

  int dimension() const { return static_cast<int>(c_.size()); }

  double Value(const Eigen::VectorXd& x) const {
    return x.dot(Q() * x) - 2.0 * c_.dot(x) + e_;
  }

  Eigen::VectorXd Gradient(const Eigen::VectorXd& x) const {
    return 2.0 * (Q() * x) - 2.0 * c_;
  }

  bool Smooth() const { return true; }

  double SmoothnessBound() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q(),
                                                       Eigen::EigenvaluesOnly);
    return 2.0 * std::max(eig.eigenvalues().maxCoeff(), 0.0);
  }

  double LipschitzBound() const { return 0.0; }

  // Minimum-norm solution of Qv = c, a stationary point when c ∈ range(Q).
  Eigen::VectorXd UnconstrainedMinimizer() const {
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(Q()).solve(c_);
  }

 private:
  const Eigen::MatrixXd& Q() const {
    if (dirty_) {
      full_ = q_.selfadjointView<Eigen::Lower>();
      dirty_ = false;
    }
    return full_;
  }

  Eigen::MatrixXd q_;  // lower triangle only
  Eigen::VectorXd c_;
  double e_ = 0.0;
  mutable Eigen::MatrixXd full_;
  mutable bool dirty_ = true;
};

namespace internal {

template <typename Objective>
double ProjectedGradientNorm(const Objective& objective,
                             const ConstraintSet& set,
                             const Eigen::VectorXd& x) {
  return (x - set.Project(x - objective.Gradient(x))).norm();
}

// Accelerated projected gradient with backtracking and gradient restarts.
// Both tests use gradients only; function values cancel badly near the
// optimum of long sums.
template <typename Objective>
HindsightResult MinimizeSmooth(const Objective& objective,
                               const ConstraintSet& set, Eigen::VectorXd x0,
                               const HindsightOptions& options) {
  HindsightResult result;
  Eigen::VectorXd x = set.Project(x0);
  Eigen::VectorXd y = x;
  double momentum = 1.0;
  double lipschitz = std::max(objective.SmoothnessBound(), 1e-12);
  double last_norm = std::numeric_limits<double>::infinity();
  const double tolerance =
      options.tolerance * std::max(1.0, objective.Gradient(x).norm());
  int k = 0;
  for (; k < options.max_iterations; ++k) {
    const Eigen::VectorXd gy = objective.Gradient(y);
    Eigen::VectorXd x_next;
    while (true) {
      x_next = set.Project(y - gy / lipschitz);
      const Eigen::VectorXd step = x_next - y;
      // For convex F, f(x⁺) − f(y) − ∇f(y)ᵀs ≤ (∇f(x⁺) − ∇f(y))ᵀs.
      const double curvature = (objective.Gradient(x_next) - gy).dot(step);
      if (curvature <= 0.5 * lipschitz * step.squaredNorm() ||
          lipschitz > 1e300) {
        break;
      }
      lipschitz *= 2.0;
    }
    // Upper bound on the unit-step projected-gradient norm at y.
    last_norm = std::max(lipschitz, 1.0) * (y - x_next).norm();
    const bool restart = gy.dot(x_next - x) > 0.0;
    const double next_momentum =
        restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = restart ? x_next
                : Eigen::VectorXd(x_next + ((momentum - 1.0) / next_momentum) *
                                               (x_next - x));
    x = std::move(x_next);
    momentum = next_momentum;
    if (last_norm < tolerance) {
      ++k;
      break;
    }
  }
  result.argmin = x;
  result.value = objective.Value(x);
  result.iterations = k;
  result.gradient_norm = ProjectedGradientNorm(objective, set, x);
  result.converged = result.gradient_norm <= options.failure_threshold ||
                     last_norm < tolerance;
  return result;
}

// Projected subgradient descent with steps 1/(L·√k), keeping the best point.
template <typename Objective>
HindsightResult MinimizeNonsmooth(const Objective& objective,
                                  const ConstraintSet& set, Eigen::VectorXd x0,
                                  const HindsightOptions& options) {
  const double lipschitz = std::max(objective.LipschitzBound(), 1e-12);
  Eigen::VectorXd x = set.Project(x0);
  HindsightResult best{x, objective.Value(x), false, 0, 0.0};
  for (int k = 1; k <= options.max_iterations; ++k) {
    const Eigen::VectorXd g = objective.Gradient(x);
    if (g.norm() == 0.0) break;
    x = set.Project(x - g / (lipschitz * std::sqrt(static_cast<double>(k))));
    const double fx = objective.Value(x);
    if (fx < best.value) {
      best.value = fx;
      best.argmin = x;
    }
    best.iterations = k;
  }
  best.gradient_norm = ProjectedGradientNorm(objective, set, best.argmin);
  best.converged = best.gradient_norm <= options.failure_threshold;
  return best;
}

}  // namespace internal

namespace internal {

// Exact interior solution of a least-squares sum, when it is feasible.
inline std::optional<HindsightResult> InteriorQuadraticMinimum(
    const QuadraticObjective& q, const ConstraintSet& set,
    const HindsightOptions& options) {
  const Eigen::VectorXd v = q.UnconstrainedMinimizer();
  if (!set.Contains(v, 0.0)) return std::nullopt;
  const double grad = q.Gradient(v).norm();
  if (!(grad <= options.failure_threshold)) return std::nullopt;
  return HindsightResult{v, q.Value(v), true, 0, grad};
}

}  // namespace internal

template <typename Objective>
HindsightResult minimize_over_set(const Objective& objective,
                                  const ConstraintSet& set,
                                  Eigen::VectorXd x0,
                                  const HindsightOptions& options = {}) {
  if (objective.Smooth()) {
    return internal::MinimizeSmooth(objective, set, std::move(x0), options);
  }
  return internal::MinimizeNonsmooth(objective, set, std::move(x0), options);
}

// The best fixed feasible decision for Σ_t f_t and its value.
inline HindsightResult hindsight_optimum(std::span<const LossEvent> events,
                                         const ConstraintSet& set,
                                         const HindsightOptions& options = {}) {
  if (events.empty()) throw std::invalid_argument("hindsight needs events");
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(set.dimension());
  bool all_least_squares = true;
  for (const LossEvent& f : events) {
    all_least_squares &= f.family == LossFamily::kLeastSquares;
  }
  if (all_least_squares) {
    QuadraticObjective q(set.dimension());
    for (const LossEvent& f : events) q.Add(f);
    auto interior = internal::InteriorQuadraticMinimum(q, set, options);
    HindsightResult r =
        interior ? *interior : minimize_over_set(q, set, start, options);
    // Report the value through the direct sum, not the expanded quadratic.
    r.value = EventSumObjective(events).Value(r.argmin);
    return r;
  }
  return minimize_over_set(EventSumObjective(events), set, start, options);
}

// inf_v Σ_{s≤t} f_s(v) for each prefix length t = 1..T. Least-squares streams
// are solved at every t with warm starts; other families only at multiples of
// `stride` and at T, leaving NaN elsewhere.
inline std::vector<double> prefix_hindsight_values(
    std::span<const LossEvent> events, const ConstraintSet& set, int stride,
    const HindsightOptions& options = {}) {
  const int horizon = static_cast<int>(events.size());
  std::vector<double> values(horizon, std::numeric_limits<double>::quiet_NaN());
  if (horizon == 0) return values;
  bool all_least_squares = true;
  for (const LossEvent& f : events) {
    all_least_squares &= f.family == LossFamily::kLeastSquares;
  }
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(set.dimension());
  if (all_least_squares) {
    QuadraticObjective q(set.dimension());
    for (int t = 0; t < horizon; ++t) {
      q.Add(events[t]);
      auto interior = internal::InteriorQuadraticMinimum(q, set, options);
      HindsightResult r = interior ? *interior
                                   : minimize_over_set(q, set, warm, options);
      warm = r.argmin;
      values[t] = std::max(r.value, 0.0);
    }
    return values;
  }
  if (stride < 1) throw std::invalid_argument("hindsight stride must be >= 1");
  for (int t = 0; t < horizon; ++t) {
    if ((t + 1) % stride != 0 && t + 1 != horizon) continue;
    HindsightResult r = minimize_over_set(
        EventSumObjective(events.subspan(0, t + 1)), set, warm, options);
    warm = r.argmin;
    values[t] = r.value;
  }
  return values;
}

// Per-round costs of the decisions x(t) and their running averages x̃(t),
// with prefix sums and the hindsight comparator.
struct RegretTrace {
  std::vector<double> cost;
  std::vector<double> running_avg_cost;
  std::vector<double> cum_cost;
  std::vector<double> cum_running_avg_cost;
  // inf over the set of Σ_{s≤t} f_s; NaN where not computed.
  std::vector<double> hindsight;

  int rounds() const { return static_cast<int>(cost.size()); }

  // Regret after the first T rounds (T is 1-based).
  double regret(int T) const {
    return cum_cost.at(T - 1) - hindsight.at(T - 1);
  }
  double running_avg_regret(int T) const {
    return cum_running_avg_cost.at(T - 1) - hindsight.at(T - 1);
  }
};

// Appends round t (1-based, must be the next round).
inline void regret_update(RegretTrace& trace, int t, const LossEvent& f,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_tilde) {
  if (t != trace.rounds() + 1) {
    throw std::invalid_argument("regret_update: rounds must be appended in order");
  }
  const double c = loss_eval(f, x);
  const double c_avg = loss_eval(f, x_tilde);
  trace.cost.push_back(c);
  trace.running_avg_cost.push_back(c_avg);
  trace.cum_cost.push_back((t > 1 ? trace.cum_cost.back() : 0.0) + c);
  trace.cum_running_avg_cost.push_back(
      (t > 1 ? trace.cum_running_avg_cost.back() : 0.0) + c_avg);
  trace.hindsight.push_back(std::numeric_limits<double>::quiet_NaN());
}

inline void attach_hindsight(RegretTrace& trace, std::vector<double> values) {
  if (static_cast<int>(values.size()) != trace.rounds()) {
    throw std::invalid_argument("hindsight length differs from trace length");
  }
  trace.hindsight = std::move(values);
}

}  // namespace dpsda
