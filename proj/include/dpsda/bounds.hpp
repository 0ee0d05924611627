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
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dpsda/graph_model.hpp"

namespace dpsda {

inline constexpr double kVacuousThreshold = 1e12;

// Constants of the regret analysis. epsilon = +inf means non-private.
struct BoundInputs {
  int n = 1;
  int B = 1;
  double phi = 1.0;
  double epsilon = std::numeric_limits<double>::infinity();
  double lhat = 1.0;
  double L = 1.0;
  double G = 1.0;
  double D_chi = 1.0;
  double C_psi = 1.0;

  void Validate() const {
    if (n < 1 || B < 1) throw std::invalid_argument("bounds need n, B >= 1");
    if (!(phi > 0.0 && phi <= 1.0)) {
      throw std::invalid_argument("bounds need 0 < phi <= 1");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("bounds need epsilon > 0");
    if (!(lhat >= 0.0 && L >= 0.0 && G >= 0.0 && D_chi >= 0.0 && C_psi >= 0.0)) {
      throw std::invalid_argument("bound constants must be nonnegative");
    }
  }
};

namespace internal {

// 1/ε², zero in the non-private limit.
inline double InverseEpsilonSquared(double epsilon) {
  return std::isinf(epsilon) ? 0.0 : 1.0 / (epsilon * epsilon);
}

}  // namespace internal

inline double theta(double phi, int n) {
  if (!(phi > 0.0 && phi <= 1.0) || n < 1) {
    throw std::invalid_argument("theta needs 0 < phi <= 1 and n >= 1");
  }
  return 1.0 - phi / (4.0 * n * n);
}

struct PushSumConstants {
  double gamma = 1.0;
  double beta = 2.0;
  double lambda = 0.0;
  // 1 − λ kept separately; λ itself rounds to 1 for moderate n·B.
  double one_minus_lambda = 1.0;
  int gamma_horizon = 0;
};

// λ = (1 − n^{−nB})^{1/B}, with 1 − λ evaluated without cancellation.
inline PushSumConstants pushsum_lambda(int n, int B) {
  if (n < 1 || B < 1) throw std::invalid_argument("push-sum needs n, B >= 1");
  const double x = std::exp(-static_cast<double>(n) * B * std::log(n));
  PushSumConstants c;
  c.one_minus_lambda = -std::expm1(std::log1p(-x) / B);
  c.lambda = x >= 1.0 ? 0.0 : std::exp(std::log1p(-x) / B);
  return c;
}

// γ estimated as min over t < horizon of min_i [A(t:0)·1]_i with the
// cyclic period `period`; β = 2.
inline PushSumConstants pushsum_constants(int n, int B,
                                          std::span<const MixingMatrix> period,
                                          int horizon) {
  PushSumConstants c = pushsum_lambda(n, B);
  if (period.empty() || horizon < 1) {
    throw std::invalid_argument("gamma estimate needs matrices and horizon >= 1");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  double gamma = std::numeric_limits<double>::infinity();
  for (int t = 0; t < horizon; ++t) {
    const MixingMatrix& a = period[static_cast<std::size_t>(t) % period.size()];
    if (a.n() != n) throw std::invalid_argument("gamma: matrix size != n");
    v = a.entries() * v;
    gamma = std::min(gamma, v.minCoeff());
  }
  c.gamma = gamma;
  c.gamma_horizon = horizon;
  return c;
}

inline double consensus_bound_c(int n, double lhat, double th, double epsilon) {
  const double n2 = static_cast<double>(n) * n;
  const double n4 = n2 * n2;
  const double l2 = lhat * lhat;
  const double contraction = th * th * (1.0 - th) * (1.0 - th);
  return 3.0 * n4 * l2 / contraction + 3.0 * n4 * l2 +
         24.0 * n4 * n2 * l2 / contraction *
             internal::InverseEpsilonSquared(epsilon);
}

inline double consensus_bound_ps(int n, const PushSumConstants& c, double lhat,
                                 double epsilon) {
  const double n2 = static_cast<double>(n) * n;
  const double b2l2 = c.beta * c.beta * lhat * lhat;
  const double g2 = c.gamma * c.gamma;
  const double oml2 = c.one_minus_lambda * c.one_minus_lambda;
  return 8.0 * n2 * b2l2 / (g2 * c.lambda * c.lambda * oml2) +
         64.0 * n2 * n2 * b2l2 / (g2 * oml2) *
             internal::InverseEpsilonSquared(epsilon);
}

namespace internal {

inline double RegretHead(const BoundInputs& in) {
  const double n = in.n;
  const double l2 = in.lhat * in.lhat;
  return 16.0 * n * n * l2 * InverseEpsilonSquared(in.epsilon) + 2.0 * n * l2 +
         in.C_psi;
}

inline double RegretLever(const BoundInputs& in) {
  return 2.0 * (in.L + std::sqrt(static_cast<double>(in.n)) * in.D_chi * in.G);
}

}  // namespace internal

// M₁: the radical is n times the circulation consensus bound.
inline double regret_constant_c(const BoundInputs& in, double th) {
  in.Validate();
  return internal::RegretHead(in) +
         internal::RegretLever(in) *
             std::sqrt(in.n * consensus_bound_c(in.n, in.lhat, th, in.epsilon));
}

// M₂: the radical is n times the push-sum consensus bound.
inline double regret_constant_ps(const BoundInputs& in,
                                 const PushSumConstants& c) {
  in.Validate();
  return internal::RegretHead(in) +
         internal::RegretLever(in) *
             std::sqrt(in.n * consensus_bound_ps(in.n, c, in.lhat, in.epsilon));
}

inline double regret_bound(double m, double horizon) {
  return m * std::sqrt(horizon);
}

inline double running_average_regret_bound(double m, double horizon) {
  return 2.0 * m * std::sqrt(horizon);
}

enum class BoundEngine { kCirculation, kPushSum };

struct BoundReport {
  BoundEngine engine = BoundEngine::kCirculation;
  BoundInputs inputs;
  double theta = std::numeric_limits<double>::quiet_NaN();
  std::optional<PushSumConstants> pushsum;
  double consensus_bound = 0.0;
  double M = 0.0;
  double horizon = 0.0;
  double regret_bound = 0.0;
  double running_average_regret_bound = 0.0;
  bool vacuous = false;
};

inline BoundReport compute_bounds(const BoundInputs& in, BoundEngine engine,
                                  double horizon,
                                  std::optional<PushSumConstants> pushsum = {}) {
  in.Validate();
  BoundReport r;
  r.engine = engine;
  r.inputs = in;
  r.horizon = horizon;
  if (engine == BoundEngine::kCirculation) {
    r.theta = theta(in.phi, in.n);
    r.consensus_bound = consensus_bound_c(in.n, in.lhat, r.theta, in.epsilon);
    r.M = regret_constant_c(in, r.theta);
  } else {
    if (!pushsum) pushsum = pushsum_lambda(in.n, in.B);
    r.pushsum = pushsum;
    r.consensus_bound = consensus_bound_ps(in.n, *pushsum, in.lhat, in.epsilon);
    r.M = regret_constant_ps(in, *pushsum);
  }
  r.regret_bound = dpsda::regret_bound(r.M, horizon);
  r.running_average_regret_bound = dpsda::running_average_regret_bound(r.M, horizon);
  r.vacuous = !(r.consensus_bound <= kVacuousThreshold) ||
              !(r.running_average_regret_bound <= kVacuousThreshold);
  return r;
}

}  // namespace dpsda
