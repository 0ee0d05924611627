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
#include <cstdint>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "dpsda/error.hpp"
#include "dpsda/rng.hpp"

namespace dpsda {

enum class SensitivityMode {
  // Δ = 2·n·L̂, the worst-case shift from swapping one loss function.
  kTheoretical,
  // Δ = a configured constant Δ₀.
  kFixed,
};

struct PrivacyParams {
  // Unset means non-private: no noise is injected.
  std::optional<double> epsilon;
  SensitivityMode mode = SensitivityMode::kFixed;
  double fixed_sensitivity = 1.0;
  // Bound on the Euclidean norm of a node's noisy block gradient.
  double lhat = 1.0;

  void Validate() const {
    if (epsilon && !(*epsilon > 0.0)) {
      throw ConfigError("epsilon must be > 0 (omit it for non-private runs)");
    }
    if (mode == SensitivityMode::kFixed && !(fixed_sensitivity > 0.0)) {
      throw ConfigError("fixed sensitivity must be > 0");
    }
    if (mode == SensitivityMode::kTheoretical && !(lhat > 0.0)) {
      throw ConfigError("lhat must be > 0");
    }
  }
};

inline double sensitivity(const PrivacyParams& params, int n) {
  if (params.mode == SensitivityMode::kFixed) return params.fixed_sensitivity;
  return 2.0 * static_cast<double>(n) * params.lhat;
}

// Laplace scale σ(t) = Δ/ε. The sensitivity bound does not depend on t, so
// neither does σ.
inline double sigma_for_round(const PrivacyParams& params, int n,
                              std::int64_t /*t*/) {
  if (!params.epsilon) return 0.0;
  return sensitivity(params, n) / *params.epsilon;
}

// One standard draw σ·sign(u)·ln(1 − 2|u|), u uniform on (−1/2, 1/2).
inline double laplace_sample(double sigma, CounterRng& rng) {
  const double u = rng.Uniform01() - 0.5;
  const double sign = (u > 0.0) - (u < 0.0);
  return sigma * sign * std::log(1.0 - 2.0 * std::abs(u));
}

struct NoiseDraw {
  Eigen::VectorXd values;
  std::int64_t round = 0;
  int node = 0;
};

inline NoiseDraw laplace_vector(double sigma, int d, CounterRng& rng,
                                std::int64_t round = 0, int node = 0) {
  if (sigma < 0.0) throw std::invalid_argument("laplace scale must be >= 0");
  if (d < 1) throw std::invalid_argument("noise dimension must be >= 1");
  NoiseDraw draw{Eigen::VectorXd::Zero(d), round, node};
  if (sigma == 0.0) return draw;
  for (int k = 0; k < d; ++k) draw.values[k] = laplace_sample(sigma, rng);
  return draw;
}

// The broadcast message h = z + η.
inline Eigen::VectorXd perturb_dual(const Eigen::VectorXd& z,
                                    const NoiseDraw& noise) {
  if (z.size() != noise.values.size()) {
    throw std::invalid_argument("perturb_dual: dimension mismatch");
  }
  return z + noise.values;
}

}  // namespace dpsda
