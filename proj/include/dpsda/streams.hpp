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
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dpsda/loss.hpp"
#include "dpsda/rng.hpp"

namespace dpsda {

// Synthetic online linear regression: a(t) uniform on [−0.5, 0.5]^d and
// b(t) = a(t)ᵀx̂ + ϱ(t), x̂ ~ N(0, I), ϱ(t) ~ N(0, noise_variance).
struct OlrStream {
  std::vector<LossEvent> events;
  Eigen::VectorXd target;
};

inline Eigen::VectorXd olr_target(RngKey key, int d) {
  CounterRng rng(key, 0, 0, Purpose::kTarget);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(d);
  for (int k = 0; k < d; ++k) x[k] = gauss(rng);
  return x;
}

// Event of round t; `purpose` selects an independent redraw (used to build
// adjacent streams).
inline LossEvent olr_event(RngKey key, std::int64_t t,
                           const Eigen::VectorXd& target,
                           double noise_variance,
                           Purpose purpose = Purpose::kStream) {
  CounterRng rng(key, 0, t, purpose);
  std::uniform_real_distribution<double> feature(-0.5, 0.5);
  Eigen::VectorXd a(target.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = feature(rng);
  double b = a.dot(target);
  if (noise_variance > 0.0) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_variance));
    b += gauss(rng);
  }
  return make_least_squares_event(a, b);
}

inline OlrStream synth_olr_stream(RngKey key, int d, int horizon,
                                  double noise_variance = 0.2) {
  if (d < 1) throw std::invalid_argument("olr stream needs d >= 1");
  if (horizon < 0) throw std::invalid_argument("olr stream needs T >= 0");
  if (noise_variance < 0.0) throw std::invalid_argument("noise variance < 0");
  OlrStream stream{{}, olr_target(key, d)};
  stream.events.reserve(horizon);
  for (int t = 0; t < horizon; ++t) {
    stream.events.push_back(olr_event(key, t, stream.target, noise_variance));
  }
  return stream;
}

}  // namespace dpsda
