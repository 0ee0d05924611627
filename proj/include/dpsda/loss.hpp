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
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dpsda/rng.hpp"

namespace dpsda {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LossFamily { kLeastSquares, kHinge, kLogistic };

// The function f_t revealed at one round: a loss family evaluated on a batch
// of (feature, label) pairs. Features are shared with the dataset they came
// from; `rows` selects the batch (empty selects every row).
struct LossEvent {
  LossFamily family = LossFamily::kLeastSquares;
  std::shared_ptr<const RowMatrix> features;
  std::vector<int> rows;
  Eigen::VectorXd labels;
  // Average over the batch (1/|D_t|) rather than sum.
  bool batch_average = true;

  int dimension() const { return static_cast<int>(features->cols()); }
  int batch_size() const { return static_cast<int>(labels.size()); }

  auto sample(int j) const {
    return features->row(rows.empty() ? j : rows[static_cast<std::size_t>(j)]);
  }

  void Validate() const {
    if (!features) throw std::invalid_argument("loss event has no features");
    const auto count = rows.empty() ? features->rows()
                                    : static_cast<Eigen::Index>(rows.size());
    if (count != labels.size() || count == 0) {
      throw std::invalid_argument("loss event: batch and labels disagree");
    }
    for (int r : rows) {
      if (r < 0 || r >= features->rows()) {
        throw std::invalid_argument("loss event: row index out of range");
      }
    }
    if (family != LossFamily::kLeastSquares) {
      for (double b : labels) {
        if (b != 1.0 && b != -1.0) {
          throw std::invalid_argument("classification labels must be ±1");
        }
      }
    }
  }
};

// Single-sample least-squares event with its own feature row.
inline LossEvent make_least_squares_event(const Eigen::VectorXd& a, double b) {
  auto features = std::make_shared<RowMatrix>(1, a.size());
  features->row(0) = a.transpose();
  LossEvent event;
  event.family = LossFamily::kLeastSquares;
  event.features = std::move(features);
  event.labels = Eigen::VectorXd::Constant(1, b);
  return event;
}

inline LossEvent make_event(LossFamily family, RowMatrix features,
                            Eigen::VectorXd labels) {
  LossEvent event;
  event.family = family;
  event.features = std::make_shared<const RowMatrix>(std::move(features));
  event.labels = std::move(labels);
  event.Validate();
  return event;
}

namespace internal {

// log(1 + e^m) without overflow.
inline double Softplus(double m) {
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

// 1 / (1 + e^{-s}) without overflow.
inline double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline void CheckDimension(const LossEvent& f, const Eigen::VectorXd& x) {
  if (x.size() != f.dimension()) {
    throw std::invalid_argument("loss: decision dimension mismatch");
  }
}

}  // namespace internal

inline double loss_eval(const LossEvent& f, const Eigen::VectorXd& x) {
  internal::CheckDimension(f, x);
  double total = 0.0;
  for (int j = 0; j < f.batch_size(); ++j) {
    const double score = f.sample(j).dot(x);
    const double b = f.labels[j];
    switch (f.family) {
      case LossFamily::kLeastSquares: {
        const double r = b - score;
        total += r * r;
        break;
      }
      case LossFamily::kHinge:
        total += std::max(0.0, 1.0 - b * score);
        break;
      case LossFamily::kLogistic:
        total += internal::Softplus(-b * score);
        break;
    }
  }
  return f.batch_average ? total / f.batch_size() : total;
}

// Gradient (subgradient 0 at the hinge kink).
inline Eigen::VectorXd loss_grad(const LossEvent& f, const Eigen::VectorXd& x) {
  internal::CheckDimension(f, x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (int j = 0; j < f.batch_size(); ++j) {
    const auto a = f.sample(j);
    const double score = a.dot(x);
    const double b = f.labels[j];
    double coeff = 0.0;
    switch (f.family) {
      case LossFamily::kLeastSquares:
        coeff = -2.0 * (b - score);
        break;
      case LossFamily::kHinge:
        coeff = (1.0 - b * score > 0.0) ? -b : 0.0;
        break;
      case LossFamily::kLogistic:
        coeff = -b * internal::Sigmoid(-b * score);
        break;
    }
    if (coeff != 0.0) g.noalias() += coeff * a.transpose();
  }
  if (f.batch_average) g /= f.batch_size();
  return g;
}

// Upper bound on the gradient's Lipschitz constant: the trace bound on the
// Hessian. Infinite for the nonsmooth hinge loss.
inline double smoothness_bound(const LossEvent& f) {
  if (f.family == LossFamily::kHinge) {
    return std::numeric_limits<double>::infinity();
  }
  double sum_sq = 0.0;
  for (int j = 0; j < f.batch_size(); ++j) sum_sq += f.sample(j).squaredNorm();
  if (f.batch_average) sum_sq /= f.batch_size();
  return (f.family == LossFamily::kLeastSquares ? 2.0 : 0.25) * sum_sq;
}

// Contiguous coordinate block [begin, begin + size).
struct BlockRange {
  int begin = 0;
  int size = 0;

  int end() const { return begin + size; }
  bool contains(int k) const { return k >= begin && k < end(); }
};

// Additive gradient error ξ, i.i.d. Gaussian per coordinate.
struct GradientNoiseSpec {
  double variance = 0.1;
};

// Block of ∇f(y) plus i.i.d. N(0, v) noise: the node's unbiased local signal.
inline Eigen::VectorXd noisy_block_grad(const LossEvent& f,
                                        const Eigen::VectorXd& y,
                                        BlockRange block,
                                        const GradientNoiseSpec& noise,
                                        CounterRng& rng) {
  if (block.begin < 0 || block.size < 1 || block.end() > y.size()) {
    throw std::invalid_argument("gradient block outside [0, d)");
  }
  if (noise.variance < 0.0) {
    throw std::invalid_argument("gradient noise variance must be >= 0");
  }
  Eigen::VectorXd g = loss_grad(f, y).segment(block.begin, block.size);
  if (noise.variance > 0.0) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.variance));
    for (int k = 0; k < block.size; ++k) g[k] += gauss(rng);
  }
  return g;
}

}  // namespace dpsda
