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
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace dpsda {

// Feasible set χⁿ for the stacked decision: a per-coordinate box, or a
// product of origin-centred Euclidean balls, one per coordinate block (a
// single block is the plain ball).
class ConstraintSet {
 public:
  enum class Kind { kBox, kBall };

  static ConstraintSet Box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != hi.size() || lo.size() == 0) {
      throw std::invalid_argument("box bounds must be nonempty and aligned");
    }
    if (!((hi - lo).array() > 0.0).all()) {
      throw std::invalid_argument("box needs lo < hi in every coordinate");
    }
    ConstraintSet set(Kind::kBox, static_cast<int>(lo.size()));
    set.lo_ = std::move(lo);
    set.hi_ = std::move(hi);
    return set;
  }

  static ConstraintSet UniformBox(int d, double lo, double hi) {
    return Box(Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi));
  }

  static ConstraintSet Ball(int d, double radius) {
    return BlockBalls(std::vector<int>{d}, radius);
  }

  // Each consecutive block of the given sizes lies in its own ball.
  static ConstraintSet BlockBalls(std::vector<int> block_sizes, double radius) {
    if (block_sizes.empty()) throw std::invalid_argument("ball needs a block");
    int d = 0;
    for (int size : block_sizes) {
      if (size < 1) throw std::invalid_argument("ball dimension must be >= 1");
      d += size;
    }
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be > 0");
    ConstraintSet set(Kind::kBall, d);
    set.radius_ = radius;
    set.blocks_ = std::move(block_sizes);
    return set;
  }

  Kind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }
  double radius() const { return radius_; }
  const std::vector<int>& blocks() const { return blocks_; }

  // D_χ, the diameter of one node's set: the widest coordinate interval for
  // a box (heterogeneous bounds use the maximum), 2B for balls.
  double diameter() const {
    if (kind_ == Kind::kBall) return 2.0 * radius_;
    return (hi_ - lo_).maxCoeff();
  }

  // C_ψ: the exact maximum of ½‖x‖² over the set.
  double psi_bound() const {
    if (kind_ == Kind::kBall) return 0.5 * radius_ * radius_ * blocks_.size();
    return 0.5 * lo_.cwiseAbs2().cwiseMax(hi_.cwiseAbs2()).sum();
  }

  // Euclidean projection onto the set.
  Eigen::VectorXd Project(const Eigen::VectorXd& x) const {
    if (x.size() != dimension_) {
      throw std::invalid_argument("projection: dimension mismatch");
    }
    if (kind_ == Kind::kBox) return x.cwiseMax(lo_).cwiseMin(hi_);
    Eigen::VectorXd out = x;
    int begin = 0;
    for (int size : blocks_) {
      auto block = out.segment(begin, size);
      const double norm = block.norm();
      if (norm > radius_) block *= radius_ / norm;
      begin += size;
    }
    return out;
  }

  bool Contains(const Eigen::VectorXd& x, double tol = 1e-12) const {
    if (x.size() != dimension_) return false;
    if (kind_ == Kind::kBox) {
      return ((x - lo_).array() >= -tol).all() && ((hi_ - x).array() >= -tol).all();
    }
    int begin = 0;
    for (int size : blocks_) {
      if (!(x.segment(begin, size).norm() <= radius_ + tol)) return false;
      begin += size;
    }
    return true;
  }

 private:
  ConstraintSet(Kind kind, int dimension) : kind_(kind), dimension_(dimension) {}

  Kind kind_;
  int dimension_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  double radius_ = 0.0;
  std::vector<int> blocks_;
};

// Proximal function ψ(x) = ½‖x‖², 1-strongly convex.
inline double psi(const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); }

// argmin over the set of ⟨z, x⟩ + ψ(x)/α. With ψ = ½‖·‖² the minimiser is
// the projection of −α·z.
inline Eigen::VectorXd prox_project(const Eigen::VectorXd& z, double alpha,
                                    const ConstraintSet& set) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  return set.Project(-alpha * z);
}

// α(t) = 1/√t, extended with α(0) = 1.
inline double step_alpha(std::int64_t t) {
  if (t < 0) throw std::invalid_argument("round index must be >= 0");
  if (t == 0) return 1.0;
  return 1.0 / std::sqrt(static_cast<double>(t));
}

}  // namespace dpsda
