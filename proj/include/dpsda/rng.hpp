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

#include <cstdint>
#include <limits>

namespace dpsda {

// Tags that separate independent randomness consumers. Two streams that differ
// only in their tag are statistically independent.
enum class Purpose : std::uint64_t {
  kLaplace = 1,
  kGradientNoise = 2,
  kStream = 3,
  kTarget = 4,
  kSplit = 5,
  kBatch = 6,
  kAuditPerturb = 7,
  kDataset = 8,
};

namespace internal {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t Combine(std::uint64_t h, std::uint64_t v) {
  return Mix64(h ^ (Mix64(v + kGolden) + kGolden + (h << 6) + (h >> 2)));
}

}  // namespace internal

// Identifies one Monte-Carlo replicate of one experiment.
struct RngKey {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;
};

// Counter-based generator: output k is a pure function of (key, k). A stream
// is addressed by (master seed, replicate, node, round, purpose), so any draw
// can be reproduced without replaying earlier draws, and coupled runs share
// every stream they do not explicitly re-key.
//
// Satisfies UniformRandomBitGenerator, so it plugs into <random>
// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  CounterRng(RngKey key, std::uint64_t node, std::uint64_t round,
             Purpose purpose)
      : key_(Derive(key, node, round, purpose)) {}

  static constexpr std::uint64_t Derive(RngKey key, std::uint64_t node,
                                        std::uint64_t round, Purpose purpose) {
    std::uint64_t h = internal::Mix64(key.master_seed ^ 0x6a09e667f3bcc908ULL);
    h = internal::Combine(h, key.replicate);
    h = internal::Combine(h, node);
    h = internal::Combine(h, round);
    h = internal::Combine(h, static_cast<std::uint64_t>(purpose));
    return h;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() {
    ++counter_;
    return internal::Mix64(key_ + counter_ * internal::kGolden);
  }

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double Uniform01() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dpsda
