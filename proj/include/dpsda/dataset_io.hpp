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
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <Eigen/Dense>

#include "dpsda/error.hpp"
#include "dpsda/loss.hpp"
#include "dpsda/rng.hpp"

namespace dpsda {

// One LIBSVM line: label and strictly increasing 1-based feature indices.
struct SparseSample {
  double label = 0.0;
  std::vector<int> indices;
  std::vector<double> values;

  friend bool operator==(const SparseSample&, const SparseSample&) = default;
};

// Dense ±1-labelled data, rows are samples.
struct DenseDataset {
  std::shared_ptr<const RowMatrix> features;
  Eigen::VectorXd labels;

  int dimension() const { return features ? static_cast<int>(features->cols()) : 0; }
  int size() const { return static_cast<int>(labels.size()); }
};

namespace internal {

inline double ParseDouble(const std::string& text, std::size_t line,
                          const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw DataError(fmt::format("libsvm line {}: bad {} '{}'", line, what, text));
  }
  return value;
}

}  // namespace internal

inline std::vector<SparseSample> parse_libsvm_samples(std::istream& in) {
  std::vector<SparseSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream tokens(line);
    std::string token;
    tokens >> token;
    SparseSample sample;
    sample.label = internal::ParseDouble(token, line_no, "label");
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0) {
        throw DataError(
            fmt::format("libsvm line {}: bad token '{}'", line_no, token));
      }
      const double raw_index =
          internal::ParseDouble(token.substr(0, colon), line_no, "index");
      if (raw_index < 1.0 || raw_index != std::floor(raw_index) ||
          raw_index > 1e9) {
        throw DataError(
            fmt::format("libsvm line {}: bad index in '{}'", line_no, token));
      }
      const int index = static_cast<int>(raw_index);
      if (!sample.indices.empty() && index <= sample.indices.back()) {
        throw DataError(fmt::format(
            "libsvm line {}: indices must be strictly increasing", line_no));
      }
      sample.indices.push_back(index);
      sample.values.push_back(
          internal::ParseDouble(token.substr(colon + 1), line_no, "value"));
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

inline std::string serialize_libsvm(std::span<const SparseSample> samples) {
  std::string out;
  for (const SparseSample& s : samples) {
    out += fmt::format("{}", s.label);
    for (std::size_t e = 0; e < s.indices.size(); ++e) {
      out += fmt::format(" {}:{}", s.indices[e], s.values[e]);
    }
    out += '\n';
  }
  return out;
}

// 1 or +1 → +1 (poisonous in the mushroom copy), 2, 0 or −1 → −1.
inline double map_binary_label(double raw) {
  if (raw == 1.0) return 1.0;
  if (raw == 2.0 || raw == 0.0 || raw == -1.0) return -1.0;
  throw DataError(fmt::format("unsupported binary label {}", raw));
}

inline DenseDataset densify(std::span<const SparseSample> samples, int d) {
  if (d < 1) throw ConfigError("dataset dimension d must be >= 1");
  auto features = std::make_shared<RowMatrix>(RowMatrix::Zero(
      static_cast<Eigen::Index>(samples.size()), d));
  Eigen::VectorXd labels(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const SparseSample& s = samples[r];
    labels[static_cast<Eigen::Index>(r)] = map_binary_label(s.label);
    for (std::size_t e = 0; e < s.indices.size(); ++e) {
      if (s.indices[e] > d) {
        throw DataError(fmt::format(
            "libsvm sample {}: index {} exceeds d = {}", r + 1, s.indices[e], d));
      }
      (*features)(static_cast<Eigen::Index>(r), s.indices[e] - 1) = s.values[e];
    }
  }
  return DenseDataset{std::move(features), std::move(labels)};
}

inline DenseDataset parse_libsvm(std::istream& in, int d) {
  const std::vector<SparseSample> samples = parse_libsvm_samples(in);
  return densify(samples, d);
}

namespace internal {

inline std::uint32_t ReadBigEndian32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw DataError(fmt::format("idx: truncated header ({})", what));
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace internal

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Reads an IDX image/label pair and keeps the two requested digits:
// digits.first → −1, digits.second → +1. Pixels are scaled to [0, 1].
inline DenseDataset read_idx(std::istream& images, std::istream& labels,
                             std::pair<int, int> digits = {6, 8}) {
  if (internal::ReadBigEndian32(images, "image magic") != kIdxImageMagic) {
    throw DataError("idx: bad image magic (expected 0x00000803)");
  }
  const std::uint32_t count = internal::ReadBigEndian32(images, "image count");
  const std::uint32_t rows = internal::ReadBigEndian32(images, "rows");
  const std::uint32_t cols = internal::ReadBigEndian32(images, "cols");
  if (internal::ReadBigEndian32(labels, "label magic") != kIdxLabelMagic) {
    throw DataError("idx: bad label magic (expected 0x00000801)");
  }
  const std::uint32_t label_count =
      internal::ReadBigEndian32(labels, "label count");
  if (label_count != count) {
    throw DataError(fmt::format("idx: {} images but {} labels", count, label_count));
  }
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
    throw DataError("idx: implausible image dimensions");
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> label_bytes(count);
  if (count > 0 &&
      !labels.read(reinterpret_cast<char*>(label_bytes.data()), count)) {
    throw DataError("idx: truncated label payload");
  }
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < count; ++r) {
    if (label_bytes[r] == digits.first || label_bytes[r] == digits.second) {
      keep.push_back(r);
    }
  }
  auto features = std::make_shared<RowMatrix>(
      static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(pixels));
  Eigen::VectorXd out_labels(static_cast<Eigen::Index>(keep.size()));
  std::vector<unsigned char> image(pixels);
  std::size_t next = 0;
  for (std::size_t r = 0; r < count; ++r) {
    if (!images.read(reinterpret_cast<char*>(image.data()),
                     static_cast<std::streamsize>(pixels))) {
      throw DataError(fmt::format("idx: truncated image payload at image {}", r));
    }
    if (next < keep.size() && keep[next] == r) {
      const auto row = static_cast<Eigen::Index>(next);
      for (std::size_t p = 0; p < pixels; ++p) {
        (*features)(row, static_cast<Eigen::Index>(p)) = image[p] / 255.0;
      }
      out_labels[row] = label_bytes[r] == digits.second ? 1.0 : -1.0;
      ++next;
    }
  }
  return DenseDataset{std::move(features), std::move(out_labels)};
}

struct DataSplit {
  std::vector<int> train;
  std::vector<int> test;
};

// Seeded shuffle, then the first train_size rows train and the next
// test_size rows test (test_size = 0 means all remaining rows).
inline DataSplit split_dataset(int size, int train_size, int test_size,
                               CounterRng rng) {
  if (train_size < 1 || test_size < 0 || train_size + test_size > size) {
    throw ConfigError(fmt::format(
        "train_size={} test_size={} do not fit a dataset of {} samples",
        train_size, test_size, size));
  }
  std::vector<int> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  DataSplit split;
  split.train.assign(order.begin(), order.begin() + train_size);
  const int test_end = test_size == 0 ? size : train_size + test_size;
  split.test.assign(order.begin() + train_size, order.begin() + test_end);
  return split;
}

// Batch of round t drawn uniformly without replacement from the training
// rows; rounds are independent of each other.
inline LossEvent sample_batch(const DenseDataset& data,
                              std::span<const int> train, int batch_size,
                              CounterRng rng) {
  if (batch_size < 1 || batch_size > static_cast<int>(train.size())) {
    throw ConfigError(fmt::format("batch_size={} must be in [1, {}]",
                                  batch_size, train.size()));
  }
  std::vector<int> pool(train.begin(), train.end());
  for (int j = 0; j < batch_size; ++j) {
    std::uniform_int_distribution<int> pick(j, static_cast<int>(pool.size()) - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  pool.resize(batch_size);
  LossEvent event;
  event.family = LossFamily::kLogistic;
  event.features = data.features;
  event.labels.resize(batch_size);
  for (int j = 0; j < batch_size; ++j) event.labels[j] = data.labels[pool[j]];
  event.rows = std::move(pool);
  return event;
}

inline std::vector<LossEvent> batch_stream(const DenseDataset& data, int horizon,
                                           int batch_size,
                                           const DataSplit& split, RngKey key) {
  std::vector<LossEvent> events;
  events.reserve(std::max(horizon, 0));
  for (int t = 0; t < horizon; ++t) {
    events.push_back(sample_batch(data, split.train, batch_size,
                                  CounterRng(key, 0, t, Purpose::kBatch)));
  }
  return events;
}

// Fraction of rows with sign(xᵀa) = b. A zero margin counts as an error.
inline double accuracy(const Eigen::VectorXd& x, const DenseDataset& data,
                       std::span<const int> rows) {
  if (rows.empty()) return 0.0;
  int correct = 0;
  for (int r : rows) {
    const double margin = data.labels[r] * data.features->row(r).dot(x);
    if (margin > 0.0) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

inline double accuracy(const Eigen::VectorXd& x, const DenseDataset& data) {
  std::vector<int> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return accuracy(x, data, all);
}

// Two Gaussian classes: a ~ N(b·μ, I) with μ_k ~ N(0, 1/4), b = ±1 fair.
inline DenseDataset synthetic_classification(RngKey key, int samples, int d) {
  if (samples < 1 || d < 1) {
    throw ConfigError("synthetic dataset needs samples >= 1 and d >= 1");
  }
  CounterRng rng(key, 0, 0, Purpose::kDataset);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd mean(d);
  for (int k = 0; k < d; ++k) mean[k] = 0.5 * gauss(rng);
  auto features = std::make_shared<RowMatrix>(samples, d);
  Eigen::VectorXd labels(samples);
  std::bernoulli_distribution coin(0.5);
  for (int r = 0; r < samples; ++r) {
    const double b = coin(rng) ? 1.0 : -1.0;
    labels[r] = b;
    for (int k = 0; k < d; ++k) (*features)(r, k) = b * mean[k] + gauss(rng);
  }
  return DenseDataset{std::move(features), std::move(labels)};
}

}  // namespace dpsda
