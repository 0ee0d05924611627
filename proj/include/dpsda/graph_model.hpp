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
#include <istream>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpsda/error.hpp"

namespace dpsda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A communication link. For directed schedules `from` sends to `to`; for
// undirected schedules the pair is stored with from < to.
struct Edge {
  int from = 0;
  int to = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using EdgeList = std::vector<Edge>;

// A periodic sequence of edge sets: G(t) uses rounds()[t mod P]. Self-loops
// are never stored; every node is implicitly its own neighbor.
class TopologySchedule {
 public:
  TopologySchedule(int n, int window_b, bool directed,
                   std::vector<EdgeList> rounds)
      : n_(n), window_b_(window_b), directed_(directed),
        rounds_(std::move(rounds)) {
    if (n_ < 1) throw std::invalid_argument("schedule needs n >= 1");
    if (window_b_ < 1) throw std::invalid_argument("schedule needs B >= 1");
    if (rounds_.empty()) throw std::invalid_argument("schedule needs P >= 1");
    for (EdgeList& edges : rounds_) {
      for (Edge& e : edges) {
        if (e.from < 0 || e.from >= n_ || e.to < 0 || e.to >= n_) {
          throw std::invalid_argument("edge endpoint outside [0, n)");
        }
        if (e.from == e.to) {
          throw std::invalid_argument("self-loops are implicit, not stored");
        }
        if (!directed_ && e.from > e.to) std::swap(e.from, e.to);
      }
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
  }

  int n() const { return n_; }
  int period() const { return static_cast<int>(rounds_.size()); }
  int window() const { return window_b_; }
  bool directed() const { return directed_; }
  const std::vector<EdgeList>& rounds() const { return rounds_; }

  friend bool operator==(const TopologySchedule&,
                         const TopologySchedule&) = default;

 private:
  int n_;
  int window_b_;
  bool directed_;
  std::vector<EdgeList> rounds_;
};

inline const EdgeList& graph_at(const TopologySchedule& schedule,
                                std::int64_t t) {
  if (t < 0) throw std::invalid_argument("round index must be >= 0");
  return schedule.rounds()[static_cast<std::size_t>(t % schedule.period())];
}

namespace internal {

inline std::vector<bool> Reachable(int n, const EdgeList& edges, bool reverse,
                                   bool undirected) {
  std::vector<std::vector<int>> adj(n);
  for (const Edge& e : edges) {
    if (undirected || !reverse) adj[e.from].push_back(e.to);
    if (undirected || reverse) adj[e.to].push_back(e.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  seen[0] = true;
  frontier.push(0);
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        frontier.push(w);
      }
    }
  }
  return seen;
}

inline bool AllTrue(const std::vector<bool>& v) {
  return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
}

}  // namespace internal

inline bool is_strongly_connected(int n, const EdgeList& edges) {
  return internal::AllTrue(internal::Reachable(n, edges, false, false)) &&
         internal::AllTrue(internal::Reachable(n, edges, true, false));
}

inline bool is_connected_undirected(int n, const EdgeList& edges) {
  return internal::AllTrue(internal::Reachable(n, edges, false, true));
}

// Directed: the union of every B consecutive rounds (cyclically) is strongly
// connected. Undirected: every single round is connected.
inline bool check_window_connectivity(const TopologySchedule& schedule) {
  const int n = schedule.n();
  const int period = schedule.period();
  if (!schedule.directed()) {
    return std::all_of(
        schedule.rounds().begin(), schedule.rounds().end(),
        [n](const EdgeList& edges) { return is_connected_undirected(n, edges); });
  }
  for (int start = 0; start < period; ++start) {
    EdgeList window;
    for (int k = 0; k < schedule.window(); ++k) {
      const EdgeList& edges = schedule.rounds()[(start + k) % period];
      window.insert(window.end(), edges.begin(), edges.end());
    }
    if (!is_strongly_connected(n, window)) return false;
  }
  return true;
}

enum class MatrixKind { kRowStochastic, kColumnStochastic };

// Nonnegative n×n weights with unit row sums (W) or unit column sums (A).
// phi is the smallest positive entry.
class MixingMatrix {
 public:
  static constexpr double kSumTolerance = 1e-12;

  MixingMatrix(Matrix entries, MatrixKind kind)
      : entries_(std::move(entries)), kind_(kind) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
      throw std::invalid_argument("mixing matrix must be square and nonempty");
    }
    if ((entries_.array() < 0.0).any()) {
      throw std::invalid_argument("mixing matrix has a negative entry");
    }
    const Vector sums = kind_ == MatrixKind::kRowStochastic
                            ? Vector(entries_.rowwise().sum())
                            : Vector(entries_.colwise().sum().transpose());
    if ((sums.array() - 1.0).abs().maxCoeff() > kSumTolerance) {
      throw std::invalid_argument("mixing matrix is not stochastic");
    }
    phi_ = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < entries_.size(); ++i) {
      const double v = entries_.data()[i];
      if (v > 0.0) phi_ = std::min(phi_, v);
    }
  }

  const Matrix& entries() const { return entries_; }
  MatrixKind kind() const { return kind_; }
  double phi() const { return phi_; }
  int n() const { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  Matrix entries_;
  MatrixKind kind_;
  double phi_ = 0.0;
};

namespace internal {

inline std::vector<std::vector<int>> UndirectedNeighbors(const EdgeList& edges,
                                                         int n) {
  std::vector<std::vector<int>> nbrs(n);
  for (const Edge& e : edges) {
    nbrs[e.from].push_back(e.to);
    nbrs[e.to].push_back(e.from);
  }
  for (auto& list : nbrs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return nbrs;
}

}  // namespace internal

// [W]_ij = 1/deg_i for j in N_i (self included), zero elsewhere.
inline MixingMatrix uniform_row_weights(const EdgeList& edges, int n) {
  const auto nbrs = internal::UndirectedNeighbors(edges, n);
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double weight = 1.0 / static_cast<double>(nbrs[i].size() + 1);
    w(i, i) = weight;
    for (int j : nbrs[i]) w(i, j) = weight;
  }
  return MixingMatrix(std::move(w), MatrixKind::kRowStochastic);
}

// Symmetric, doubly stochastic weights 1/(1 + max(deg_i, deg_j)), degrees
// counting the node itself.
inline MixingMatrix metropolis_row_weights(const EdgeList& edges, int n) {
  const auto nbrs = internal::UndirectedNeighbors(edges, n);
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const std::size_t deg_i = nbrs[i].size() + 1;
    for (int j : nbrs[i]) {
      const std::size_t deg_j = nbrs[j].size() + 1;
      w(i, j) = 1.0 / static_cast<double>(1 + std::max(deg_i, deg_j));
    }
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : nbrs[i]) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w), MatrixKind::kRowStochastic);
}

// [A]_ij = 1/deg_j^out when j sends to i or j == i.
inline MixingMatrix pushsum_column_weights(const EdgeList& edges, int n) {
  std::vector<std::vector<int>> out(n);
  for (const Edge& e : edges) out[e.from].push_back(e.to);
  Matrix a = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    auto& targets = out[j];
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    const double weight = 1.0 / static_cast<double>(targets.size() + 1);
    a(j, j) = weight;
    for (int i : targets) a(i, j) = weight;
  }
  return MixingMatrix(std::move(a), MatrixKind::kColumnStochastic);
}

enum class Weighting { kUniform, kMetropolis, kPushSum };

inline MixingMatrix make_mixing_matrix(const EdgeList& edges, int n,
                                       Weighting weighting) {
  switch (weighting) {
    case Weighting::kUniform:
      return uniform_row_weights(edges, n);
    case Weighting::kMetropolis:
      return metropolis_row_weights(edges, n);
    case Weighting::kPushSum:
      return pushsum_column_weights(edges, n);
  }
  throw std::invalid_argument("unknown weighting");
}

// One matrix per round of the schedule's period; round t uses entry t mod P.
inline std::vector<MixingMatrix> mixing_period(
    const TopologySchedule& schedule, Weighting weighting) {
  std::vector<MixingMatrix> out;
  out.reserve(schedule.period());
  for (const EdgeList& edges : schedule.rounds()) {
    out.push_back(make_mixing_matrix(edges, schedule.n(), weighting));
  }
  return out;
}

// M(t)·M(t-1)···M(s) where `at(k)` yields M(k). Identity when t == s - 1.
template <typename MatrixAt>
Matrix matrix_window_product(MatrixAt&& at, int n, std::int64_t t,
                             std::int64_t s) {
  if (t < s - 1) {
    throw std::invalid_argument("window product needs t >= s - 1");
  }
  Matrix product = Matrix::Identity(n, n);
  for (std::int64_t k = s; k <= t; ++k) {
    const auto& m = at(k);
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, MixingMatrix>) {
      product = m.entries() * product;
    } else {
      product = m * product;
    }
  }
  return product;
}

// Sequence form: matrices[k] is M(k).
inline Matrix matrix_window_product(std::span<const MixingMatrix> matrices,
                                    std::int64_t t, std::int64_t s) {
  if (matrices.empty()) throw std::invalid_argument("no matrices");
  if (t >= static_cast<std::int64_t>(matrices.size())) {
    throw std::out_of_range("window end beyond the matrix sequence");
  }
  if (s < 0 && t >= s) throw std::out_of_range("window start before round 0");
  return matrix_window_product(
      [&](std::int64_t k) -> const MixingMatrix& { return matrices[k]; },
      matrices.front().n(), t, s);
}

// Period 4: round k carries the ring links i -> i+1 with i ≡ k (mod 4) plus
// the chord k -> k+3 (self-loops dropped). The union of any 4 consecutive
// rounds contains the whole ring. Defaults: 7 nodes, B = 4.
inline TopologySchedule default_directed_schedule(int nodes = 7,
                                                  int window_b = 4) {
  constexpr int kPeriod = 4;
  if (nodes < 1) throw std::invalid_argument("schedule needs n >= 1");
  std::vector<EdgeList> rounds(kPeriod);
  for (int k = 0; k < kPeriod; ++k) {
    for (int i = k; i < nodes; i += kPeriod) {
      if ((i + 1) % nodes != i) rounds[k].push_back({i, (i + 1) % nodes});
    }
    const int from = k % nodes;
    if ((from + 3) % nodes != from) rounds[k].push_back({from, (from + 3) % nodes});
  }
  return TopologySchedule(nodes, window_b, /*directed=*/true, std::move(rounds));
}

// Period 4, every round connected: the undirected ring with the link
// {k+5, k+6} removed, plus the chord {k, k+3}. Default 7 nodes.
inline TopologySchedule default_undirected_schedule(int nodes = 7) {
  constexpr int kPeriod = 4;
  if (nodes < 1) throw std::invalid_argument("schedule needs n >= 1");
  std::vector<EdgeList> rounds(kPeriod);
  for (int k = 0; k < kPeriod; ++k) {
    const int dropped = (k + 5) % nodes;
    for (int i = 0; i < nodes; ++i) {
      if (i != dropped && (i + 1) % nodes != i) {
        rounds[k].push_back({i, (i + 1) % nodes});
      }
    }
    const int from = k % nodes;
    if ((from + 3) % nodes != from) rounds[k].push_back({from, (from + 3) % nodes});
  }
  return TopologySchedule(nodes, 1, /*directed=*/false, std::move(rounds));
}

// Text form:
//   n=<n> P=<P> B=<B> directed=<0|1>
//   one line per round of comma-separated `i->j` (or `i-j`) tokens
inline std::string serialize_schedule(const TopologySchedule& schedule) {
  std::ostringstream out;
  out << "n=" << schedule.n() << " P=" << schedule.period()
      << " B=" << schedule.window()
      << " directed=" << (schedule.directed() ? 1 : 0) << "\n";
  const char* arrow = schedule.directed() ? "->" : "-";
  for (const EdgeList& edges : schedule.rounds()) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (e > 0) out << ",";
      out << edges[e].from << arrow << edges[e].to;
    }
    out << "\n";
  }
  return out.str();
}

namespace internal {

inline std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline int ParseNonNegativeInt(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    throw DataError("schedule: bad " + what + " '" + text + "'");
  }
  if (used != text.size() || value < 0) {
    throw DataError("schedule: bad " + what + " '" + text + "'");
  }
  return value;
}

}  // namespace internal

inline TopologySchedule parse_schedule(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("schedule: missing header");
  int n = -1, period = -1, window = -1, directed = -1;
  std::istringstream fields(header);
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) {
      throw DataError("schedule: bad header field '" + field + "'");
    }
    const std::string key = field.substr(0, eq);
    const int value = internal::ParseNonNegativeInt(field.substr(eq + 1), key);
    if (key == "n") n = value;
    else if (key == "P") period = value;
    else if (key == "B") window = value;
    else if (key == "directed") directed = value;
    else throw DataError("schedule: unknown header field '" + key + "'");
  }
  if (n < 1 || period < 1 || window < 1 || (directed != 0 && directed != 1)) {
    throw DataError("schedule: header needs n, P, B >= 1 and directed=0|1");
  }
  const std::string arrow = directed ? "->" : "-";
  std::vector<EdgeList> rounds(period);
  for (int r = 0; r < period; ++r) {
    std::string line;
    if (!std::getline(in, line)) {
      throw DataError("schedule: expected " + std::to_string(period) +
                      " round lines, got " + std::to_string(r));
    }
    std::istringstream tokens(line);
    std::string token;
    while (std::getline(tokens, token, ',')) {
      token = internal::Trim(token);
      if (token.empty()) continue;
      const auto pos = token.find(arrow);
      if (pos == std::string::npos ||
          (!directed && token.find("->") != std::string::npos)) {
        throw DataError("schedule: bad edge token '" + token + "' on line " +
                        std::to_string(r + 2));
      }
      const int from = internal::ParseNonNegativeInt(
          internal::Trim(token.substr(0, pos)), "edge endpoint");
      const int to = internal::ParseNonNegativeInt(
          internal::Trim(token.substr(pos + arrow.size())), "edge endpoint");
      rounds[r].push_back({from, to});
    }
  }
  try {
    return TopologySchedule(n, window, directed == 1, std::move(rounds));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("schedule: ") + e.what());
  }
}

}  // namespace dpsda
