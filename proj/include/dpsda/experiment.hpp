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
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <Eigen/Dense>

#include "dpsda/bounds.hpp"
#include "dpsda/dataset_io.hpp"
#include "dpsda/engines.hpp"
#include "dpsda/error.hpp"
#include "dpsda/graph_model.hpp"
#include "dpsda/loss.hpp"
#include "dpsda/privacy_mech.hpp"
#include "dpsda/projection.hpp"
#include "dpsda/regret.hpp"
#include "dpsda/rng.hpp"
#include "dpsda/streams.hpp"

namespace dpsda {

using ConfigMap = std::map<std::string, std::string>;

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

// Every key accepted in a config file (and as --<key> on the command line).
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"engine", "c", "c (undirected, circulation) or ps (directed, push-sum)"},
      {"problem", "olr", "olr (online linear regression) or obc (logistic)"},
      {"dataset", "synthetic",
       "synthetic | libsvm:<path> | idx:<images>,<labels> (obc only)"},
      {"n", "7", "number of nodes"},
      {"d", "auto", "decision dimension (auto: 21, 112 for libsvm, 784 for idx)"},
      {"T", "500", "number of rounds"},
      {"B", "4", "connectivity window of the default directed schedule"},
      {"epsilon", "inf,1,0.5,0.2", "comma-separated privacy levels; inf = none"},
      {"sensitivity", "fixed:1", "fixed:<delta0> or theoretical (2 n lhat)"},
      {"lhat", "1", "gradient-norm bound used by theoretical sensitivity"},
      {"alpha", "inv_sqrt", "step rule; only inv_sqrt (1/sqrt(t), alpha(0)=1)"},
      {"grad_noise_var", "0.1", "variance of the additive gradient noise"},
      {"olr_noise_var", "0.2", "variance of the regression label noise"},
      {"replicates", "10", "Monte-Carlo replicates"},
      {"seed", "1", "master seed"},
      {"out", "results", "output directory"},
      {"weights", "uniform", "c engine mixing weights: uniform or metropolis"},
      {"set", "auto", "box:<lo>:<hi> or ball:<radius> (auto: box:-5:5 for olr, "
                      "ball:5 for obc)"},
      {"batch_size", "100", "obc samples per round"},
      {"train_size", "auto", "obc training rows (auto: 6000 libsvm, 8000 idx, "
                             "3/4 synthetic)"},
      {"test_size", "auto", "obc test rows, 0 = rest (auto: 2000 libsvm, rest)"},
      {"synthetic_samples", "2000", "size of the synthetic obc dataset"},
      {"schedule", "default", "default or a schedule file"},
      {"hindsight_stride", "25", "obc hindsight solved every k rounds"},
      {"audit_t0", "400", "audit: perturbed round (1-based)"},
      {"audit_coordinate", "0", "audit: reported coordinate (0-based)"},
      {"gamma_horizon", "0", "rounds used to estimate gamma (0: 10 B P)"},
  };
  return keys;
}

inline ConfigMap default_config_map() {
  ConfigMap m;
  for (const ConfigKey& k : config_keys()) m[k.name] = k.default_value;
  return m;
}

namespace internal {

inline std::string TrimCopy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool IsKnownKey(const std::string& key) {
  for (const ConfigKey& k : config_keys()) {
    if (key == k.name) return true;
  }
  return false;
}

}  // namespace internal

// `key = value` lines; `#` starts a comment.
inline ConfigMap parse_config_text(std::istream& in) {
  ConfigMap m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = internal::TrimCopy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    }
    const std::string key = internal::TrimCopy(line.substr(0, eq));
    if (!internal::IsKnownKey(key)) {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
    m[key] = internal::TrimCopy(line.substr(eq + 1));
  }
  return m;
}

inline ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  return parse_config_text(in);
}

enum class ProblemKind { kOlr, kObc };
enum class DatasetKind { kSynthetic, kLibsvm, kIdx };

struct RunConfig {
  EngineKind engine = EngineKind::kCirculation;
  ProblemKind problem = ProblemKind::kOlr;
  DatasetKind dataset = DatasetKind::kSynthetic;
  std::string dataset_path;
  std::string labels_path;
  int n = 7;
  int d = 21;
  int T = 500;
  int B = 4;
  // nullopt = non-private.
  std::vector<std::optional<double>> epsilons;
  SensitivityMode sensitivity = SensitivityMode::kFixed;
  double delta0 = 1.0;
  double lhat = 1.0;
  double grad_noise_var = 0.1;
  double olr_noise_var = 0.2;
  int replicates = 10;
  std::uint64_t seed = 1;
  std::string out = "results";
  Weighting weights = Weighting::kUniform;
  bool ball = false;
  double box_lo = -5.0;
  double box_hi = 5.0;
  double radius = 5.0;
  int batch_size = 100;
  int train_size = 0;
  int test_size = 0;
  int synthetic_samples = 2000;
  std::string schedule = "default";
  int hindsight_stride = 25;
  int audit_t0 = 400;
  int audit_coordinate = 0;
  int gamma_horizon = 0;

  // Overlays `overrides` on the defaults and validates.
  static RunConfig FromMap(const ConfigMap& overrides);
  // Resolved key = value form; FromMap(ToMap()) reproduces the config.
  ConfigMap ToMap() const;
  // χⁿ: the box, or one radius-`radius` ball per node block.
  ConstraintSet Set() const {
    if (!ball) return ConstraintSet::UniformBox(d, box_lo, box_hi);
    const BlockPartition partition = BlockPartition::Equal(d, n);
    std::vector<int> sizes;
    for (int i = 0; i < n; ++i) sizes.push_back(partition.block(i).size);
    return ConstraintSet::BlockBalls(std::move(sizes), radius);
  }
};

namespace internal {

inline long long ParseIntKey(const ConfigMap& m, const std::string& key,
                             long long lo) {
  const std::string& text = m.at(key);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || v < lo) {
    throw ConfigError(fmt::format("config key '{}': expected an integer >= {}, got '{}'",
                                  key, lo, text));
  }
  return v;
}

inline double ParseReal(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || std::isnan(v)) {
    throw ConfigError(fmt::format("config key '{}': expected a number, got '{}'",
                                  key, text));
  }
  return v;
}

inline std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(TrimCopy(part));
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

inline std::string FormatEpsilons(const std::vector<std::optional<double>>& e) {
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) out += ',';
    out += e[i] ? fmt::format("{}", *e[i]) : "inf";
  }
  return out;
}

}  // namespace internal

inline std::string epsilon_label(const std::optional<double>& epsilon) {
  return epsilon ? fmt::format("{}", *epsilon) : "inf";
}

inline RunConfig RunConfig::FromMap(const ConfigMap& overrides) {
  ConfigMap m = default_config_map();
  for (const auto& [key, value] : overrides) {
    if (!internal::IsKnownKey(key)) {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
    m[key] = value;
  }
  RunConfig c;
  const std::string& engine = m["engine"];
  if (engine == "c") {
    c.engine = EngineKind::kCirculation;
  } else if (engine == "ps") {
    c.engine = EngineKind::kPushSum;
  } else {
    throw ConfigError(fmt::format("config key 'engine': expected c or ps, got '{}'", engine));
  }
  const std::string& problem = m["problem"];
  if (problem == "olr") {
    c.problem = ProblemKind::kOlr;
  } else if (problem == "obc") {
    c.problem = ProblemKind::kObc;
  } else {
    throw ConfigError(fmt::format("config key 'problem': expected olr or obc, got '{}'", problem));
  }
  const std::string& dataset = m["dataset"];
  if (dataset == "synthetic") {
    c.dataset = DatasetKind::kSynthetic;
  } else if (dataset.rfind("libsvm:", 0) == 0 && dataset.size() > 7) {
    c.dataset = DatasetKind::kLibsvm;
    c.dataset_path = dataset.substr(7);
  } else if (dataset.rfind("idx:", 0) == 0) {
    const auto parts = internal::Split(dataset.substr(4), ',');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
      throw ConfigError("config key 'dataset': expected idx:<images>,<labels>");
    }
    c.dataset = DatasetKind::kIdx;
    c.dataset_path = parts[0];
    c.labels_path = parts[1];
  } else {
    throw ConfigError(fmt::format(
        "config key 'dataset': expected synthetic, libsvm:<path> or "
        "idx:<images>,<labels>, got '{}'", dataset));
  }
  if (c.problem == ProblemKind::kOlr && c.dataset != DatasetKind::kSynthetic) {
    throw ConfigError("config key 'dataset': olr streams are synthetic only");
  }

  c.n = static_cast<int>(internal::ParseIntKey(m, "n", 1));
  if (m["d"] == "auto") {
    c.d = c.dataset == DatasetKind::kLibsvm ? 112
          : c.dataset == DatasetKind::kIdx  ? 784
                                            : 21;
  } else {
    c.d = static_cast<int>(internal::ParseIntKey(m, "d", 1));
  }
  if (c.dataset == DatasetKind::kIdx && c.d != 784) {
    throw ConfigError("config key 'd': idx datasets have d = 784");
  }
  if (c.n > c.d) {
    throw ConfigError(fmt::format("config keys 'n'/'d': need n <= d, got n={} d={}", c.n, c.d));
  }
  c.T = static_cast<int>(internal::ParseIntKey(m, "T", 1));
  c.B = static_cast<int>(internal::ParseIntKey(m, "B", 1));

  c.epsilons.clear();
  for (const std::string& token : internal::Split(m["epsilon"], ',')) {
    if (token == "inf" || token == "none") {
      c.epsilons.push_back(std::nullopt);
      continue;
    }
    const double e = internal::ParseReal("epsilon", token);
    if (!(e > 0.0)) {
      throw ConfigError(fmt::format("config key 'epsilon': values must be > 0, got '{}'", token));
    }
    c.epsilons.push_back(std::isinf(e) ? std::nullopt : std::optional<double>(e));
  }
  if (c.epsilons.empty()) throw ConfigError("config key 'epsilon': empty list");

  const std::string& sens = m["sensitivity"];
  if (sens == "theoretical") {
    c.sensitivity = SensitivityMode::kTheoretical;
  } else if (sens.rfind("fixed:", 0) == 0) {
    c.sensitivity = SensitivityMode::kFixed;
    c.delta0 = internal::ParseReal("sensitivity", sens.substr(6));
    if (!(c.delta0 > 0.0) || std::isinf(c.delta0)) {
      throw ConfigError("config key 'sensitivity': fixed sensitivity must be finite and > 0");
    }
  } else {
    throw ConfigError(fmt::format(
        "config key 'sensitivity': expected fixed:<delta0> or theoretical, got '{}'", sens));
  }
  c.lhat = internal::ParseReal("lhat", m["lhat"]);
  if (!(c.lhat > 0.0) || std::isinf(c.lhat)) {
    throw ConfigError("config key 'lhat': must be finite and > 0");
  }
  if (m["alpha"] != "inv_sqrt") {
    throw ConfigError(fmt::format("config key 'alpha': only inv_sqrt is supported, got '{}'",
                                  m["alpha"]));
  }
  c.grad_noise_var = internal::ParseReal("grad_noise_var", m["grad_noise_var"]);
  c.olr_noise_var = internal::ParseReal("olr_noise_var", m["olr_noise_var"]);
  if (!(c.grad_noise_var >= 0.0) || std::isinf(c.grad_noise_var)) {
    throw ConfigError("config key 'grad_noise_var': must be finite and >= 0");
  }
  if (!(c.olr_noise_var >= 0.0) || std::isinf(c.olr_noise_var)) {
    throw ConfigError("config key 'olr_noise_var': must be finite and >= 0");
  }
  c.replicates = static_cast<int>(internal::ParseIntKey(m, "replicates", 1));
  c.seed = static_cast<std::uint64_t>(internal::ParseIntKey(m, "seed", 0));
  c.out = m["out"];
  if (c.out.empty()) throw ConfigError("config key 'out': must not be empty");

  const std::string& weights = m["weights"];
  if (weights == "uniform") {
    c.weights = Weighting::kUniform;
  } else if (weights == "metropolis") {
    c.weights = Weighting::kMetropolis;
  } else {
    throw ConfigError(fmt::format(
        "config key 'weights': expected uniform or metropolis, got '{}'", weights));
  }
  if (c.engine == EngineKind::kPushSum) {
    if (c.weights != Weighting::kUniform) {
      throw ConfigError("config key 'weights': the ps engine always uses push-sum weights");
    }
    c.weights = Weighting::kPushSum;
  }

  std::string set = m["set"];
  if (set == "auto") set = c.problem == ProblemKind::kOlr ? "box:-5:5" : "ball:5";
  const auto set_parts = internal::Split(set, ':');
  if (set_parts.size() == 3 && set_parts[0] == "box") {
    c.ball = false;
    c.box_lo = internal::ParseReal("set", set_parts[1]);
    c.box_hi = internal::ParseReal("set", set_parts[2]);
    if (!(c.box_lo <= 0.0 && 0.0 <= c.box_hi) || std::isinf(c.box_lo) ||
        std::isinf(c.box_hi)) {
      throw ConfigError("config key 'set': box must be finite and contain 0");
    }
  } else if (set_parts.size() == 2 && set_parts[0] == "ball") {
    c.ball = true;
    c.radius = internal::ParseReal("set", set_parts[1]);
    if (!(c.radius > 0.0) || std::isinf(c.radius)) {
      throw ConfigError("config key 'set': ball radius must be finite and > 0");
    }
  } else {
    throw ConfigError(fmt::format(
        "config key 'set': expected box:<lo>:<hi> or ball:<radius>, got '{}'", set));
  }

  c.batch_size = static_cast<int>(internal::ParseIntKey(m, "batch_size", 1));
  c.synthetic_samples =
      static_cast<int>(internal::ParseIntKey(m, "synthetic_samples", 1));
  if (m["train_size"] == "auto") {
    c.train_size = c.dataset == DatasetKind::kLibsvm ? 6000
                   : c.dataset == DatasetKind::kIdx  ? 8000
                                                     : c.synthetic_samples * 3 / 4;
  } else {
    c.train_size = static_cast<int>(internal::ParseIntKey(m, "train_size", 1));
  }
  if (m["test_size"] == "auto") {
    c.test_size = c.dataset == DatasetKind::kLibsvm ? 2000 : 0;
  } else {
    c.test_size = static_cast<int>(internal::ParseIntKey(m, "test_size", 0));
  }
  if (c.problem == ProblemKind::kObc && c.batch_size > c.train_size) {
    throw ConfigError(fmt::format(
        "config keys 'batch_size'/'train_size': batch {} exceeds {} training rows",
        c.batch_size, c.train_size));
  }
  if (c.dataset == DatasetKind::kSynthetic && c.problem == ProblemKind::kObc &&
      c.train_size + c.test_size > c.synthetic_samples) {
    throw ConfigError("config keys 'train_size'/'test_size': exceed synthetic_samples");
  }
  c.schedule = m["schedule"];
  if (c.schedule.empty()) throw ConfigError("config key 'schedule': must not be empty");
  c.hindsight_stride =
      static_cast<int>(internal::ParseIntKey(m, "hindsight_stride", 1));
  c.audit_t0 = static_cast<int>(internal::ParseIntKey(m, "audit_t0", 1));
  c.audit_coordinate =
      static_cast<int>(internal::ParseIntKey(m, "audit_coordinate", 0));
  if (c.audit_coordinate >= c.d) {
    throw ConfigError(fmt::format("config key 'audit_coordinate': must be < d = {}", c.d));
  }
  c.gamma_horizon = static_cast<int>(internal::ParseIntKey(m, "gamma_horizon", 0));
  return c;
}

inline ConfigMap RunConfig::ToMap() const {
  ConfigMap m;
  m["engine"] = engine == EngineKind::kPushSum ? "ps" : "c";
  m["problem"] = problem == ProblemKind::kObc ? "obc" : "olr";
  m["dataset"] = dataset == DatasetKind::kLibsvm ? "libsvm:" + dataset_path
                 : dataset == DatasetKind::kIdx
                     ? "idx:" + dataset_path + "," + labels_path
                     : "synthetic";
  m["n"] = fmt::format("{}", n);
  m["d"] = fmt::format("{}", d);
  m["T"] = fmt::format("{}", T);
  m["B"] = fmt::format("{}", B);
  m["epsilon"] = internal::FormatEpsilons(epsilons);
  m["sensitivity"] = sensitivity == SensitivityMode::kTheoretical
                         ? "theoretical"
                         : fmt::format("fixed:{}", delta0);
  m["lhat"] = fmt::format("{}", lhat);
  m["alpha"] = "inv_sqrt";
  m["grad_noise_var"] = fmt::format("{}", grad_noise_var);
  m["olr_noise_var"] = fmt::format("{}", olr_noise_var);
  m["replicates"] = fmt::format("{}", replicates);
  m["seed"] = fmt::format("{}", seed);
  m["out"] = out;
  m["weights"] = weights == Weighting::kMetropolis ? "metropolis" : "uniform";
  m["set"] = ball ? fmt::format("ball:{}", radius)
                  : fmt::format("box:{}:{}", box_lo, box_hi);
  m["batch_size"] = fmt::format("{}", batch_size);
  m["train_size"] = fmt::format("{}", train_size);
  m["test_size"] = fmt::format("{}", test_size);
  m["synthetic_samples"] = fmt::format("{}", synthetic_samples);
  m["schedule"] = schedule;
  m["hindsight_stride"] = fmt::format("{}", hindsight_stride);
  m["audit_t0"] = fmt::format("{}", audit_t0);
  m["audit_coordinate"] = fmt::format("{}", audit_coordinate);
  m["gamma_horizon"] = fmt::format("{}", gamma_horizon);
  return m;
}

inline TopologySchedule load_schedule(const RunConfig& c) {
  const bool directed = c.engine == EngineKind::kPushSum;
  if (c.schedule == "default") {
    return directed ? default_directed_schedule(c.n, c.B)
                    : default_undirected_schedule(c.n);
  }
  std::ifstream in(c.schedule);
  if (!in) throw DataError(fmt::format("cannot open schedule '{}'", c.schedule));
  TopologySchedule s = parse_schedule(in);
  if (s.n() != c.n) {
    throw ConfigError(fmt::format("config key 'schedule': file has n={}, config n={}",
                                  s.n(), c.n));
  }
  return s;
}

// Data shared read-only by all replicates (OBC only).
struct ProblemData {
  std::optional<DenseDataset> dataset;
};

inline ProblemData load_problem(const RunConfig& c) {
  ProblemData p;
  if (c.problem != ProblemKind::kObc) return p;
  switch (c.dataset) {
    case DatasetKind::kSynthetic:
      p.dataset = synthetic_classification(RngKey{c.seed, 0}, c.synthetic_samples, c.d);
      break;
    case DatasetKind::kLibsvm: {
      std::ifstream in(c.dataset_path);
      if (!in) {
        throw DataError(fmt::format(
            "cannot open libsvm file '{}' (download the LIBSVM mushrooms file "
            "and pass dataset=libsvm:<path>)", c.dataset_path));
      }
      p.dataset = parse_libsvm(in, c.d);
      break;
    }
    case DatasetKind::kIdx: {
      std::ifstream images(c.dataset_path, std::ios::binary);
      std::ifstream labels(c.labels_path, std::ios::binary);
      if (!images || !labels) {
        throw DataError(fmt::format(
            "cannot open idx files '{}', '{}' (download the MNIST training "
            "images/labels, uncompressed)", c.dataset_path, c.labels_path));
      }
      p.dataset = read_idx(images, labels, {6, 8});
      break;
    }
  }
  if (c.train_size + c.test_size > p.dataset->size()) {
    throw DataError(fmt::format("dataset has {} samples, fewer than train_size + test_size = {}",
                                p.dataset->size(), c.train_size + c.test_size));
  }
  return p;
}

// One replicate's loss stream plus what is needed to build its neighbour.
struct ReplicateStream {
  std::vector<LossEvent> events;
  Eigen::VectorXd target;  // OLR only
  DataSplit split;         // OBC only
};

inline ReplicateStream make_stream(const RunConfig& c, const ProblemData& p,
                                   RngKey key) {
  ReplicateStream s;
  if (c.problem == ProblemKind::kOlr) {
    OlrStream olr = synth_olr_stream(key, c.d, c.T, c.olr_noise_var);
    s.events = std::move(olr.events);
    s.target = std::move(olr.target);
    return s;
  }
  s.split = split_dataset(p.dataset->size(), c.train_size, c.test_size,
                          CounterRng(key, 0, 0, Purpose::kSplit));
  s.events = batch_stream(*p.dataset, c.T, c.batch_size, s.split, key);
  return s;
}

// The adjacent stream: identical except that round t0 (1-based) is redrawn
// from an independent sub-stream.
inline std::vector<LossEvent> neighbour_stream(const RunConfig& c,
                                               const ProblemData& p,
                                               const ReplicateStream& s,
                                               RngKey key, int t0) {
  if (t0 < 1 || t0 > static_cast<int>(s.events.size())) {
    throw ConfigError(fmt::format("config key 'audit_t0': must be in [1, T], got {}", t0));
  }
  std::vector<LossEvent> events = s.events;
  const int r = t0 - 1;
  events[r] = c.problem == ProblemKind::kOlr
                  ? olr_event(key, r, s.target, c.olr_noise_var,
                              Purpose::kAuditPerturb)
                  : sample_batch(*p.dataset, s.split.train, c.batch_size,
                                 CounterRng(key, 0, r, Purpose::kAuditPerturb));
  return events;
}

inline SimulationConfig make_simulation_config(const RunConfig& c,
                                               const TopologySchedule& schedule,
                                               const std::optional<double>& epsilon,
                                               RngKey key) {
  SimulationConfig s;
  s.engine = c.engine;
  s.schedule = schedule;
  s.weighting = c.weights;
  s.partition = BlockPartition::Equal(c.d, c.n);
  s.set = c.Set();
  s.privacy.epsilon = epsilon;
  s.privacy.mode = c.sensitivity;
  s.privacy.fixed_sensitivity = c.delta0;
  s.privacy.lhat = c.lhat;
  s.gradient_noise.variance = c.grad_noise_var;
  s.key = key;
  return s;
}

struct ReplicateOutcome {
  int replicate = 0;
  RegretTrace trace;
  std::vector<double> consensus;
  double max_gradient_norm = 0.0;
  double max_signal_norm = 0.0;
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

// Bound constants shared by all privacy levels of one experiment.
struct BoundEstimates {
  int window = 1;
  double phi = 1.0;
  double lhat = 0.0;  // max observed ‖u_i(t)‖
  double L = 0.0;     // max observed ‖∇f_t(x(t))‖
  double G = 0.0;     // max per-event smoothness constant
  double D_chi = 0.0;
  double C_psi = 0.0;
  std::optional<PushSumConstants> pushsum;
};

struct BoundCheck {
  BoundReport report;
  // ε at which the calibrated mechanism would inject the noise actually used.
  double epsilon_effective = std::numeric_limits<double>::infinity();
  // Max over replicates and rounds of empirical / bound.
  double max_consensus_ratio = 0.0;
  double max_regret_ratio = 0.0;
  double max_running_avg_regret_ratio = 0.0;
  bool dominated() const {
    return max_consensus_ratio <= 1.0 && max_regret_ratio <= 1.0 &&
           max_running_avg_regret_ratio <= 1.0;
  }
};

struct EpsilonOutcome {
  std::optional<double> epsilon;
  double sigma = 0.0;
  std::vector<ReplicateOutcome> replicates;
  BoundCheck bounds;
};

struct ExperimentResult {
  RunConfig config;
  BoundEstimates estimates;
  std::vector<EpsilonOutcome> outcomes;
};

namespace internal {

inline double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / v.size();
}

// Standard error of the mean; 0 for a single value.
inline double StdErrOf(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = MeanOf(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

inline void CheckBounds(const RunConfig& c, const BoundEstimates& est,
                        EpsilonOutcome& o) {
  BoundInputs in;
  in.n = c.n;
  in.B = est.window;
  in.phi = est.phi;
  in.lhat = est.lhat;
  in.L = est.L;
  in.G = est.G;
  in.D_chi = est.D_chi;
  in.C_psi = est.C_psi;
  o.bounds.epsilon_effective =
      o.sigma > 0.0 ? 2.0 * c.n * est.lhat / o.sigma
                    : std::numeric_limits<double>::infinity();
  in.epsilon = o.bounds.epsilon_effective;
  o.bounds.report = compute_bounds(
      in, c.engine == EngineKind::kPushSum ? BoundEngine::kPushSum
                                           : BoundEngine::kCirculation,
      c.T, est.pushsum);
  const BoundReport& r = o.bounds.report;
  for (const ReplicateOutcome& rep : o.replicates) {
    for (int t = 1; t <= rep.trace.rounds(); ++t) {
      o.bounds.max_consensus_ratio = std::max(
          o.bounds.max_consensus_ratio, rep.consensus[t - 1] / r.consensus_bound);
      if (std::isnan(rep.trace.hindsight[t - 1])) continue;
      o.bounds.max_regret_ratio =
          std::max(o.bounds.max_regret_ratio,
                   rep.trace.regret(t) / dpsda::regret_bound(r.M, t));
      o.bounds.max_running_avg_regret_ratio = std::max(
          o.bounds.max_running_avg_regret_ratio,
          rep.trace.running_avg_regret(t) /
              dpsda::running_average_regret_bound(r.M, t));
    }
  }
}

}  // namespace internal

// Monte-Carlo experiment. Replicate r draws one stream keyed by (seed, r)
// and reuses it, with the same gradient-noise and Laplace streams, for every
// privacy level.
inline ExperimentResult run_experiment(const RunConfig& c) {
  const TopologySchedule schedule = load_schedule(c);
  const ProblemData problem = load_problem(c);
  ExperimentResult result;
  result.config = c;
  for (const auto& e : c.epsilons) {
    EpsilonOutcome o;
    o.epsilon = e;
    result.outcomes.push_back(std::move(o));
  }
  const ConstraintSet set = c.Set();
  BoundEstimates& est = result.estimates;
  for (int r = 0; r < c.replicates; ++r) {
    const RngKey key{c.seed, static_cast<std::uint64_t>(r)};
    const ReplicateStream stream = make_stream(c, problem, key);
    for (const LossEvent& f : stream.events) {
      est.G = std::max(est.G, smoothness_bound(f));
    }
    const std::vector<double> hindsight =
        prefix_hindsight_values(stream.events, set, c.hindsight_stride);
    for (EpsilonOutcome& o : result.outcomes) {
      const SimulationConfig sim_config =
          make_simulation_config(c, schedule, o.epsilon, key);
      o.sigma = sigma_for_round(sim_config.privacy, c.n, 0);
      SimulationResult sim = run_simulation(sim_config, stream.events);
      ReplicateOutcome rep;
      rep.replicate = r;
      rep.trace = std::move(sim.trace);
      attach_hindsight(rep.trace, hindsight);
      rep.consensus = std::move(sim.consensus_error);
      rep.max_gradient_norm = sim.max_gradient_norm;
      rep.max_signal_norm = sim.max_signal_norm;
      if (problem.dataset) {
        rep.train_accuracy =
            accuracy(sim.final_decision, *problem.dataset, stream.split.train);
        rep.test_accuracy =
            accuracy(sim.final_decision, *problem.dataset, stream.split.test);
      }
      est.L = std::max(est.L, rep.max_gradient_norm);
      est.lhat = std::max(est.lhat, rep.max_signal_norm);
      o.replicates.push_back(std::move(rep));
    }
  }
  const std::vector<MixingMatrix> period = mixing_period(schedule, c.weights);
  est.window = schedule.window();
  est.phi = 1.0;
  for (const MixingMatrix& m : period) est.phi = std::min(est.phi, m.phi());
  est.D_chi = set.diameter();
  est.C_psi = set.psi_bound();
  if (c.engine == EngineKind::kPushSum) {
    const int horizon = c.gamma_horizon > 0
                            ? c.gamma_horizon
                            : 10 * schedule.window() * schedule.period();
    est.pushsum = pushsum_constants(c.n, schedule.window(), period, horizon);
  }
  for (EpsilonOutcome& o : result.outcomes) internal::CheckBounds(c, est, o);
  return result;
}

struct AggregateRow {
  int t = 0;
  double cost = 0.0;
  double cum_cost = 0.0;
  double regret = 0.0;
  double avg_regret_over_t = 0.0;
  double running_avg_regret_over_t = 0.0;
  double consensus_err = 0.0;
  double avg_regret_stderr = 0.0;
};

// Replicate means per round.
inline std::vector<AggregateRow> aggregate(const EpsilonOutcome& o) {
  std::vector<AggregateRow> rows;
  if (o.replicates.empty()) return rows;
  const int horizon = o.replicates.front().trace.rounds();
  for (int t = 1; t <= horizon; ++t) {
    std::vector<double> cost, cum, reg, avg_reg, ra_reg, cons;
    for (const ReplicateOutcome& rep : o.replicates) {
      cost.push_back(rep.trace.cost[t - 1]);
      cum.push_back(rep.trace.cum_cost[t - 1]);
      reg.push_back(rep.trace.regret(t));
      avg_reg.push_back(rep.trace.regret(t) / t);
      ra_reg.push_back(rep.trace.running_avg_regret(t) / t);
      cons.push_back(rep.consensus[t - 1]);
    }
    rows.push_back({t, internal::MeanOf(cost), internal::MeanOf(cum),
                    internal::MeanOf(reg), internal::MeanOf(avg_reg),
                    internal::MeanOf(ra_reg), internal::MeanOf(cons),
                    internal::StdErrOf(avg_reg)});
  }
  return rows;
}

namespace internal {

inline std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

inline void EnsureDirectory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw DataError(fmt::format("cannot create output directory '{}': {}",
                                dir.string(), ec.message()));
  }
}

inline void WriteConfigEcho(const RunConfig& c, const std::filesystem::path& dir) {
  std::ofstream out = OpenForWrite(dir / "config.txt");
  for (const auto& [k, v] : c.ToMap()) out << k << " = " << v << '\n';
}

}  // namespace internal

// runs.csv, aggregate.csv, bounds.csv, accuracy.csv (OBC) and config.txt.
inline void write_experiment(const ExperimentResult& result,
                             const std::filesystem::path& dir) {
  internal::EnsureDirectory(dir);
  internal::WriteConfigEcho(result.config, dir);
  {
    std::ofstream out = internal::OpenForWrite(dir / "runs.csv");
    out << "epsilon,replicate,t,cost,cum_cost,avg_regret_over_t,"
           "running_avg_regret_over_t,consensus_err\n";
    for (const EpsilonOutcome& o : result.outcomes) {
      const std::string label = epsilon_label(o.epsilon);
      for (const ReplicateOutcome& rep : o.replicates) {
        for (int t = 1; t <= rep.trace.rounds(); ++t) {
          out << fmt::format("{},{},{},{},{},{},{},{}\n", label, rep.replicate, t,
                             rep.trace.cost[t - 1], rep.trace.cum_cost[t - 1],
                             rep.trace.regret(t) / t,
                             rep.trace.running_avg_regret(t) / t,
                             rep.consensus[t - 1]);
        }
      }
    }
  }
  {
    std::ofstream out = internal::OpenForWrite(dir / "aggregate.csv");
    out << "epsilon,t,cost,cum_cost,regret,avg_regret_over_t,"
           "running_avg_regret_over_t,consensus_err,avg_regret_over_t_stderr\n";
    for (const EpsilonOutcome& o : result.outcomes) {
      const std::string label = epsilon_label(o.epsilon);
      for (const AggregateRow& a : aggregate(o)) {
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", label, a.t, a.cost,
                           a.cum_cost, a.regret, a.avg_regret_over_t,
                           a.running_avg_regret_over_t, a.consensus_err,
                           a.avg_regret_stderr);
      }
    }
  }
  {
    std::ofstream out = internal::OpenForWrite(dir / "bounds.csv");
    out << "epsilon,engine,n,B,phi,theta,gamma,beta,lambda,one_minus_lambda,"
           "lhat_estimate,L_estimate,G,D_chi,C_psi,epsilon_effective,"
           "consensus_bound,M,regret_bound_T,running_avg_regret_bound_T,"
           "max_consensus_ratio,max_regret_ratio,max_running_avg_regret_ratio,"
           "dominated,vacuous\n";
    for (const EpsilonOutcome& o : result.outcomes) {
      const BoundReport& r = o.bounds.report;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const bool ps = r.pushsum.has_value();
      out << fmt::format(
          "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
          epsilon_label(o.epsilon), ps ? "ps" : "c", r.inputs.n, r.inputs.B,
          r.inputs.phi, r.theta, ps ? r.pushsum->gamma : nan,
          ps ? r.pushsum->beta : nan, ps ? r.pushsum->lambda : nan,
          ps ? r.pushsum->one_minus_lambda : nan, r.inputs.lhat, r.inputs.L,
          r.inputs.G, r.inputs.D_chi, r.inputs.C_psi, o.bounds.epsilon_effective,
          r.consensus_bound, r.M, r.regret_bound, r.running_average_regret_bound,
          o.bounds.max_consensus_ratio, o.bounds.max_regret_ratio,
          o.bounds.max_running_avg_regret_ratio, o.bounds.dominated() ? 1 : 0,
          r.vacuous ? 1 : 0);
    }
  }
  if (result.config.problem == ProblemKind::kObc) {
    std::ofstream out = internal::OpenForWrite(dir / "accuracy.csv");
    out << "epsilon,replicate,train_accuracy,test_accuracy\n";
    for (const EpsilonOutcome& o : result.outcomes) {
      for (const ReplicateOutcome& rep : o.replicates) {
        out << fmt::format("{},{},{},{}\n", epsilon_label(o.epsilon), rep.replicate,
                           rep.train_accuracy, rep.test_accuracy);
      }
    }
  }
}

struct AuditReplicate {
  int replicate = 0;
  // Reported coordinate of the output after round t, t = 1..T.
  std::vector<double> x;
  std::vector<double> x_prime;
  // Every decision before round t0 matched bit for bit.
  bool pre_t0_identical = true;
};

struct AuditOutcome {
  std::optional<double> epsilon;
  std::vector<AuditReplicate> replicates;

  std::vector<double> DiffsAtT0(int t0) const {
    std::vector<double> d;
    for (const AuditReplicate& r : replicates) {
      d.push_back(std::abs(r.x[t0 - 1] - r.x_prime[t0 - 1]));
    }
    return d;
  }
  double MeanDiffAtT0(int t0) const { return internal::MeanOf(DiffsAtT0(t0)); }
  bool PreT0Identical() const {
    for (const AuditReplicate& r : replicates) {
      if (!r.pre_t0_identical) return false;
    }
    return true;
  }
};

struct AuditResult {
  RunConfig config;
  std::vector<AuditOutcome> outcomes;
};

namespace internal {

// Output after round t (1-based) is x(t): the decision made with f_1..f_t.
inline Eigen::VectorXd OutputAfter(const SimulationResult& s, int t) {
  return t < static_cast<int>(s.decisions.size()) ? s.decisions[t]
                                                  : s.final_decision;
}

}  // namespace internal

// Runs every privacy level on a stream and its neighbour differing only at
// round audit_t0, with all noise streams shared. `perturb = false` runs the
// same stream twice.
inline AuditResult run_privacy_audit(const RunConfig& c, bool perturb = true) {
  if (c.audit_t0 > c.T) {
    throw ConfigError(fmt::format("config key 'audit_t0': must be <= T = {}", c.T));
  }
  const TopologySchedule schedule = load_schedule(c);
  const ProblemData problem = load_problem(c);
  AuditResult result;
  result.config = c;
  for (const auto& e : c.epsilons) result.outcomes.push_back({e, {}});
  const int k = c.audit_coordinate;
  for (int r = 0; r < c.replicates; ++r) {
    const RngKey key{c.seed, static_cast<std::uint64_t>(r)};
    const ReplicateStream stream = make_stream(c, problem, key);
    const std::vector<LossEvent> other =
        perturb ? neighbour_stream(c, problem, stream, key, c.audit_t0)
                : stream.events;
    for (AuditOutcome& o : result.outcomes) {
      const SimulationConfig sim_config =
          make_simulation_config(c, schedule, o.epsilon, key);
      const SimulationResult a = run_simulation(sim_config, stream.events);
      const SimulationResult b = run_simulation(sim_config, other);
      AuditReplicate rep;
      rep.replicate = r;
      for (int t = 1; t <= c.T; ++t) {
        rep.x.push_back(internal::OutputAfter(a, t)[k]);
        rep.x_prime.push_back(internal::OutputAfter(b, t)[k]);
      }
      for (int t = 0; t < c.audit_t0; ++t) {
        const Eigen::VectorXd& u = a.decisions[t];
        const Eigen::VectorXd& v = b.decisions[t];
        if (!std::equal(u.data(), u.data() + u.size(), v.data())) {
          rep.pre_t0_identical = false;
        }
      }
      o.replicates.push_back(std::move(rep));
    }
  }
  return result;
}

// audit_trace.csv, audit_summary.csv and config.txt.
inline void write_audit(const AuditResult& result,
                        const std::filesystem::path& dir) {
  internal::EnsureDirectory(dir);
  internal::WriteConfigEcho(result.config, dir);
  const int t0 = result.config.audit_t0;
  {
    std::ofstream out = internal::OpenForWrite(dir / "audit_trace.csv");
    out << "epsilon,replicate,t,x,x_prime,abs_diff\n";
    for (const AuditOutcome& o : result.outcomes) {
      for (const AuditReplicate& r : o.replicates) {
        for (std::size_t t = 0; t < r.x.size(); ++t) {
          out << fmt::format("{},{},{},{},{},{}\n", epsilon_label(o.epsilon),
                             r.replicate, t + 1, r.x[t], r.x_prime[t],
                             std::abs(r.x[t] - r.x_prime[t]));
        }
      }
    }
  }
  std::ofstream out = internal::OpenForWrite(dir / "audit_summary.csv");
  out << "epsilon,t0,coordinate,mean_abs_diff,stderr,replicates,pre_t0_identical\n";
  for (const AuditOutcome& o : result.outcomes) {
    const std::vector<double> diffs = o.DiffsAtT0(t0);
    out << fmt::format("{},{},{},{},{},{},{}\n", epsilon_label(o.epsilon), t0,
                       result.config.audit_coordinate, internal::MeanOf(diffs),
                       internal::StdErrOf(diffs), diffs.size(),
                       o.PreT0Identical() ? 1 : 0);
  }
}

// Minimal CSV table: header names plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int Column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw DataError(fmt::format("csv column '{}' missing", name));
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(fmt::format("'{}' has no header", path.string()));
  }
  table.header = internal::Split(line, ',');
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = internal::Split(line, ',');
    if (cells.size() != table.header.size()) {
      throw DataError(fmt::format("'{}' line {}: {} cells, header has {}",
                                  path.string(), line_no, cells.size(),
                                  table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

namespace internal {

inline double Cell(const CsvTable& t, const std::vector<std::string>& row,
                   const std::string& column) {
  const std::string& text = row.at(t.Column(column));
  if (text == "nan" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw DataError(fmt::format("csv column '{}': bad number '{}'", column, text));
  }
}

// Epsilon labels in first-appearance order.
inline std::vector<std::string> EpsilonOrder(const CsvTable& t) {
  std::vector<std::string> order;
  const int col = t.Column("epsilon");
  for (const auto& row : t.rows) {
    if (std::find(order.begin(), order.end(), row[col]) == order.end()) {
      order.push_back(row[col]);
    }
  }
  return order;
}

inline std::string Sci(double v) { return fmt::format("{:.4g}", v); }

}  // namespace internal

// Reads the CSVs in `dir` and writes report.md plus one gnuplot-ready
// regret_<epsilon>.dat per privacy level. Returns the markdown.
inline std::string render_report(const std::filesystem::path& dir) {
  const auto aggregate_path = dir / "aggregate.csv";
  const auto accuracy_path = dir / "accuracy.csv";
  const auto bounds_path = dir / "bounds.csv";
  const auto audit_path = dir / "audit_summary.csv";
  const bool any = std::filesystem::exists(aggregate_path) ||
                   std::filesystem::exists(audit_path);
  if (!any) {
    throw DataError(fmt::format(
        "no aggregate.csv or audit_summary.csv in '{}'; run `run` or `audit` first",
        dir.string()));
  }
  std::string md = "# DPSDA experiment report\n\n";

  md += "## Regret (replicate means at the final round)\n\n";
  if (std::filesystem::exists(aggregate_path)) {
    const CsvTable agg = read_csv(aggregate_path);
    if (agg.rows.empty()) {
      md += "no data\n\n";
    } else {
      md += "| epsilon | T | regret/T | std. err. | running-avg regret/T | consensus error |\n";
      md += "|---|---|---|---|---|---|\n";
      for (const std::string& label : internal::EpsilonOrder(agg)) {
        const std::vector<std::string>* last = nullptr;
        std::ofstream dat = internal::OpenForWrite(dir / ("regret_" + label + ".dat"));
        dat << "# t avg_regret_over_t running_avg_regret_over_t consensus_err\n";
        for (const auto& row : agg.rows) {
          if (row[agg.Column("epsilon")] != label) continue;
          last = &row;
          dat << row[agg.Column("t")] << ' ' << row[agg.Column("avg_regret_over_t")]
              << ' ' << row[agg.Column("running_avg_regret_over_t")] << ' '
              << row[agg.Column("consensus_err")] << '\n';
        }
        const auto& r = *last;
        md += fmt::format("| {} | {} | {} | {} | {} | {} |\n", label,
                          r[agg.Column("t")],
                          internal::Sci(internal::Cell(agg, r, "avg_regret_over_t")),
                          internal::Sci(internal::Cell(agg, r, "avg_regret_over_t_stderr")),
                          internal::Sci(internal::Cell(agg, r, "running_avg_regret_over_t")),
                          internal::Sci(internal::Cell(agg, r, "consensus_err")));
      }
      md += "\n";
    }
  } else {
    md += "no data\n\n";
  }

  md += "## Accuracy at T (replicate means)\n\n";
  if (std::filesystem::exists(accuracy_path)) {
    const CsvTable acc = read_csv(accuracy_path);
    if (acc.rows.empty()) {
      md += "no data\n\n";
    } else {
      md += "| epsilon | training accuracy | testing accuracy |\n|---|---|---|\n";
      for (const std::string& label : internal::EpsilonOrder(acc)) {
        std::vector<double> train, test;
        for (const auto& row : acc.rows) {
          if (row[acc.Column("epsilon")] != label) continue;
          train.push_back(internal::Cell(acc, row, "train_accuracy"));
          test.push_back(internal::Cell(acc, row, "test_accuracy"));
        }
        md += fmt::format("| {} | {:.2f}% | {:.2f}% |\n", label,
                          100.0 * internal::MeanOf(train),
                          100.0 * internal::MeanOf(test));
      }
      md += "\n";
    }
  } else {
    md += "no data\n\n";
  }

  md += "## Theoretical bounds vs. empirical maxima\n\n";
  if (std::filesystem::exists(bounds_path)) {
    const CsvTable b = read_csv(bounds_path);
    if (b.rows.empty()) {
      md += "no data\n\n";
    } else {
      md += "Constants marked (est.) are estimated from the runs: lhat and L are "
            "the largest observed block-gradient and gradient norms";
      md += b.rows.front()[b.Column("engine")] == "ps"
                ? "; gamma is a finite-horizon minimum standing in for an infimum.\n\n"
                : ".\n\n";
      md += "| epsilon | epsilon eff. | lhat (est.) | L (est.) | consensus bound | "
            "max consensus / bound | M | M sqrt(T) | max regret / bound | "
            "dominated | vacuous |\n";
      md += "|---|---|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& row : b.rows) {
        md += fmt::format(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            row[b.Column("epsilon")],
            internal::Sci(internal::Cell(b, row, "epsilon_effective")),
            internal::Sci(internal::Cell(b, row, "lhat_estimate")),
            internal::Sci(internal::Cell(b, row, "L_estimate")),
            internal::Sci(internal::Cell(b, row, "consensus_bound")),
            internal::Sci(internal::Cell(b, row, "max_consensus_ratio")),
            internal::Sci(internal::Cell(b, row, "M")),
            internal::Sci(internal::Cell(b, row, "regret_bound_T")),
            internal::Sci(internal::Cell(b, row, "max_regret_ratio")),
            row[b.Column("dominated")] == "1" ? "yes" : "NO",
            row[b.Column("vacuous")] == "1" ? "yes" : "no");
      }
      md += "\n";
    }
  } else {
    md += "no data\n\n";
  }

  md += "## Privacy audit (output difference at t0)\n\n";
  if (std::filesystem::exists(audit_path)) {
    const CsvTable a = read_csv(audit_path);
    if (a.rows.empty()) {
      md += "no data\n";
    } else {
      md += "| epsilon | t0 | coordinate | mean abs. difference | std. err. | "
            "identical before t0 |\n|---|---|---|---|---|---|\n";
      for (const auto& row : a.rows) {
        md += fmt::format("| {} | {} | {} | {} | {} | {} |\n",
                          row[a.Column("epsilon")], row[a.Column("t0")],
                          row[a.Column("coordinate")],
                          internal::Sci(internal::Cell(a, row, "mean_abs_diff")),
                          internal::Sci(internal::Cell(a, row, "stderr")),
                          row[a.Column("pre_t0_identical")] == "1" ? "yes" : "NO");
      }
    }
  } else {
    md += "no data\n";
  }
  std::ofstream out = internal::OpenForWrite(dir / "report.md");
  out << md;
  return md;
}

}  // namespace dpsda
