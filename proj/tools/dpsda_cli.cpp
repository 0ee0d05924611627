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

// dpsda: run, audit and report the DPSDA experiments.
//
//   dpsda run --config configs/olr.conf --engine ps --out results/olr_ps
//   dpsda audit --config configs/audit.conf
//   dpsda report --out results/olr_ps
//   dpsda bounds --config configs/olr.conf
//   dpsda check-graph --engine ps --B 4

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dpsda.hpp"

namespace {

using dpsda::ExitCode;

int Code(ExitCode c) { return static_cast<int>(c); }

// Defaults, then the config file, then explicit flags.
dpsda::RunConfig ResolveConfig(const std::string& config_path,
                               const std::map<std::string, std::string>& flags,
                               const CLI::App& sub) {
  dpsda::ConfigMap m;
  if (!config_path.empty()) m = dpsda::load_config_file(config_path);
  for (const auto& [key, value] : flags) {
    if (sub.get_option("--" + key)->count() > 0) m[key] = value;
  }
  return dpsda::RunConfig::FromMap(m);
}

void PrintExperimentSummary(const dpsda::ExperimentResult& r) {
  const int T = r.config.T;
  for (const dpsda::EpsilonOutcome& o : r.outcomes) {
    const auto rows = dpsda::aggregate(o);
    const auto& last = rows.back();
    fmt::print("epsilon={:<5} regret/T={:.6g} (se {:.3g}) running-avg regret/T={:.6g} "
               "bounds dominated={}\n",
               dpsda::epsilon_label(o.epsilon), last.avg_regret_over_t,
               last.avg_regret_stderr, last.running_avg_regret_over_t,
               o.bounds.dominated() ? "yes" : "NO");
  }
  fmt::print("T={} replicates={}\n", T, r.config.replicates);
}

int RunCheckGraph(const dpsda::RunConfig& c) {
  const dpsda::TopologySchedule s = dpsda::load_schedule(c);
  const bool ok = dpsda::check_window_connectivity(s);
  fmt::print("{}", dpsda::serialize_schedule(s));
  fmt::print("connectivity: {}\n",
             ok ? (s.directed() ? "B-strongly connected" : "every round connected")
                : "FAILED");
  if (!ok) return Code(ExitCode::kConfig);
  const auto period = dpsda::mixing_period(s, c.weights);
  double phi = 1.0;
  for (const auto& m : period) phi = std::min(phi, m.phi());
  fmt::print("phi={}\n", phi);
  if (s.directed()) {
    const auto k = dpsda::pushsum_constants(
        s.n(), s.window(), period,
        c.gamma_horizon > 0 ? c.gamma_horizon : 10 * s.window() * s.period());
    fmt::print("gamma (est.)={} beta={} lambda={} 1-lambda={}\n", k.gamma, k.beta,
               k.lambda, k.one_minus_lambda);
  } else {
    fmt::print("theta={}\n", dpsda::theta(phi, s.n()));
  }
  return Code(ExitCode::kOk);
}

int RunBounds(dpsda::RunConfig c) {
  // Constants come from one replicate; the bounds themselves are pure.
  c.replicates = 1;
  const dpsda::ExperimentResult r = dpsda::run_experiment(c);
  const auto& e = r.estimates;
  fmt::print("engine={} n={} B={} phi={} lhat(est.)={} L(est.)={} G={} D_chi={} "
             "C_psi={}\n",
             c.engine == dpsda::EngineKind::kPushSum ? "ps" : "c", c.n, e.window,
             e.phi, e.lhat, e.L, e.G, e.D_chi, e.C_psi);
  if (e.pushsum) {
    fmt::print("gamma (est., {} rounds)={} beta={} lambda={} 1-lambda={}\n",
               e.pushsum->gamma_horizon, e.pushsum->gamma, e.pushsum->beta,
               e.pushsum->lambda, e.pushsum->one_minus_lambda);
  }
  for (const auto& o : r.outcomes) {
    const auto& b = o.bounds.report;
    fmt::print("epsilon={:<5} eps_eff={:.4g} consensus_bound={:.4g} M={:.4g} "
               "M*sqrt(T)={:.4g} 2M*sqrt(T)={:.4g}{}\n",
               dpsda::epsilon_label(o.epsilon), o.bounds.epsilon_effective,
               b.consensus_bound, b.M, b.regret_bound,
               b.running_average_regret_bound,
               b.vacuous ? " (vacuous at this scale)" : "");
  }
  return Code(ExitCode::kOk);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private distributed online dual averaging"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> flags;
  };
  std::vector<Sub> subs;
  subs.reserve(5);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "run the Monte-Carlo experiment and write CSVs + report"},
      {"audit", "run the adjacent-stream privacy audit"},
      {"report", "render report.md from the CSVs in --out"},
      {"bounds", "print the theoretical constants and bounds"},
      {"check-graph", "validate a schedule and print its mixing constants"},
  };
  for (const auto& [name, help] : commands) {
    subs.push_back({app.add_subcommand(name, help), {}, {}});
    Sub& s = subs.back();
    s.app->add_option("--config", s.config, "key = value config file");
    for (const dpsda::ConfigKey& k : dpsda::config_keys()) {
      s.app->add_option(std::string("--") + k.name, s.flags[k.name],
                        fmt::format("{} (default {})", k.help, k.default_value));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : Code(ExitCode::kConfig);
  }

  try {
    for (Sub& s : subs) {
      if (!s.app->parsed()) continue;
      const std::string name = s.app->get_name();
      const dpsda::RunConfig c = ResolveConfig(s.config, s.flags, *s.app);
      if (name == "run") {
        const dpsda::ExperimentResult r = dpsda::run_experiment(c);
        dpsda::write_experiment(r, c.out);
        dpsda::render_report(c.out);
        PrintExperimentSummary(r);
        fmt::print("wrote {}\n", c.out);
      } else if (name == "audit") {
        const dpsda::AuditResult r = dpsda::run_privacy_audit(c);
        dpsda::write_audit(r, c.out);
        dpsda::render_report(c.out);
        for (const auto& o : r.outcomes) {
          fmt::print("epsilon={:<5} mean |x(t0) - x'(t0)|={:.6g} identical before t0={}\n",
                     dpsda::epsilon_label(o.epsilon), o.MeanDiffAtT0(c.audit_t0),
                     o.PreT0Identical() ? "yes" : "NO");
        }
        fmt::print("wrote {}\n", c.out);
      } else if (name == "report") {
        std::cout << dpsda::render_report(c.out);
      } else if (name == "bounds") {
        return RunBounds(c);
      } else {
        return RunCheckGraph(c);
      }
    }
  } catch (const dpsda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Code(ExitCode::kConfig);
  } catch (const dpsda::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return Code(ExitCode::kData);
  } catch (const dpsda::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return Code(ExitCode::kInvariant);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Code(ExitCode::kConfig);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return Code(ExitCode::kInvariant);
  }
  return Code(ExitCode::kOk);
}
