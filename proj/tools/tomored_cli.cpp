// Copyright 2026 The tomored Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line driver for the reduction experiments.

#include <cstdint>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tomored/harness/experiments.hpp"

namespace {

using tomored::harness::ExperimentConfig;
using tomored::harness::ExperimentKind;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::vector<long long> r, d, n;
  std::vector<double> eps, delta;
};

void add_common(CLI::App* sub, ExperimentConfig& cfg, Flags& flags, std::string& format, std::string& mixed,
                std::string& pure) {
  sub->add_option("--seed", cfg.master_seed, "master seed");
  sub->add_option("--out", cfg.out_path, "record file (default: $TOMORED_OUTPUT_DIR/<experiment>.<format>)");
  sub->add_option("--format", format, "record format")->check(CLI::IsMember({"csv", "jsonl"}));
  sub->add_option("--trials", cfg.trials, "trials per grid cell");
  sub->add_option("--r", flags.r, "register X dimensions")->delimiter(',');
  sub->add_option("--d", flags.d, "register Y dimensions")->delimiter(',');
  sub->add_option("--eps", flags.eps, "target infidelities (eta for prop-search)")->delimiter(',');
  sub->add_option("--n", flags.n, "copy / shot budgets")->delimiter(',');
  sub->add_option("--delta", flags.delta, "trace-distance targets")->delimiter(',');
  sub->add_option("--c-extra", cfg.c_extra, "constant C in ceil(C r^2 / eps) extra copies");
  sub->add_option("--threads", cfg.threads, "worker threads");
  sub->add_flag("--no-wall-time", [&cfg](std::int64_t) { cfg.wall_time = false; }, "omit wall-time fields");
  sub->add_option("--mixed-backend", mixed, "mixed-state estimator")->check(CLI::IsMember({"oracle", "measurement"}));
  sub->add_option("--pure-backend", pure, "pure-state estimator")->check(CLI::IsMember({"oracle", "measurement"}));
  sub->add_option("--batch", cfg.batch, "prop-search: triples per trial");
  sub->add_option("--gentle-c", cfg.gentle_constant, "gentle: flag trials with T > C sqrt(delta)");
}

tomored::BackendKind parse_backend(const std::string& s) {
  return s == "measurement" ? tomored::BackendKind::measurement_linear_inversion
                            : tomored::BackendKind::oracle_exact_infidelity;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation of the rank-r to pure-state tomography reduction"};
  app.require_subcommand(1);

  const std::map<std::string, ExperimentKind> kinds{
      {"chain-sweep", ExperimentKind::chain_sweep},     {"reduce", ExperimentKind::reduction_run},
      {"scale-pure", ExperimentKind::scaling_pure},     {"scale-mixed", ExperimentKind::scaling_mixed},
      {"gentle", ExperimentKind::gentle_measurement},   {"prop-search", ExperimentKind::proposition_search},
  };
  const std::map<std::string, std::string> help{
      {"chain-sweep", "verify the fidelity chain with oracle backends over a grid"},
      {"reduce", "run the reduction with selectable backends"},
      {"scale-pure", "infidelity vs shots for the pure-state estimator"},
      {"scale-mixed", "infidelity vs shots for the mixed-state estimator"},
      {"gentle", "disturbance of psi under projection onto a trace-distance estimate"},
      {"prop-search", "randomized search for violations of the composition bound"},
  };

  std::map<std::string, ExperimentConfig> configs;
  std::map<std::string, Flags> flags;
  std::map<std::string, std::string> formats, mixed, pure;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, kind] : kinds) {
    configs[name].experiment = kind;
    formats[name] = "csv";
    mixed[name] = "oracle";
    pure[name] = "oracle";
    subs[name] = app.add_subcommand(name, help.at(name));
    add_common(subs[name], configs[name], flags[name], formats[name], mixed[name], pure[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    ExperimentConfig cfg = configs[name];
    const Flags& f = flags[name];
    if (!f.r.empty()) cfg.r_grid.assign(f.r.begin(), f.r.end());
    if (!f.d.empty()) cfg.d_grid.assign(f.d.begin(), f.d.end());
    if (!f.eps.empty()) cfg.eps_grid = f.eps;
    if (!f.delta.empty()) cfg.delta_grid = f.delta;
    if (!f.n.empty()) cfg.n_grid.assign(f.n.begin(), f.n.end());
    if (f.n.empty() && (cfg.experiment == ExperimentKind::scaling_pure ||
                        cfg.experiment == ExperimentKind::scaling_mixed)) {
      cfg.n_grid = {10000, 100000, 1000000};
    }
    if (f.eps.empty() && cfg.experiment == ExperimentKind::proposition_search) cfg.eps_grid = {0.01, 0.1, 0.3};
    cfg.format = formats[name] == "jsonl" ? tomored::harness::OutputFormat::jsonl
                                          : tomored::harness::OutputFormat::csv;
    cfg.mixed_backend = parse_backend(mixed[name]);
    cfg.pure_backend = parse_backend(pure[name]);
    if (cfg.out_path.empty()) cfg.out_path = tomored::harness::default_output_path(cfg.experiment, cfg.format);

    tomored::harness::ExperimentResult result;
    try {
      cfg.validate();
      // Fail on an unwritable path before computing anything.
      tomored::harness::write_records(cfg.out_path, cfg.format, {});
      result = tomored::harness::run_experiment(cfg);
      tomored::harness::write_records(cfg.out_path, cfg.format, result.records);
    } catch (const tomored::harness::ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const tomored::PreconditionError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::runtime_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    tomored::harness::print_summary(std::cout, result);
    std::cout << "records: " << result.records.size() << " -> " << cfg.out_path << "\n";
    return result.violations > 0 ? kExitViolation : kExitOk;
  }
  return kExitConfig;
}
