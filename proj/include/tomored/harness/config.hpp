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


#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tomored/harness/records.hpp"
#include "tomored/linalg.hpp"
#include "tomored/seed.hpp"
#include "tomored/tomography.hpp"

namespace tomored::harness {

/// Rejected before any computation runs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { chain_sweep, reduction_run, scaling_pure, scaling_mixed, gentle_measurement, proposition_search };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::chain_sweep: return "chain_sweep";
    case ExperimentKind::reduction_run: return "reduction_run";
    case ExperimentKind::scaling_pure: return "scaling_pure";
    case ExperimentKind::scaling_mixed: return "scaling_mixed";
    case ExperimentKind::gentle_measurement: return "gentle_measurement";
    case ExperimentKind::proposition_search: return "proposition_search";
  }
  return "unknown";
}

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "TOMORED_OUTPUT_DIR";

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::chain_sweep;
  std::vector<Index> r_grid{1, 2, 3};
  std::vector<Index> d_grid{2, 3, 4, 6, 8};
  std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.01};
  std::vector<double> delta_grid{0.1, 0.01, 0.001};
  std::vector<std::int64_t> n_grid{1000};
  std::int64_t trials = 100;
  Seed master_seed = 0;
  double c_extra = 4.0;
  BackendKind mixed_backend = BackendKind::oracle_exact_infidelity;
  BackendKind pure_backend = BackendKind::oracle_exact_infidelity;
  std::int64_t batch = 1000;   // proposition_search: triples per trial
  double gentle_constant = 3.0;  // gentle_measurement: flag T > C sqrt(delta)
  std::string out_path;          // empty: no record file
  OutputFormat format = OutputFormat::csv;
  bool wall_time = true;
  unsigned threads = 1;

  /// Cells whose r exceeds d are not part of the grid.
  bool cell_admissible(Index r, Index d) const { return r <= d; }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (trials < 1) fail("trials must be at least 1");
    if (threads < 1) fail("threads must be at least 1");
    const bool uses_r = experiment == ExperimentKind::chain_sweep || experiment == ExperimentKind::reduction_run ||
                        experiment == ExperimentKind::scaling_mixed ||
                        experiment == ExperimentKind::gentle_measurement;
    const bool uses_eps = experiment == ExperimentKind::chain_sweep ||
                          experiment == ExperimentKind::reduction_run ||
                          experiment == ExperimentKind::proposition_search;
    const bool uses_n = experiment == ExperimentKind::reduction_run || experiment == ExperimentKind::scaling_pure ||
                        experiment == ExperimentKind::scaling_mixed || experiment == ExperimentKind::chain_sweep;
    if (d_grid.empty()) fail("d grid is empty");
    for (Index d : d_grid) {
      if (d < 1) fail("d values must be positive");
    }
    if (uses_r) {
      if (r_grid.empty()) fail("r grid is empty");
      for (Index r : r_grid) {
        if (r < 1) fail("r values must be positive");
      }
      bool any = false;
      for (Index r : r_grid) {
        for (Index d : d_grid) any = any || cell_admissible(r, d);
      }
      if (!any) fail("no grid cell satisfies r <= d");
    }
    if (uses_eps) {
      if (eps_grid.empty()) fail("epsilon grid is empty");
      for (double e : eps_grid) {
        if (!(e > 0.0 && e < 1.0)) fail("epsilon values must lie in (0, 1)");
      }
    }
    if (experiment == ExperimentKind::gentle_measurement) {
      if (delta_grid.empty()) fail("delta grid is empty");
      for (double dl : delta_grid) {
        if (!(dl > 0.0 && dl < 1.0)) fail("delta values must lie in (0, 1)");
      }
      if (!(gentle_constant > 0.0)) fail("gentle constant must be positive");
    }
    if (uses_n) {
      if (n_grid.empty()) fail("n grid is empty");
      for (auto n : n_grid) {
        if (n < 1) fail("n values must be at least 1");
      }
    }
    if (experiment == ExperimentKind::scaling_pure || experiment == ExperimentKind::scaling_mixed ||
        (experiment == ExperimentKind::reduction_run && mixed_backend == BackendKind::measurement_linear_inversion)) {
      for (auto n : n_grid) {
        for (Index d : d_grid) {
          if (n < d * d) fail("n values must be at least d^2 for measurement-based estimators");
        }
      }
    }
    if (experiment == ExperimentKind::proposition_search) {
      if (batch < 1) fail("batch must be at least 1");
      for (Index d : d_grid) {
        if (d < 2) fail("proposition search needs d >= 2");
      }
    }
    if (!(c_extra > 0.0)) fail("c_extra must be positive");
  }
};

/// `--out` if given, else <TOMORED_OUTPUT_DIR or .>/<experiment>.<ext>.
inline std::string default_output_path(ExperimentKind kind, OutputFormat format) {
  const char* dir = std::getenv(kOutputDirEnv);
  std::string base = (dir != nullptr && *dir != '\0') ? std::string(dir) : std::string(".");
  if (base.back() != '/') base += '/';
  return base + std::string(to_string(kind)) + (format == OutputFormat::csv ? ".csv" : ".jsonl");
}

}  // namespace tomored::harness
