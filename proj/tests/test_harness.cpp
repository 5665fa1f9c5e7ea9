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


#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "tomored/harness/experiments.hpp"

using namespace tomored;
using namespace tomored::harness;
using Catch::Matchers::WithinAbs;

namespace {

ExperimentConfig small_chain_sweep() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::chain_sweep;
  cfg.r_grid = {1, 2};
  cfg.d_grid = {2, 4};
  cfg.eps_grid = {0.1};
  cfg.trials = 10;
  cfg.master_seed = 17;
  return cfg;
}

std::string to_csv(const std::vector<TrialRecord>& recs) {
  std::ostringstream os;
  write_csv(os, recs);
  return os.str();
}

std::vector<TrialRecord> without_wall_time(std::vector<TrialRecord> recs) {
  for (auto& r : recs) {
    std::erase_if(r.fields, [](const auto& kv) { return kv.first == kWallTimeField; });
  }
  return recs;
}

}  // namespace

TEST_CASE("CSV quoting follows RFC 4180") {
  TrialRecord rec;
  rec.add("plain", std::string("abc")).add("comma", std::string("a,b")).add("quote", std::string("say \"hi\""));
  rec.add("x", 0.1).add("k", 3).add("flag", true);
  const std::string csv = to_csv({rec});
  CHECK(csv == "plain,comma,quote,x,k,flag\r\nabc,\"a,b\",\"say \"\"hi\"\"\",0.1,3,true\r\n");
}

TEST_CASE("floats are written losslessly") {
  for (double x : {0.1, 1.0 / 3.0, 1e-17, 0.9999999999999999, 123456789.123456789}) {
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
  TrialRecord rec;
  rec.add("v", 1.0 / 3.0);
  const auto j = nlohmann::json::parse(to_json(rec).dump());
  CHECK(j["v"].get<double>() == 1.0 / 3.0);
}

TEST_CASE("fit_scaling on exact power laws") {
  std::vector<ScalingPoint> inv, inv2;
  for (double n : {1e3, 1e4, 1e5, 1e6}) {
    inv.push_back({n, 7.0 / n});
    inv2.push_back({n, 7.0 / (n * n)});
  }
  const ScalingFit f1 = fit_scaling(std::span<const ScalingPoint>(inv));
  CHECK_THAT(f1.slope, WithinAbs(-1.0, 1e-6));
  CHECK_THAT(f1.intercept, WithinAbs(std::log(7.0), 1e-6));
  CHECK(f1.residuals.size() == 4);
  for (double r : f1.residuals) CHECK_THAT(r, WithinAbs(0.0, 1e-9));
  CHECK_THAT(fit_scaling(std::span<const ScalingPoint>(inv2)).slope, WithinAbs(-2.0, 1e-6));

  const std::vector<ScalingPoint> two{{10.0, 0.1}, {100.0, 0.01}, {100.0, 0.02}};
  CHECK_THROWS_AS(fit_scaling(std::span<const ScalingPoint>(two)), PreconditionError);
}

TEST_CASE("fit_scaling over records uses per-budget medians") {
  std::vector<TrialRecord> recs;
  for (std::int64_t n : {100, 1000, 10000}) {
    for (double scale : {0.5, 1.0, 2.0}) {
      TrialRecord r;
      r.add("n", n).add("infidelity", scale * 3.0 / static_cast<double>(n));
      recs.push_back(r);
    }
  }
  const auto pts = median_points(recs, "n", "infidelity");
  REQUIRE(pts.size() == 3);
  CHECK_THAT(pts[0].infidelity, WithinAbs(0.03, 1e-15));
  CHECK_THAT(fit_scaling(recs).slope, WithinAbs(-1.0, 1e-9));
}

TEST_CASE("config validation rejects bad grids before running") {
  ExperimentConfig cfg = small_chain_sweep();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.eps_grid = {1.2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.r_grid = {5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.d_grid.clear();
  CHECK_THROWS_AS(run_experiment(bad), ConfigError);
  bad = cfg;
  bad.experiment = ExperimentKind::scaling_pure;
  bad.n_grid = {10};
  bad.d_grid = {4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.experiment = ExperimentKind::gentle_measurement;
  bad.delta_grid = {0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("chain_sweep: 40 records, no violations") {
  const ExperimentResult res = run_experiment(small_chain_sweep());
  CHECK(res.records.size() == 40);
  CHECK(res.violations == 0);
  CHECK(res.cells.size() == 4);
  for (const auto& c : res.cells) {
    CHECK(c.trials == 10);
    CHECK(c.failed == 0);
  }
  // Append order: (cell, trial).
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    CHECK(res.records[i].number("cell") == static_cast<double>(i / 10));
    CHECK(res.records[i].number("trial") == static_cast<double>(i % 10));
  }
  std::ostringstream summary;
  print_summary(summary, res);
  CHECK(summary.str().find("total violations: 0") != std::string::npos);
}

TEST_CASE("grid cells with r > d are omitted") {
  ExperimentConfig cfg = small_chain_sweep();
  cfg.r_grid = {1, 3};
  cfg.d_grid = {2, 3};
  cfg.trials = 1;
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.cells.size() == 3);
}

TEST_CASE("records are reproducible and independent of thread count") {
  ExperimentConfig cfg = small_chain_sweep();
  const auto a = without_wall_time(run_experiment(cfg).records);
  const auto b = without_wall_time(run_experiment(cfg).records);
  cfg.threads = 3;
  const auto c = without_wall_time(run_experiment(cfg).records);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_csv(a) == to_csv(c));

  cfg.master_seed = 18;
  CHECK(to_csv(without_wall_time(run_experiment(cfg).records)) != to_csv(a));

  cfg.wall_time = false;
  const auto rec = run_experiment(cfg).records;
  CHECK(rec.front().get(kWallTimeField) == nullptr);
}

TEST_CASE("summary violation count equals records with a violated check") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::gentle_measurement;
  cfg.r_grid = {1};
  cfg.d_grid = {4};
  cfg.delta_grid = {0.1};
  cfg.trials = 20;
  cfg.gentle_constant = 0.05;  // far below the typical ratio: forces flags
  const ExperimentResult res = run_experiment(cfg);
  std::int64_t flagged = 0;
  for (const auto& r : res.records) flagged += r.number("within_bound") == 0.0 ? 1 : 0;
  CHECK(flagged > 0);
  CHECK(res.violations == flagged);
}

TEST_CASE("scaling_pure: medians decrease along the ladder and the fit is reported") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::scaling_pure;
  cfg.d_grid = {3};
  cfg.n_grid = {1000, 10000, 100000};
  cfg.trials = 20;
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.cells.size() == 3);
  auto med = [&](std::size_t i) {
    for (const auto& [k, v] : res.cells[i].stats) {
      if (k == "infidelity_med") return v;
    }
    return -1.0;
  };
  CHECK(med(0) > med(1));
  CHECK(med(1) > med(2));
  REQUIRE(res.notes.size() == 1);
  CHECK(res.notes[0].find("slope") != std::string::npos);
}

TEST_CASE("scaling_mixed, gentle and proposition experiments run") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::scaling_mixed;
  cfg.r_grid = {2};
  cfg.d_grid = {3};
  cfg.n_grid = {1000, 10000, 100000};
  cfg.trials = 5;
  const ExperimentResult mixed = run_experiment(cfg);
  CHECK(mixed.records.size() == 15);
  CHECK(mixed.violations == 0);

  cfg.experiment = ExperimentKind::gentle_measurement;
  cfg.r_grid = {1, 2};
  cfg.d_grid = {4};
  cfg.delta_grid = {0.1, 0.01};
  const ExperimentResult gentle = run_experiment(cfg);
  CHECK(gentle.records.size() == 20);
  CHECK(gentle.violations == 0);
  CHECK(gentle.notes.size() == 2);

  cfg.experiment = ExperimentKind::proposition_search;
  cfg.d_grid = {2, 3};
  cfg.eps_grid = {0.1};
  cfg.batch = 200;
  const ExperimentResult prop = run_experiment(cfg);
  CHECK(prop.records.size() == 10);
  CHECK(prop.violations == 0);
}

TEST_CASE("reduction_run with measurement backends") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::reduction_run;
  cfg.r_grid = {1};
  cfg.d_grid = {3};
  cfg.eps_grid = {0.05};
  cfg.n_grid = {50000};
  cfg.trials = 3;
  cfg.mixed_backend = BackendKind::measurement_linear_inversion;
  cfg.pure_backend = BackendKind::measurement_linear_inversion;
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.records.size() == 3);
  CHECK(res.violations == 0);
  const auto* kind = res.records[0].get("mixed_backend");
  REQUIRE(kind != nullptr);
  CHECK(std::get<std::string>(*kind) == "measurement");
}

TEST_CASE("record files: CSV and JSONL, unwritable path") {
  ExperimentConfig cfg = small_chain_sweep();
  cfg.trials = 2;
  cfg.wall_time = false;
  const auto recs = run_experiment(cfg).records;
  const auto dir = std::filesystem::temp_directory_path() / "tomored_test_harness";
  std::filesystem::create_directories(dir);
  const std::string jsonl = (dir / "out.jsonl").string();
  write_records(jsonl, OutputFormat::jsonl, recs);
  std::ifstream in(jsonl);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("final_fidelity"));
    ++lines;
  }
  CHECK(lines == recs.size());
  CHECK_THROWS(write_records("/nonexistent-dir/x/y.csv", OutputFormat::csv, recs));
}

TEST_CASE("default output path honours the environment override") {
  ::setenv(kOutputDirEnv, "/tmp/tomored-out", 1);
  CHECK(default_output_path(ExperimentKind::chain_sweep, OutputFormat::csv) == "/tmp/tomored-out/chain_sweep.csv");
  ::unsetenv(kOutputDirEnv);
  CHECK(default_output_path(ExperimentKind::gentle_measurement, OutputFormat::jsonl) ==
        "./gentle_measurement.jsonl");
}
