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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tomored/harness/config.hpp"
#include "tomored/harness/fit.hpp"
#include "tomored/harness/records.hpp"
#include "tomored/reduction.hpp"

namespace tomored::harness {

struct TrialOutcome {
  TrialRecord record;
  bool violation = false;
  bool failed = false;  // trial could not complete (skipped, starved, ...)
};

struct CellSummary {
  std::string label;
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  std::int64_t failed = 0;
  std::vector<std::pair<std::string, double>> stats;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::chain_sweep;
  std::vector<TrialRecord> records;  // ordered by (cell, trial)
  std::vector<CellSummary> cells;
  std::vector<std::string> notes;
  std::int64_t violations = 0;
};

/// A grid cell: each experiment reads the parameters it uses.
struct Cell {
  Index r = 1;
  Index d = 1;
  double param = 0.0;  // epsilon, delta or eta
  std::int64_t n = 0;
};

// ---------------------------------------------------------------------------
// Proposition search

struct PropositionBatch {
  std::int64_t triples = 0;
  std::int64_t applicable = 0;
  std::int64_t violations = 0;
  double min_c = 1.0;
  double min_slack = std::numeric_limits<double>::infinity();  // min of c - (1 - 4 eta)
};

namespace detail {

/// Unit vector orthogonal to v, mixing a direction `toward` (projected off v)
/// with a random one according to `weight`.
inline CVector orthogonal_direction(const CVector& v, const CVector& toward, double weight, Rng& rng) {
  CVector chi = weight * toward + (1.0 - weight) * complex_gaussian_vector(v.size(), rng);
  for (int attempt = 0; attempt < 16; ++attempt) {
    chi -= v.dot(chi) * v;
    if (chi.norm() > 1e-8) break;
    chi = complex_gaussian_vector(v.size(), rng);
  }
  return chi.normalized();
}

inline double overlap_target(double eta, std::uniform_real_distribution<double>& unit, Rng& rng) {
  const double edge = std::min(1.0, (1.0 - eta) * (1.0 + 1e-12));
  return unit(rng) < 0.5 ? edge : edge + (1.0 - edge) * unit(rng);
}

}  // namespace detail

/// Draws `count` triples (psi, psi~, phi) in dimension d with
/// |<psi~|psi>|, |<phi|psi~>| >= 1 - eta and checks every step of the
/// composition argument. Half the overlaps sit on the 1 - eta edge, and phi
/// is pushed partly along the geodesic away from psi to probe the worst case.
inline PropositionBatch proposition_batch(Index d, double eta, std::int64_t count, Seed seed) {
  require(d >= 2, "proposition_batch: need d >= 2");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PropositionBatch out;
  for (std::int64_t i = 0; i < count; ++i) {
    const PureState psi = PureState::flat(complex_gaussian_vector(d, rng));
    const CVector& vp = psi.amplitudes();

    const double a = detail::overlap_target(eta, unit, rng);
    const CVector chi1 = detail::orthogonal_direction(vp, CVector::Zero(d), 0.0, rng);
    const Complex phase1 = std::polar(1.0, 2.0 * std::numbers::pi * unit(rng));
    const PureState tilde = PureState::flat(a * phase1 * vp + std::sqrt(1.0 - a * a) * chi1);
    const CVector& vt = tilde.amplitudes();

    const double b = detail::overlap_target(eta, unit, rng);
    // Away from psi within span(psi, psi~): -(psi - <psi~|psi> psi~).
    const CVector away = -(vp - vt.dot(vp) * vt);
    const CVector chi2 = detail::orthogonal_direction(vt, away.normalized(), unit(rng), rng);
    const Complex phase2 = std::polar(1.0, 2.0 * std::numbers::pi * unit(rng));
    const PureState phi = PureState::flat(b * phase2 * vt + std::sqrt(1.0 - b * b) * chi2);

    const OverlapTriple t = make_overlap_triple(psi, tilde, phi);
    const GeometricCheck g = geometric_composition(t, eta);
    ++out.triples;
    if (!g.applicable) continue;
    ++out.applicable;
    if (!g.all_steps_hold()) ++out.violations;
    out.min_c = std::min(out.min_c, t.c);
    out.min_slack = std::min(out.min_slack, t.c - g.lower_bound);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid and trial execution

namespace detail {

inline std::vector<Cell> build_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  switch (cfg.experiment) {
    case ExperimentKind::chain_sweep:
    case ExperimentKind::reduction_run:
      for (Index r : cfg.r_grid) {
        for (Index d : cfg.d_grid) {
          if (!cfg.cell_admissible(r, d)) continue;
          for (double e : cfg.eps_grid) {
            for (auto n : cfg.n_grid) cells.push_back({r, d, e, n});
          }
        }
      }
      break;
    case ExperimentKind::scaling_pure:
      for (Index d : cfg.d_grid) {
        for (auto n : cfg.n_grid) cells.push_back({1, d, 0.0, n});
      }
      break;
    case ExperimentKind::scaling_mixed:
      for (Index r : cfg.r_grid) {
        for (Index d : cfg.d_grid) {
          if (!cfg.cell_admissible(r, d)) continue;
          for (auto n : cfg.n_grid) cells.push_back({r, d, 0.0, n});
        }
      }
      break;
    case ExperimentKind::gentle_measurement:
      for (Index r : cfg.r_grid) {
        for (Index d : cfg.d_grid) {
          if (!cfg.cell_admissible(r, d)) continue;
          for (double dl : cfg.delta_grid) cells.push_back({r, d, dl, 0});
        }
      }
      break;
    case ExperimentKind::proposition_search:
      for (Index d : cfg.d_grid) {
        for (double e : cfg.eps_grid) cells.push_back({1, d, e, 0});
      }
      break;
  }
  return cells;
}

inline std::string format_cell(const ExperimentConfig& cfg, const Cell& c) {
  std::ostringstream os;
  switch (cfg.experiment) {
    case ExperimentKind::chain_sweep:
    case ExperimentKind::reduction_run:
      os << "r=" << c.r << " d=" << c.d << " eps=" << c.param << " n=" << c.n;
      break;
    case ExperimentKind::scaling_pure:
      os << "d=" << c.d << " n=" << c.n;
      break;
    case ExperimentKind::scaling_mixed:
      os << "r=" << c.r << " d=" << c.d << " n=" << c.n;
      break;
    case ExperimentKind::gentle_measurement:
      os << "r=" << c.r << " d=" << c.d << " delta=" << c.param;
      break;
    case ExperimentKind::proposition_search:
      os << "d=" << c.d << " eta=" << c.param;
      break;
  }
  return os.str();
}

inline std::string join_violations(const ChainRecord& chain) {
  std::string out;
  for (const auto& c : chain.checks) {
    if (!c.violated()) continue;
    if (!out.empty()) out += ';';
    out += c.name;
  }
  return out;
}

inline TrialOutcome reduction_trial(const ExperimentConfig& cfg, const Cell& cell, Seed trial_seed) {
  const PureState psi = random_pure_state(cell.r, cell.d, derive_seed(trial_seed, 0));
  ReductionConfig rc;
  rc.r = cell.r;
  rc.d = cell.d;
  rc.n = cell.n;
  rc.epsilon = cell.param;
  rc.c_extra = cfg.c_extra;
  rc.seed = derive_seed(trial_seed, 1);
  const bool use_backends = cfg.experiment == ExperimentKind::reduction_run;
  rc.mixed_backend = use_backends && cfg.mixed_backend == BackendKind::measurement_linear_inversion
                         ? TomographyBackend::measurement(cell.n)
                         : TomographyBackend::oracle(cell.param);
  rc.pure_backend = use_backends && cfg.pure_backend == BackendKind::measurement_linear_inversion
                        ? TomographyBackend::measurement(1)
                        : TomographyBackend::oracle(cell.param);

  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.add("r", cell.r).add("d", cell.d).add("epsilon", cell.param).add("n", cell.n);
  rec.add("c_extra", cfg.c_extra).add("seed", std::to_string(trial_seed));
  rec.add("mixed_backend", to_string(rc.mixed_backend.kind)).add("pure_backend", to_string(rc.pure_backend.kind));
  try {
    const ReductionReport rep = run_algorithm_b(psi, rc);
    const ChainCheck* stronger = rep.chain.find("final_bound_8eps");
    const ChainCheck* hyp = rep.chain.find("final_bound");
    rec.add("status", to_string(rep.status)).add("pi_rank", rep.pi_rank);
    rec.add("fidelity_rho_sigma", rep.chain.fidelity_rho_sigma).add("uhlmann_overlap", rep.chain.uhlmann_overlap);
    rec.add("keep_probability", rep.keep_probability).add("psi_tilde_fidelity", rep.psi_tilde_fidelity);
    rec.add("step5_fidelity", rep.step5_fidelity).add("final_fidelity", rep.final_fidelity);
    rec.add("bound_final", 1.0 - 16.0 * cell.param);
    rec.add("hypotheses_hold", hyp != nullptr && hyp->applicable);
    rec.add("stronger_bound_holds", stronger != nullptr && stronger->applicable && stronger->satisfied);
    rec.add("kept_count", rep.kept_count).add("extra_copies", rep.extra_copies);
    rec.add("samples_total", rep.samples_total).add("low_kept", rep.low_kept);
    rec.add("violated_checks", join_violations(rep.chain));
    out.violation = rep.any_violation();
    out.failed = rep.status != TrialStatus::ok;
  } catch (const NumericalError& e) {
    rec.add("status", std::string("numerical_error"));
    out.failed = true;
  }
  return out;
}

inline TrialOutcome scaling_pure_trial(const ExperimentConfig&, const Cell& cell, Seed trial_seed) {
  const PureState psi = random_pure_state(1, cell.d, derive_seed(trial_seed, 0));
  const PureState est = estimate_pure_state_from_measurements(psi, cell.n, derive_seed(trial_seed, 1));
  const double f = fidelity_pure_pure(psi, est);
  TrialOutcome out;
  out.record.add("d", cell.d).add("n", cell.n).add("seed", std::to_string(trial_seed));
  out.record.add("fidelity", f).add("infidelity", 1.0 - f);
  return out;
}

inline TrialOutcome scaling_mixed_trial(const ExperimentConfig&, const Cell& cell, Seed trial_seed) {
  const DensityMatrix rho = random_rank_r_state(cell.d, cell.r, derive_seed(trial_seed, 0));
  const DensityMatrix est =
      estimate_mixed_state_from_measurements(rho, cell.r, cell.n, derive_seed(trial_seed, 1));
  const double f = fidelity_mixed(rho, est);
  TrialOutcome out;
  out.record.add("r", cell.r).add("d", cell.d).add("n", cell.n).add("seed", std::to_string(trial_seed));
  out.record.add("fidelity", f).add("infidelity", 1.0 - f).add("trace_distance", trace_distance(rho, est));
  out.record.add("estimate_rank", est.rank());
  return out;
}

inline TrialOutcome gentle_trial(const ExperimentConfig& cfg, const Cell& cell, Seed trial_seed) {
  const PureState psi = random_pure_state(cell.r, cell.d, derive_seed(trial_seed, 0));
  const GentleTrial g = gentle_measurement_trial(psi, cell.param, derive_seed(trial_seed, 1));
  const double bound = cfg.gentle_constant * std::sqrt(cell.param);
  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.add("r", cell.r).add("d", cell.d).add("delta", cell.param).add("seed", std::to_string(trial_seed));
  rec.add("skipped", g.skipped).add("rho_sigma_distance", g.rho_sigma_distance);
  rec.add("keep_probability", g.keep_probability).add("distance", g.distance);
  rec.add("ratio_sqrt", g.ratio_sqrt).add("ratio_linear", g.ratio_linear);
  rec.add("bound", bound).add("within_bound", g.skipped || g.distance <= bound);
  out.failed = g.skipped;
  out.violation = !g.skipped && g.distance > bound;
  return out;
}

inline TrialOutcome proposition_trial(const ExperimentConfig& cfg, const Cell& cell, Seed trial_seed) {
  const PropositionBatch b = proposition_batch(cell.d, cell.param, cfg.batch, trial_seed);
  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.add("d", cell.d).add("eta", cell.param).add("seed", std::to_string(trial_seed));
  rec.add("triples", b.triples).add("applicable", b.applicable).add("violations", b.violations);
  rec.add("min_c", b.min_c).add("lower_bound", 1.0 - 4.0 * cell.param).add("min_slack", b.min_slack);
  out.violation = b.violations > 0;
  return out;
}

inline TrialOutcome run_trial(const ExperimentConfig& cfg, const Cell& cell, Seed trial_seed) {
  switch (cfg.experiment) {
    case ExperimentKind::chain_sweep:
    case ExperimentKind::reduction_run: return reduction_trial(cfg, cell, trial_seed);
    case ExperimentKind::scaling_pure: return scaling_pure_trial(cfg, cell, trial_seed);
    case ExperimentKind::scaling_mixed: return scaling_mixed_trial(cfg, cell, trial_seed);
    case ExperimentKind::gentle_measurement: return gentle_trial(cfg, cell, trial_seed);
    case ExperimentKind::proposition_search: return proposition_trial(cfg, cell, trial_seed);
  }
  throw ConfigError("unknown experiment");
}

/// Runs every (cell, trial) pair, in parallel when cfg.threads > 1; the
/// result vector is indexed by position, so completion order is irrelevant.
inline std::vector<TrialOutcome> run_all(const ExperimentConfig& cfg, const std::vector<Cell>& cells) {
  const auto per_cell = static_cast<std::size_t>(cfg.trials);
  const std::size_t total = cells.size() * per_cell;
  std::vector<std::optional<TrialOutcome>> slots(total);
  auto work = [&](std::size_t job) {
    const std::size_t ci = job / per_cell;
    const std::size_t ti = job % per_cell;
    const Seed cell_seed = derive_seed(cfg.master_seed, ci);
    const Seed trial_seed = derive_seed(cell_seed, ti);
    const auto start = std::chrono::steady_clock::now();
    TrialOutcome outcome = run_trial(cfg, cells[ci], trial_seed);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    TrialRecord rec;
    rec.add("cell", ci).add("trial", ti);
    for (auto& f : outcome.record.fields) rec.fields.push_back(std::move(f));
    if (cfg.wall_time) rec.add(kWallTimeField, elapsed.count());
    outcome.record = std::move(rec);
    slots[job] = std::move(outcome);
  };

  if (cfg.threads <= 1) {
    for (std::size_t j = 0; j < total; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < cfg.threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < total; j = next++) work(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<TrialOutcome> out;
  out.reserve(total);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<double> column(const std::vector<TrialOutcome>& outcomes, std::size_t begin, std::size_t end,
                                  const std::string& key, bool skip_failed = true) {
  std::vector<double> xs;
  for (std::size_t i = begin; i < end; ++i) {
    if (skip_failed && outcomes[i].failed) continue;
    if (outcomes[i].record.get(key) == nullptr) continue;
    xs.push_back(outcomes[i].record.number(key));
  }
  return xs;
}

inline void add_quantiles(CellSummary& s, const std::string& name, const std::vector<double>& xs) {
  const Quantiles q = quantiles(xs);
  s.stats.emplace_back(name + "_min", q.min);
  s.stats.emplace_back(name + "_med", q.median);
  s.stats.emplace_back(name + "_max", q.max);
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

}  // namespace detail

/// Executes every grid cell and trial of `cfg` and aggregates per-cell
/// summaries. Performs no I/O.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto cells = detail::build_cells(cfg);
  const auto outcomes = detail::run_all(cfg, cells);
  const auto per_cell = static_cast<std::size_t>(cfg.trials);

  ExperimentResult result;
  result.kind = cfg.experiment;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const std::size_t b = ci * per_cell;
    const std::size_t e = b + per_cell;
    CellSummary s;
    s.label = detail::format_cell(cfg, cells[ci]);
    for (std::size_t i = b; i < e; ++i) {
      ++s.trials;
      s.violations += outcomes[i].violation ? 1 : 0;
      s.failed += outcomes[i].failed ? 1 : 0;
    }
    switch (cfg.experiment) {
      case ExperimentKind::chain_sweep:
      case ExperimentKind::reduction_run: {
        detail::add_quantiles(s, "final_fidelity", detail::column(outcomes, b, e, "final_fidelity"));
        const auto keep = detail::column(outcomes, b, e, "keep_probability");
        s.stats.emplace_back("keep_probability_min", quantiles(keep).min);
        s.stats.emplace_back("bound_1_minus_16eps", 1.0 - 16.0 * cells[ci].param);
        // Empirical rate at which the mixed estimate met F(rho, sigma) >= 1 - eps.
        const auto hyp = detail::column(outcomes, b, e, "hypotheses_hold");
        double met = 0.0;
        for (double x : hyp) met += x;
        s.stats.emplace_back("mixed_target_rate", hyp.empty() ? 0.0 : met / hyp.size());
        const auto stronger = detail::column(outcomes, b, e, "stronger_bound_holds");
        double held = 0.0;
        for (double x : stronger) held += x;
        s.stats.emplace_back("stronger_bound_rate", stronger.empty() ? 0.0 : held / stronger.size());
        s.stats.emplace_back("samples_total",
                             static_cast<double>(cells[ci].n) +
                                 std::ceil(cfg.c_extra * cells[ci].r * cells[ci].r / cells[ci].param));
        break;
      }
      case ExperimentKind::scaling_pure:
      case ExperimentKind::scaling_mixed:
        detail::add_quantiles(s, "infidelity", detail::column(outcomes, b, e, "infidelity"));
        break;
      case ExperimentKind::gentle_measurement:
        s.stats.emplace_back("max_distance", quantiles(detail::column(outcomes, b, e, "distance")).max);
        detail::add_quantiles(s, "ratio_sqrt", detail::column(outcomes, b, e, "ratio_sqrt"));
        detail::add_quantiles(s, "ratio_linear", detail::column(outcomes, b, e, "ratio_linear"));
        break;
      case ExperimentKind::proposition_search:
        s.stats.emplace_back("min_c", quantiles(detail::column(outcomes, b, e, "min_c")).min);
        s.stats.emplace_back("min_slack", quantiles(detail::column(outcomes, b, e, "min_slack")).min);
        break;
    }
    result.violations += s.violations;
    result.cells.push_back(std::move(s));
  }
  for (const auto& o : outcomes) result.records.push_back(o.record);

  // Scaling fits per fixed (r, d) across the budget ladder.
  if (cfg.experiment == ExperimentKind::scaling_pure || cfg.experiment == ExperimentKind::scaling_mixed) {
    std::map<std::pair<Index, Index>, std::vector<TrialRecord>> groups;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const Cell& c = cells[i / per_cell];
      groups[{c.r, c.d}].push_back(outcomes[i].record);
    }
    for (const auto& [key, recs] : groups) {
      std::ostringstream os;
      if (cfg.experiment == ExperimentKind::scaling_mixed) os << "r=" << key.first << " ";
      os << "d=" << key.second << ": ";
      try {
        const ScalingFit fit = fit_scaling(recs);
        os << "log-log slope " << detail::fmt(fit.slope) << ", intercept " << detail::fmt(fit.intercept)
           << ", residuals";
        for (double r : fit.residuals) os << ' ' << detail::fmt(r);
      } catch (const PreconditionError& e) {
        os << "no fit (" << e.what() << ")";
      }
      result.notes.push_back(os.str());
    }
  }

  // Trend of max T / delta as delta shrinks, per (r, d).
  if (cfg.experiment == ExperimentKind::gentle_measurement) {
    std::map<std::pair<Index, Index>, std::map<double, double>> trend;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const auto lin = detail::column(outcomes, ci * per_cell, (ci + 1) * per_cell, "ratio_linear");
      trend[{cells[ci].r, cells[ci].d}][cells[ci].param] = quantiles(lin).max;
    }
    for (const auto& [key, by_delta] : trend) {
      std::ostringstream os;
      os << "r=" << key.first << " d=" << key.second << ": max T/delta by decreasing delta:";
      for (auto it = by_delta.rbegin(); it != by_delta.rend(); ++it) {
        os << " [" << detail::fmt(it->first) << "] " << detail::fmt(it->second);
      }
      result.notes.push_back(os.str());
    }
  }
  return result;
}

/// Aligned text table, one row per cell, then notes and the total.
inline void print_summary(std::ostream& os, const ExperimentResult& result) {
  os << "experiment: " << to_string(result.kind) << "\n";
  if (result.cells.empty()) return;
  std::vector<std::string> header{"cell", "trials", "violations", "failed"};
  for (const auto& [k, v] : result.cells.front().stats) header.push_back(k);
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : result.cells) {
    std::vector<std::string> row{c.label, std::to_string(c.trials), std::to_string(c.violations),
                                 std::to_string(c.failed)};
    for (const auto& [k, v] : c.stats) row.push_back(detail::fmt(v));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "  " : "") << (i == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[i]))
         << row[i];
    }
    os << std::right << "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  for (const auto& n : result.notes) os << "note: " << n << "\n";
  os << "total violations: " << result.violations << "\n";
}

}  // namespace tomored::harness
