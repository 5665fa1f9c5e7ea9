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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tomored/measurement.hpp"
#include "tomored/state_core.hpp"
#include "tomored/tomography.hpp"

namespace tomored {

// ---------------------------------------------------------------------------
// Geometric composition

/// Overlap moduli of the three states psi, psi~ (tilde) and phi, the phases
/// aligning them, and the explicit squared distances between aligned vectors.
struct OverlapTriple {
  double a = 1.0;      // |<psi~|psi>|
  double b = 1.0;      // |<phi|psi~>|
  double c = 1.0;      // |<phi|psi>|
  double alpha = 0.0;  // e^{i alpha} <psi~|psi> = a
  double beta = 0.0;   // e^{i beta} <psi~|phi> = b
  double dist_tilde_psi = 0.0;  // ||psi~ - e^{i alpha} psi||^2
  double dist_tilde_phi = 0.0;  // ||psi~ - e^{i beta} phi||^2
  double dist_phi_psi = 0.0;    // ||e^{i beta} phi - e^{i alpha} psi||^2
};

namespace detail {

inline double aligning_phase(Complex z) {
  double angle = -std::arg(z);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  return angle >= 2.0 * std::numbers::pi ? 0.0 : angle;
}

}  // namespace detail

inline OverlapTriple make_overlap_triple(const PureState& psi, const PureState& psi_tilde, const PureState& phi) {
  const Complex tilde_psi = psi_tilde.inner(psi);
  const Complex tilde_phi = psi_tilde.inner(phi);
  OverlapTriple t;
  t.a = std::min(1.0, std::abs(tilde_psi));
  t.b = std::min(1.0, std::abs(tilde_phi));
  t.c = std::min(1.0, std::abs(phi.inner(psi)));
  t.alpha = detail::aligning_phase(tilde_psi);
  t.beta = detail::aligning_phase(tilde_phi);
  const Complex ea = std::polar(1.0, t.alpha);
  const Complex eb = std::polar(1.0, t.beta);
  const CVector& vp = psi.amplitudes();
  const CVector& vt = psi_tilde.amplitudes();
  const CVector& vf = phi.amplitudes();
  t.dist_tilde_psi = (vt - ea * vp).squaredNorm();
  t.dist_tilde_phi = (vt - eb * vf).squaredNorm();
  t.dist_phi_psi = (eb * vf - ea * vp).squaredNorm();
  return t;
}

/// Outcome of the composition argument: a, b >= 1 - eta implies
/// c >= 1 - 4 eta, with each intermediate step evaluated.
struct GeometricCheck {
  bool applicable = false;        // a, b >= 1 - eta
  double lower_bound = 1.0;       // 1 - 4 eta
  bool satisfied = true;          // c >= 1 - 4 eta (slack kBoundSlack)
  bool alignment_identity = true; // ||psi~ - e^{i alpha} psi||^2 = 2 - 2a, same for beta
  bool aligned_distance_bound = true;  // 2 - 2a <= 2 eta and 2 - 2b <= 2 eta
  bool triangle_step = true;      // 2 - 2c <= ||e^{ib} phi - e^{ia} psi||^2 <= 2(2 - 2a) + 2(2 - 2b)
  bool triangle_total = true;     // 2(2 - 2a) + 2(2 - 2b) <= 8 eta
  double triangle_rhs = 0.0;

  bool all_steps_hold() const {
    return satisfied && alignment_identity && aligned_distance_bound && triangle_step && triangle_total;
  }
};

inline GeometricCheck geometric_composition(const OverlapTriple& t, double eta) {
  GeometricCheck g;
  g.lower_bound = 1.0 - 4.0 * eta;
  g.applicable = t.a >= 1.0 - eta && t.b >= 1.0 - eta;
  const double ga = 2.0 - 2.0 * t.a;
  const double gb = 2.0 - 2.0 * t.b;
  const double gc = 2.0 - 2.0 * t.c;
  g.triangle_rhs = 2.0 * ga + 2.0 * gb;
  g.alignment_identity =
      std::abs(t.dist_tilde_psi - ga) <= kBoundSlack && std::abs(t.dist_tilde_phi - gb) <= kBoundSlack;
  if (!g.applicable) return g;
  g.aligned_distance_bound = ga <= 2.0 * eta + kBoundSlack && gb <= 2.0 * eta + kBoundSlack;
  g.triangle_step = gc <= t.dist_phi_psi + kBoundSlack && t.dist_phi_psi <= g.triangle_rhs + kBoundSlack;
  g.triangle_total = g.triangle_rhs <= 8.0 * eta + kBoundSlack;
  g.satisfied = t.c >= g.lower_bound - kBoundSlack;
  return g;
}

// ---------------------------------------------------------------------------
// Inequality chain

/// One evaluated inequality. Only analytic checks count as violations;
/// informational ones are recorded for inspection.
struct ChainCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool applicable = true;
  bool satisfied = true;
  bool analytic = true;
  bool vacuous = false;

  bool violated() const { return analytic && applicable && !satisfied; }
};

struct ChainRecord {
  double fidelity_rho_sigma = 0.0;  // F(rho, sigma)
  double uhlmann_overlap = 0.0;     // |<psi|phi_opt>|^2
  double keep_probability = 0.0;    // <psi|I (x) Pi|psi>
  double psi_tilde_fidelity = 0.0;  // |<psi~|psi>|^2
  double step5_fidelity = 0.0;      // |<phi|psi~>|^2
  double final_fidelity = 0.0;      // |<phi|psi>|^2
  double phi_subspace_residual = 0.0;
  Index pi_rank = 0;
  bool usable = false;  // keep probability above kProbFloor
  std::vector<ChainCheck> checks;

  bool any_violation() const {
    for (const auto& c : checks) {
      if (c.violated()) return true;
    }
    return false;
  }

  const ChainCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

inline constexpr double kUhlmannTol = 1e-6;

namespace detail {

inline ChainRecord verify_chain_impl(const PureState& psi, const DensityMatrix& sigma, const PureState* phi,
                                     double epsilon) {
  require_same_dim(sigma.dim(), psi.dims().d, "verify_chain");
  const Index r = psi.dims().r;
  ChainRecord rec;
  const DensityMatrix rho = partial_trace_x(psi);
  rec.fidelity_rho_sigma = fidelity_mixed(rho, sigma);
  const double fid = rec.fidelity_rho_sigma;
  const bool estimate_ok = fid >= 1.0 - epsilon;

  {
    ChainCheck c{"uhlmann_existence", 0.0, fid};
    c.applicable = sigma.rank() <= r;
    if (c.applicable) {
      c.value = fidelity_pure_pure(psi, optimal_purification_against(sigma, psi));
      c.satisfied = std::abs(c.value - fid) <= kUhlmannTol;
    }
    rec.uhlmann_overlap = c.value;
    rec.checks.push_back(c);
  }

  const Projector pi = support_projector(sigma, r);
  rec.pi_rank = pi.rank();
  rec.keep_probability = outcome_probability(psi, pi);
  const double p = rec.keep_probability;
  rec.usable = p > kProbFloor;

  {
    ChainCheck c{"cauchy_schwarz", p, fid};
    c.satisfied = p >= fid - kBoundSlack;
    c.vacuous = !rec.usable;
    rec.checks.push_back(c);
  }
  {
    ChainCheck c{"keep_probability_floor", p, 1.0 - epsilon};
    c.applicable = estimate_ok;
    c.satisfied = p >= 1.0 - epsilon - kBoundSlack;
    rec.checks.push_back(c);
  }

  std::optional<PureState> psi_tilde;
  if (rec.usable) {
    psi_tilde = project_and_renormalize(psi, pi);
    rec.psi_tilde_fidelity = fidelity_pure_pure(*psi_tilde, psi);
  }
  {
    ChainCheck c{"projection_identity", rec.psi_tilde_fidelity, p};
    c.applicable = rec.usable;
    c.satisfied = !rec.usable || std::abs(rec.psi_tilde_fidelity - p) <= kBoundSlack;
    rec.checks.push_back(c);
  }

  if (phi == nullptr || !psi_tilde) return rec;

  rec.final_fidelity = fidelity_pure_pure(*phi, psi);
  rec.step5_fidelity = fidelity_pure_pure(*phi, *psi_tilde);
  const bool step5_ok = rec.step5_fidelity >= 1.0 - epsilon;
  const bool hypotheses = estimate_ok && step5_ok;

  {
    Eigen::Map<const CMatrix> slices(phi->amplitudes().data(), psi.dims().d, r);
    rec.phi_subspace_residual = (slices - pi.matrix() * slices).norm();
    ChainCheck c{"step5_subspace", rec.phi_subspace_residual, 0.0};
    c.satisfied = rec.phi_subspace_residual <= kBoundSlack;
    rec.checks.push_back(c);
  }
  {
    ChainCheck c{"step5_guarantee", rec.step5_fidelity, 1.0 - epsilon};
    c.analytic = false;
    c.satisfied = step5_ok;
    rec.checks.push_back(c);
  }

  const OverlapTriple triple = make_overlap_triple(psi, *psi_tilde, *phi);
  const GeometricCheck geo = geometric_composition(triple, epsilon);
  {
    ChainCheck c{"geometric_proposition", triple.c, geo.lower_bound};
    c.applicable = geo.applicable;
    c.satisfied = geo.all_steps_hold();
    rec.checks.push_back(c);
  }
  {
    const double root = 1.0 - 8.0 * epsilon;
    ChainCheck c{"final_bound_squared", rec.final_fidelity, root * root};
    c.applicable = hypotheses && root >= 0.0;
    c.satisfied = rec.final_fidelity >= root * root - kBoundSlack;
    rec.checks.push_back(c);
  }
  {
    ChainCheck c{"final_bound", rec.final_fidelity, 1.0 - 16.0 * epsilon};
    c.applicable = hypotheses;
    c.satisfied = rec.final_fidelity >= 1.0 - 16.0 * epsilon - kBoundSlack;
    rec.checks.push_back(c);
  }
  {
    ChainCheck c{"final_bound_8eps", rec.final_fidelity, 1.0 - 8.0 * epsilon};
    c.applicable = hypotheses;
    c.analytic = false;
    c.satisfied = rec.final_fidelity >= 1.0 - 8.0 * epsilon;
    rec.checks.push_back(c);
  }
  return rec;
}

}  // namespace detail

/// Evaluates every inequality of the reduction's fidelity analysis for input
/// psi (dims (r, d)), Step-2 estimate sigma and Step-5 output phi. Violations
/// are reported in the record, never thrown.
inline ChainRecord verify_chain(const PureState& psi, const DensityMatrix& sigma, const PureState& phi,
                                double epsilon) {
  require_same_dim(phi.dim(), psi.dim(), "verify_chain");
  return detail::verify_chain_impl(psi, sigma, &phi, epsilon);
}

// ---------------------------------------------------------------------------
// The reduction

struct ReductionConfig {
  Index r = 1;
  Index d = 2;
  std::int64_t n = 1000;
  double epsilon = 0.1;
  double c_extra = 4.0;
  TomographyBackend mixed_backend = TomographyBackend::oracle(0.1);
  TomographyBackend pure_backend = TomographyBackend::oracle(0.1);
  Seed seed = 0;

  /// Both steps use oracles calibrated to `epsilon`.
  static ReductionConfig with_oracles(Index r, Index d, double epsilon, Seed seed, std::int64_t n = 1000) {
    return {r, d, n, epsilon, 4.0, TomographyBackend::oracle(epsilon), TomographyBackend::oracle(epsilon), seed};
  }

  /// ceil(c_extra * r^2 / epsilon).
  std::int64_t extra_copies() const {
    return static_cast<std::int64_t>(std::ceil(c_extra * static_cast<double>(r * r) / epsilon));
  }

  void validate() const {
    require(r >= 1 && r <= d, "ReductionConfig: need 1 <= r <= d");
    require(epsilon > 0.0 && epsilon < 1.0, "ReductionConfig: epsilon must lie in (0, 1)");
    require(n >= 1, "ReductionConfig: n must be at least 1");
    require(c_extra > 0.0, "ReductionConfig: c_extra must be positive");
    mixed_backend.validate();
    if (pure_backend.kind == BackendKind::oracle_exact_infidelity) pure_backend.validate();
  }
};

enum class TrialStatus {
  ok,
  disjoint_support,     // keep probability at or below kProbFloor
  starved,              // no copy survived Step 4
  step5_budget_short,   // kept copies below the Step-5 estimator's floor
};

inline std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::ok: return "ok";
    case TrialStatus::disjoint_support: return "disjoint_support";
    case TrialStatus::starved: return "starved";
    case TrialStatus::step5_budget_short: return "step5_budget_short";
  }
  return "unknown";
}

struct ReductionReport {
  DensityMatrix sigma;
  TrialStatus status = TrialStatus::ok;
  Index pi_rank = 0;
  double keep_probability = 0.0;
  std::int64_t n = 0;
  std::int64_t extra_copies = 0;
  std::int64_t kept_count = 0;
  bool low_kept = false;  // kept_count < ceil(extra_copies / 2)
  double psi_tilde_fidelity = 0.0;
  double step5_fidelity = 0.0;
  double final_fidelity = 0.0;
  std::int64_t samples_total = 0;
  ChainRecord chain;
  std::optional<PureState> psi_tilde;
  std::optional<PureState> phi;

  bool any_violation() const { return chain.any_violation(); }
};

/// Seed streams used inside one run.
enum class ReductionStream : std::uint64_t { mixed_backend = 1, shots = 2, pure_backend = 3 };

namespace detail {

/// Orthonormal basis of C^r (x) supp(Pi) as coordinates: psi(x, y) =
/// sum_j coords(x, j) w_j(y).
inline CMatrix to_support_coordinates(const PureState& psi, const Projector& pi) {
  return psi.coefficients() * pi.basis().conjugate();
}

inline PureState from_support_coordinates(const CMatrix& coords, const Projector& pi) {
  return PureState::from_coefficients(coords * pi.basis().transpose());
}

}  // namespace detail

/// Runs the reduction from pure-state tomography on C^r (x) C^d to rank-r
/// mixed-state tomography on C^d:
///   1. rho = Tr_X |psi><psi| (the n copies share one classical rho);
///   2. sigma = mixed backend on rho;
///   3. Pi = support projector of sigma (rank <= r);
///   4. ceil(c_extra r^2 / epsilon) further copies measured with {Pi, I - Pi},
///      keeping psi~ = (I (x) Pi) psi / norm;
///   5. phi = pure backend on psi~ in coordinates of C^r (x) supp(Pi), with the
///      kept copies as budget.
inline ReductionReport run_algorithm_b(const PureState& psi, const ReductionConfig& config) {
  config.validate();
  require(psi.dims() == Dims{config.r, config.d}, "run_algorithm_b: psi dims do not match the config");
  auto stream = [&](ReductionStream s) { return derive_seed(config.seed, static_cast<std::uint64_t>(s)); };

  const DensityMatrix rho = partial_trace_x(psi);
  DensityMatrix sigma = run_mixed_backend(config.mixed_backend, rho, config.r, stream(ReductionStream::mixed_backend));
  const Projector pi = support_projector(sigma, config.r);

  ReductionReport report{sigma};
  report.pi_rank = pi.rank();
  report.n = config.n;
  report.extra_copies = config.extra_copies();
  report.samples_total = report.n + report.extra_copies;
  report.keep_probability = outcome_probability(psi, pi);

  if (!(report.keep_probability > kProbFloor)) {
    report.status = TrialStatus::disjoint_support;
    report.chain = detail::verify_chain_impl(psi, sigma, nullptr, config.epsilon);
    return report;
  }

  report.kept_count = sample_shots(psi, pi, report.extra_copies, stream(ReductionStream::shots)).kept_count;
  report.low_kept = report.kept_count < (report.extra_copies + 1) / 2;
  report.psi_tilde = project_and_renormalize(psi, pi);
  report.psi_tilde_fidelity = fidelity_pure_pure(*report.psi_tilde, psi);

  if (report.kept_count == 0) {
    report.status = TrialStatus::starved;
    report.chain = detail::verify_chain_impl(psi, sigma, nullptr, config.epsilon);
    return report;
  }

  const PureState chart = PureState::from_coefficients(detail::to_support_coordinates(*report.psi_tilde, pi));
  const Index chart_dim = chart.dim();
  if (config.pure_backend.kind == BackendKind::measurement_linear_inversion &&
      report.kept_count < chart_dim * chart_dim) {
    report.status = TrialStatus::step5_budget_short;
    report.chain = detail::verify_chain_impl(psi, sigma, nullptr, config.epsilon);
    return report;
  }
  const PureState estimate =
      run_pure_backend(config.pure_backend, chart, report.kept_count, stream(ReductionStream::pure_backend));
  report.phi = detail::from_support_coordinates(estimate.coefficients(), pi);

  report.chain = detail::verify_chain_impl(psi, sigma, &*report.phi, config.epsilon);
  report.step5_fidelity = report.chain.step5_fidelity;
  report.final_fidelity = report.chain.final_fidelity;
  return report;
}

// ---------------------------------------------------------------------------
// Gentle measurement

struct GentleTrial {
  bool skipped = false;          // keep probability vanished
  double rho_sigma_distance = 0.0;
  double keep_probability = 0.0;
  double distance = 0.0;         // T(|psi~><psi~|, |psi><psi|)
  double ratio_sqrt = 0.0;       // T / sqrt(delta)
  double ratio_linear = 0.0;     // T / delta
};

/// One trial: sigma at trace distance in [delta/2, delta] from Tr_X psi, then
/// the disturbance caused on psi by projecting Y onto supp(sigma).
inline GentleTrial gentle_measurement_trial(const PureState& psi, double delta, Seed seed) {
  require(delta > 0.0 && delta < 1.0, "gentle_measurement_trial: delta must lie in (0, 1)");
  const DensityMatrix rho = partial_trace_x(psi);
  const DensityMatrix sigma = oracle_trace_distance_estimate(rho, delta, seed);
  const Projector pi = support_projector(sigma, psi.dims().r);
  GentleTrial t;
  t.rho_sigma_distance = trace_distance(rho, sigma);
  t.keep_probability = outcome_probability(psi, pi);
  if (!(t.keep_probability > kProbFloor)) {
    t.skipped = true;
    return t;
  }
  const PureState psi_tilde = project_and_renormalize(psi, pi);
  t.distance = trace_distance(DensityMatrix::from_pure(psi_tilde), DensityMatrix::from_pure(psi));
  t.ratio_sqrt = t.distance / std::sqrt(delta);
  t.ratio_linear = t.distance / delta;
  return t;
}

struct Quantiles {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

inline Quantiles quantiles(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  return {*std::min_element(xs.begin(), xs.end()), median(xs), *std::max_element(xs.begin(), xs.end())};
}

struct GentleStatistics {
  std::int64_t trials = 0;
  std::int64_t skipped = 0;
  double max_distance = 0.0;
  Quantiles ratio_sqrt;
  Quantiles ratio_linear;
};

/// Repeats gentle_measurement_trial on a fixed psi; trial t uses
/// derive_seed(seed, t).
inline GentleStatistics gentle_measurement_experiment(const PureState& psi, double delta, std::int64_t trials,
                                                      Seed seed) {
  require(trials >= 1, "gentle_measurement_experiment: trials must be at least 1");
  GentleStatistics stats;
  std::vector<double> sq;
  std::vector<double> lin;
  for (std::int64_t t = 0; t < trials; ++t) {
    const GentleTrial g = gentle_measurement_trial(psi, delta, derive_seed(seed, static_cast<std::uint64_t>(t)));
    ++stats.trials;
    if (g.skipped) {
      ++stats.skipped;
      continue;
    }
    stats.max_distance = std::max(stats.max_distance, g.distance);
    sq.push_back(g.ratio_sqrt);
    lin.push_back(g.ratio_linear);
  }
  stats.ratio_sqrt = quantiles(sq);
  stats.ratio_linear = quantiles(lin);
  return stats;
}

}  // namespace tomored
