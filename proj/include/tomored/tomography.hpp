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
#include <optional>
#include <string>
#include <string_view>

#include "tomored/state_core.hpp"

namespace tomored {

// ---------------------------------------------------------------------------
// Backends

enum class BackendKind { oracle_exact_infidelity, measurement_linear_inversion };

inline std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::oracle_exact_infidelity ? "oracle" : "measurement";
}

/// A tomography procedure: either a synthetic oracle that hits a prescribed
/// infidelity, or simulated measurements followed by linear inversion.
struct TomographyBackend {
  BackendKind kind = BackendKind::oracle_exact_infidelity;
  double epsilon_target = 0.1;        // oracle
  std::int64_t shots = 0;             // estimator: budget for mixed-state runs
  std::optional<Seed> design_seed;    // estimator: fixed basis design, if set

  static TomographyBackend oracle(double epsilon) {
    return {BackendKind::oracle_exact_infidelity, epsilon, 0, std::nullopt};
  }
  static TomographyBackend measurement(std::int64_t shots, std::optional<Seed> design_seed = {}) {
    return {BackendKind::measurement_linear_inversion, 0.0, shots, design_seed};
  }

  void validate() const {
    if (kind == BackendKind::oracle_exact_infidelity) {
      require(epsilon_target > 0.0 && epsilon_target < 1.0, "oracle backend: epsilon must lie in (0, 1)");
    } else {
      require(shots >= 1, "measurement backend: shot budget must be at least 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Oracles

inline constexpr int kOracleBisectionSteps = 200;

namespace detail {

/// Perturbs rho until distance(rho, sigma) lands in [lo, hi] with the rank
/// preserved. sigma(theta) rotates the support of rho by exp(theta K) and
/// reweights its eigenvalues by exp(theta g_i); theta is bracketed by doubling
/// and then bisected. A fresh direction (K, g) is drawn whenever one cannot
/// reach the window.
template <typename Distance>
DensityMatrix perturb_into_window(const DensityMatrix& rho, Seed seed, Distance&& distance, double lo_target,
                                  double hi_target, double theta_start, const char* op) {
  const Index d = rho.dim();
  const Index rank = rho.rank();
  const CMatrix support = rho.eigenvectors().leftCols(rank);
  const RVector weights = rho.eigenvalues().head(rank);

  constexpr int kDirections = 16;
  constexpr double kMaxTheta = 64.0;
  for (int attempt = 0; attempt < kDirections; ++attempt) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    const AntiHermitianExp rotation(random_antihermitian(d, rng));
    std::normal_distribution<double> normal;
    RVector g(rank);
    for (Index i = 0; i < rank; ++i) g(i) = normal(rng);

    auto candidate = [&](double theta) {
      RVector mu = weights.array() * (theta * g.array()).exp();
      mu /= mu.sum();
      return DensityMatrix::from_spectrum(rotation(theta) * support, mu);
    };

    // Bracket: distance(lo) < lo_target, distance(hi) > hi_target.
    double lo = 0.0;
    double hi = theta_start;
    bool bracketed = false;
    while (hi <= kMaxTheta) {
      DensityMatrix sigma = candidate(hi);
      const double dist = distance(rho, sigma);
      if (dist >= lo_target && dist <= hi_target && sigma.rank() == rank) return sigma;
      if (dist > hi_target) {
        bracketed = true;
        break;
      }
      lo = hi;
      hi *= 2.0;
    }
    if (!bracketed) continue;

    for (int step = 0; step < kOracleBisectionSteps; ++step) {
      const double mid = 0.5 * (lo + hi);
      DensityMatrix sigma = candidate(mid);
      const double dist = distance(rho, sigma);
      if (dist >= lo_target && dist <= hi_target) {
        if (sigma.rank() == rank) return sigma;
        break;
      }
      (dist < lo_target ? lo : hi) = mid;
    }
  }
  throw NumericalError(std::string(op) + ": bisection failed to reach the target window");
}

}  // namespace detail

/// Estimate sigma of rho with rank(sigma) = rank(rho) and
/// fidelity_mixed(rho, sigma) in [1 - epsilon, 1 - epsilon / 2].
inline DensityMatrix oracle_mixed_estimate(const DensityMatrix& rho, double epsilon, Seed seed) {
  require(epsilon > 0.0 && epsilon < 1.0, "oracle_mixed_estimate: epsilon must lie in (0, 1)");
  auto infidelity = [](const DensityMatrix& a, const DensityMatrix& b) { return 1.0 - fidelity_mixed(a, b); };
  return detail::perturb_into_window(rho, seed, infidelity, epsilon / 2.0, epsilon, std::sqrt(epsilon) / 4.0,
                                     "oracle_mixed_estimate");
}

/// Estimate sigma of rho with rank(sigma) = rank(rho) and
/// trace_distance(rho, sigma) in [delta / 2, delta].
inline DensityMatrix oracle_trace_distance_estimate(const DensityMatrix& rho, double delta, Seed seed) {
  require(delta > 0.0 && delta < 1.0, "oracle_trace_distance_estimate: delta must lie in (0, 1)");
  auto distance = [](const DensityMatrix& a, const DensityMatrix& b) { return trace_distance(a, b); };
  return detail::perturb_into_window(rho, seed, distance, delta / 2.0, delta, delta / 4.0,
                                     "oracle_trace_distance_estimate");
}

/// Relative inset of the pure oracle's target from the lower window edge.
inline constexpr double kOracleEdgeInset = 1e-6;

/// Estimate phi with |<phi|psi>|^2 in [1 - epsilon, 1 - epsilon / 2], made by
/// rotating psi toward a random unit vector orthogonal to it. The target sits
/// at the lower edge of the window. With `subspace` (orthonormal columns
/// containing psi) the rotation stays inside that subspace. In a
/// one-dimensional space the only estimate is psi itself.
inline PureState oracle_pure_estimate(const PureState& psi, double epsilon, Seed seed,
                                      const std::optional<CMatrix>& subspace = std::nullopt) {
  require(epsilon > 0.0 && epsilon < 1.0, "oracle_pure_estimate: epsilon must lie in (0, 1)");
  const Index n = psi.dim();
  const CVector& a = psi.amplitudes();
  if (subspace) {
    require_same_dim(subspace->rows(), n, "oracle_pure_estimate");
    require((a - *subspace * (subspace->adjoint() * a)).norm() <= kNormTol,
            "oracle_pure_estimate: psi lies outside the supplied subspace");
  }
  const Index free_dim = subspace ? subspace->cols() : n;
  if (free_dim <= 1) return psi;

  Rng rng = make_rng(seed);
  CVector chi;
  for (int attempt = 0; attempt < 64; ++attempt) {
    chi = subspace ? CVector(*subspace * complex_gaussian_vector(free_dim, rng))
                   : complex_gaussian_vector(n, rng);
    chi -= a.dot(chi) * a;
    if (chi.norm() > 1e-6) break;
  }
  chi.normalize();
  const double target = 1.0 - epsilon * (1.0 - kOracleEdgeInset);
  const double c = std::sqrt(target);
  const double s = std::sqrt(1.0 - target);
  return PureState::from_amplitudes(c * a + s * chi, psi.dims());
}

// ---------------------------------------------------------------------------
// Measurement-based estimators

namespace detail {

/// Measurement design: basis 0 is the standard basis, the rest Haar-random.
inline std::vector<CMatrix> basis_design(Index d, Seed seed) {
  const auto per_d = static_cast<Index>(std::ceil(3.0 * std::log(static_cast<double>(d))));
  const Index count = std::max<Index>(6, per_d * d);
  std::vector<CMatrix> bases;
  bases.reserve(static_cast<std::size_t>(count));
  bases.push_back(CMatrix::Identity(d, d));
  Rng rng = make_rng(seed);
  while (static_cast<Index>(bases.size()) < count) bases.push_back(haar_unitary(d, rng));
  return bases;
}

/// Multinomial counts via sequential conditional binomials.
inline std::vector<std::int64_t> multinomial(std::int64_t trials, const RVector& probs, Rng& rng) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(probs.size()), 0);
  double remaining_mass = 1.0;
  std::int64_t remaining = trials;
  for (Index k = 0; k + 1 < probs.size() && remaining > 0; ++k) {
    const double q = remaining_mass > 0.0 ? std::clamp(probs(k) / remaining_mass, 0.0, 1.0) : 0.0;
    const std::int64_t c = std::binomial_distribution<std::int64_t>(remaining, q)(rng);
    counts[static_cast<std::size_t>(k)] = c;
    remaining -= c;
    remaining_mass -= probs(k);
  }
  if (probs.size() > 0) counts.back() += remaining;
  return counts;
}

/// Orthonormal basis of d x d Hermitian matrices under <A, B> = Tr(A B).
inline std::vector<CMatrix> hermitian_basis(Index d) {
  std::vector<CMatrix> basis;
  const double h = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < d; ++i) {
    CMatrix e = CMatrix::Zero(d, d);
    e(i, i) = 1.0;
    basis.push_back(e);
  }
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      CMatrix sym = CMatrix::Zero(d, d);
      sym(i, j) = sym(j, i) = h;
      basis.push_back(sym);
      CMatrix asym = CMatrix::Zero(d, d);
      asym(i, j) = Complex(0.0, -h);
      asym(j, i) = Complex(0.0, h);
      basis.push_back(asym);
    }
  }
  return basis;
}

/// Simulates `shots` single-copy measurements of rho split evenly across the
/// bases and returns the least-squares Hermitian solution of
/// Tr(|e_bk><e_bk| X) = frequency_bk.
inline CMatrix linear_inversion(const CMatrix& rho, std::int64_t shots, Seed seed,
                                std::optional<Seed> design_seed) {
  const Index d = rho.rows();
  const auto bases = basis_design(d, design_seed.value_or(derive_seed(seed, 0)));
  const auto herm = hermitian_basis(d);
  const auto m = static_cast<Index>(bases.size());
  Eigen::MatrixXd design(m * d, d * d);
  Eigen::VectorXd freq(m * d);
  Rng rng = make_rng(derive_seed(seed, 1));
  for (Index b = 0; b < m; ++b) {
    const CMatrix& u = bases[static_cast<std::size_t>(b)];
    const std::int64_t n_b = shots / m + (b < shots % m ? 1 : 0);
    RVector probs(d);
    for (Index k = 0; k < d; ++k) {
      probs(k) = std::max(0.0, u.col(k).dot(rho * u.col(k)).real());
      for (std::size_t g = 0; g < herm.size(); ++g) {
        design(b * d + k, static_cast<Index>(g)) = u.col(k).dot(herm[g] * u.col(k)).real();
      }
    }
    probs /= probs.sum();
    const auto counts = multinomial(n_b, probs, rng);
    for (Index k = 0; k < d; ++k) {
      freq(b * d + k) = n_b > 0 ? static_cast<double>(counts[static_cast<std::size_t>(k)]) / n_b : 0.0;
    }
  }
  const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(freq);
  CMatrix estimate = CMatrix::Zero(d, d);
  for (std::size_t g = 0; g < herm.size(); ++g) estimate += coeffs(static_cast<Index>(g)) * herm[g];
  return hermitian_part(estimate);
}

inline void require_budget(std::int64_t n, Index d, const char* op) {
  if (n < d * d) {
    throw PreconditionError(std::string(op) + ": shot budget " + std::to_string(n) +
                            " is below the informational-completeness floor d^2 = " +
                            std::to_string(d * d));
  }
}

}  // namespace detail

/// Linear-inversion estimate of a pure state from n single-copy measurements
/// in randomized bases; returns the top eigenvector of the reconstruction.
inline PureState estimate_pure_state_from_measurements(const PureState& psi_true, std::int64_t n, Seed seed,
                                                       std::optional<Seed> design_seed = std::nullopt) {
  const Index d = psi_true.dim();
  detail::require_budget(n, d, "estimate_pure_state_from_measurements");
  if (d == 1) return psi_true;
  const CVector& a = psi_true.amplitudes();
  const CMatrix estimate = detail::linear_inversion(a * a.adjoint(), n, seed, design_seed);
  const HermitianEigen eig = hermitian_eigen(estimate);
  return PureState::from_amplitudes(eig.vectors.col(0), psi_true.dims());
}

/// Linear inversion, projection onto states (negative eigenvalues clamped,
/// trace renormalized), then truncation to the r largest eigenpairs.
inline DensityMatrix estimate_mixed_state_from_measurements(const DensityMatrix& rho_true, Index r, std::int64_t n,
                                                            Seed seed,
                                                            std::optional<Seed> design_seed = std::nullopt) {
  const Index d = rho_true.dim();
  require(r >= 1 && r <= d, "estimate_mixed_state_from_measurements: need 1 <= r <= d");
  detail::require_budget(n, d, "estimate_mixed_state_from_measurements");
  const CMatrix estimate = detail::linear_inversion(rho_true.matrix(), n, seed, design_seed);
  const HermitianEigen eig = hermitian_eigen(estimate);
  RVector top = eig.values.head(r).cwiseMax(0.0);
  if (!(top.sum() > 0.0)) {
    // Degenerate reconstruction: fall back to the leading direction.
    top.setZero();
    top(0) = 1.0;
  }
  top /= top.sum();
  return DensityMatrix::from_spectrum(eig.vectors.leftCols(r), top);
}

// ---------------------------------------------------------------------------
// Dispatch

/// Mixed-state tomography (the algorithm consuming copies of rho).
inline DensityMatrix run_mixed_backend(const TomographyBackend& backend, const DensityMatrix& rho, Index r,
                                       Seed seed) {
  backend.validate();
  if (backend.kind == BackendKind::oracle_exact_infidelity) {
    return oracle_mixed_estimate(rho, backend.epsilon_target, seed);
  }
  return estimate_mixed_state_from_measurements(rho, r, backend.shots, seed, backend.design_seed);
}

/// Pure-state tomography with `budget` copies (ignored by the oracle).
inline PureState run_pure_backend(const TomographyBackend& backend, const PureState& psi, std::int64_t budget,
                                  Seed seed) {
  if (backend.kind == BackendKind::oracle_exact_infidelity) {
    backend.validate();
    return oracle_pure_estimate(psi, backend.epsilon_target, seed);
  }
  return estimate_pure_state_from_measurements(psi, budget, seed, backend.design_seed);
}

}  // namespace tomored
