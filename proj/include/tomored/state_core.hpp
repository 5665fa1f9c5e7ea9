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
#include <string>
#include <utility>

#include "tomored/linalg.hpp"
#include "tomored/seed.hpp"

namespace tomored {

/// Register dimensions of a bipartite space X (dimension r) times Y
/// (dimension d). Amplitude index of |x>|y> is x*d + y.
struct Dims {
  Index r = 1;
  Index d = 1;

  constexpr Index total() const noexcept { return r * d; }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

/// Rotates v so its first entry of modulus above kSchmidtTol is real and
/// nonnegative.
inline void canonicalize_phase(CVector& v) {
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > kSchmidtTol) {
      v *= std::conj(v(i)) / mag;
      v(i) = Complex(mag, 0.0);
      return;
    }
  }
}

/// Unit vector over X (x) Y, stored in canonical global phase.
class PureState {
 public:
  /// Normalizes `amplitudes` and fixes the global phase.
  static PureState from_amplitudes(CVector amplitudes, Dims dims) {
    require(dims.r >= 1 && dims.d >= 1, "PureState: register dimensions must be positive");
    require_same_dim(amplitudes.size(), dims.total(), "PureState");
    const double norm = amplitudes.norm();
    if (!(norm > kProbFloor) || !std::isfinite(norm)) {
      throw NumericalError("PureState: amplitude vector has vanishing or non-finite norm");
    }
    amplitudes /= norm;
    canonicalize_phase(amplitudes);
    return PureState(std::move(amplitudes), dims);
  }

  /// Single-register state, dims (1, n).
  static PureState flat(CVector amplitudes) {
    const Index n = amplitudes.size();
    return from_amplitudes(std::move(amplitudes), Dims{1, n});
  }

  static PureState basis(Index index, Dims dims) {
    require(index >= 0 && index < dims.total(), "PureState::basis: index out of range");
    CVector v = CVector::Zero(dims.total());
    v(index) = 1.0;
    return PureState(std::move(v), dims);
  }

  /// Product state u (x) v.
  static PureState product(const CVector& u, const CVector& v) {
    CVector amps(u.size() * v.size());
    for (Index x = 0; x < u.size(); ++x) amps.segment(x * v.size(), v.size()) = u(x) * v;
    return from_amplitudes(std::move(amps), Dims{u.size(), v.size()});
  }

  /// Builds a state from its r x d coefficient matrix M(x, y).
  static PureState from_coefficients(const CMatrix& m) {
    const CMatrix mt = m.transpose();
    CVector amps = Eigen::Map<const CVector>(mt.data(), mt.size());
    return from_amplitudes(std::move(amps), Dims{m.rows(), m.cols()});
  }

  const CVector& amplitudes() const noexcept { return amplitudes_; }
  Dims dims() const noexcept { return dims_; }
  Index dim() const noexcept { return amplitudes_.size(); }

  /// r x d coefficient matrix with entry (x, y) = <x,y|psi>.
  CMatrix coefficients() const {
    return Eigen::Map<const CMatrix>(amplitudes_.data(), dims_.d, dims_.r).transpose();
  }

  /// Same amplitudes viewed under another factorization of the dimension.
  PureState reshaped(Dims dims) const {
    require_same_dim(dims.total(), dim(), "PureState::reshaped");
    return PureState(amplitudes_, dims);
  }

  /// <this|other>.
  Complex inner(const PureState& other) const {
    require_same_dim(dim(), other.dim(), "PureState::inner");
    return amplitudes_.dot(other.amplitudes_);
  }

 private:
  PureState(CVector amplitudes, Dims dims) : amplitudes_(std::move(amplitudes)), dims_(dims) {}

  CVector amplitudes_;
  Dims dims_;
};

/// Hermitian, positive semidefinite, unit-trace matrix with its spectrum
/// cached at construction.
class DensityMatrix {
 public:
  /// Validates Hermiticity, trace and positivity (each within 1e-9) and
  /// stores the Hermitian part.
  static DensityMatrix from_matrix(const CMatrix& m) {
    require(m.rows() == m.cols() && m.rows() >= 1, "DensityMatrix: matrix must be square and nonempty");
    if (!m.allFinite()) throw PreconditionError("DensityMatrix: non-finite entries");
    require(max_abs_entry(m - m.adjoint()) <= kNormTol, "DensityMatrix: matrix is not Hermitian");
    const CMatrix h = hermitian_part(m);
    require(std::abs(h.trace().real() - 1.0) <= kNormTol, "DensityMatrix: trace is not 1");
    HermitianEigen eig = hermitian_eigen(h);
    require(eig.values(eig.values.size() - 1) >= -kNormTol,
            "DensityMatrix: matrix has a negative eigenvalue");
    eig.values = eig.values.cwiseMax(0.0);
    return DensityMatrix(h, std::move(eig));
  }

  /// Normalizes trace and clamps negative eigenvalues first; for estimator
  /// output that is Hermitian but only approximately a state.
  static DensityMatrix project_to_states(const CMatrix& m) {
    HermitianEigen eig = hermitian_eigen(hermitian_part(m));
    RVector w = eig.values.cwiseMax(0.0);
    const double total = w.sum();
    if (!(total > 0.0)) throw NumericalError("DensityMatrix: no positive spectral weight");
    w /= total;
    return from_spectrum(eig.vectors, w);
  }

  /// sum_i weights(i) |col_i><col_i| for orthonormal columns.
  static DensityMatrix from_spectrum(const CMatrix& vectors, const RVector& weights) {
    require(vectors.cols() == weights.size(), "DensityMatrix::from_spectrum: shape mismatch");
    CMatrix m = vectors * weights.cast<Complex>().asDiagonal() * vectors.adjoint();
    return from_matrix(hermitian_part(m));
  }

  static DensityMatrix from_pure(const PureState& psi) {
    const CVector& a = psi.amplitudes();
    return from_matrix(a * a.adjoint());
  }

  static DensityMatrix maximally_mixed(Index d) {
    return from_matrix(CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  const CMatrix& matrix() const noexcept { return matrix_; }
  /// Nonincreasing and nonnegative (rounding-level negatives clamped to 0).
  const RVector& eigenvalues() const noexcept { return eig_.values; }
  /// Orthonormal columns matching eigenvalues().
  const CMatrix& eigenvectors() const noexcept { return eig_.vectors; }
  Index dim() const noexcept { return matrix_.rows(); }

  /// Number of eigenvalues above kRankTol.
  Index rank() const noexcept { return (eig_.values.array() > kRankTol).count(); }

  /// Principal square root. Eigenvalues at or below kRankTol count as zero.
  CMatrix sqrt() const {
    return hermitian_function(eig_, [](double x) { return x > kRankTol ? std::sqrt(x) : 0.0; });
  }

 private:
  DensityMatrix(CMatrix m, HermitianEigen eig) : matrix_(std::move(m)), eig_(std::move(eig)) {}

  CMatrix matrix_;
  HermitianEigen eig_;
};

/// psi = sum_i coefficients(i) |u_i> (x) |v_i>.
struct SchmidtDecomposition {
  RVector coefficients;   // nonincreasing, all > kSchmidtTol
  CMatrix left_vectors;   // r x k, orthonormal columns u_i
  CMatrix right_vectors;  // d x k, orthonormal columns v_i

  Index size() const noexcept { return coefficients.size(); }

  PureState reconstruct() const {
    CMatrix m = left_vectors * coefficients.cast<Complex>().asDiagonal() * right_vectors.transpose();
    return PureState::from_coefficients(m);
  }
};

/// Orthogonal projector Pi = basis * basis^dagger.
class Projector {
 public:
  /// `basis` must have orthonormal columns (within 1e-9).
  static Projector from_basis(CMatrix basis) {
    const Index k = basis.cols();
    require(max_abs_entry(basis.adjoint() * basis - CMatrix::Identity(k, k)) <= kNormTol,
            "Projector: basis columns are not orthonormal");
    return Projector(std::move(basis));
  }

  static Projector identity(Index d) { return Projector(CMatrix::Identity(d, d)); }

  const CMatrix& basis() const noexcept { return basis_; }
  Index rank() const noexcept { return basis_.cols(); }
  Index dim() const noexcept { return basis_.rows(); }
  CMatrix matrix() const { return basis_ * basis_.adjoint(); }

 private:
  explicit Projector(CMatrix basis) : basis_(std::move(basis)) {}

  CMatrix basis_;
};

// ---------------------------------------------------------------------------
// Random generation

/// Haar-random pure state on X (x) Y with dims (r, d).
inline PureState random_pure_state(Index r, Index d, Seed seed) {
  require(r >= 1 && d >= 1, "random_pure_state: r*d must be at least 1");
  Rng rng = make_rng(seed);
  return PureState::from_amplitudes(complex_gaussian_vector(r * d, rng), Dims{r, d});
}

// ---------------------------------------------------------------------------
// Partial trace and Schmidt decomposition

/// rho = Tr_X |psi><psi|, i.e. rho(a, b) = sum_x psi(x, a) conj(psi(x, b)).
inline DensityMatrix partial_trace_x(const PureState& psi) {
  const Dims dims = psi.dims();
  Eigen::Map<const CMatrix> a(psi.amplitudes().data(), dims.d, dims.r);
  return DensityMatrix::from_matrix(hermitian_part(a * a.adjoint()));
}

/// Random state of rank r (almost surely) in dimension d: the Y-marginal of a
/// Haar-random pure state on C^r (x) C^d.
inline DensityMatrix random_rank_r_state(Index d, Index r, Seed seed) {
  require(r >= 1 && r <= d, "random_rank_r_state: need 1 <= r <= d");
  return partial_trace_x(random_pure_state(r, d, seed));
}

inline SchmidtDecomposition schmidt_decompose(const PureState& psi) {
  const CMatrix m = psi.coefficients();
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  Index k = 0;
  while (k < s.size() && s(k) > kSchmidtTol) ++k;
  // M = U S V^dagger, so psi = sum_i s_i u_i (x) conj(v_i).
  return SchmidtDecomposition{s.head(k), svd.matrixU().leftCols(k),
                              svd.matrixV().leftCols(k).conjugate()};
}

// ---------------------------------------------------------------------------
// Fidelity and distance

/// |<phi|psi>|^2.
inline double fidelity_pure_pure(const PureState& psi, const PureState& phi) {
  require_same_dim(psi.dim(), phi.dim(), "fidelity_pure_pure");
  return std::clamp(std::norm(phi.inner(psi)), 0.0, 1.0);
}

/// <psi|sigma|psi>.
inline double fidelity_pure_mixed(const PureState& psi, const DensityMatrix& sigma) {
  require_same_dim(psi.dim(), sigma.dim(), "fidelity_pure_mixed");
  const CVector& a = psi.amplitudes();
  return std::clamp(a.dot(sigma.matrix() * a).real(), 0.0, 1.0);
}

/// Squared (Uhlmann) fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2,
/// evaluated as the squared nuclear norm of sqrt(rho) sqrt(sigma).
inline double fidelity_mixed(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho.dim(), sigma.dim(), "fidelity_mixed");
  const CMatrix product = rho.sqrt() * sigma.sqrt();
  Eigen::JacobiSVD<CMatrix> svd(product);
  const double root = svd.singularValues().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

/// (1/2) Tr |rho - sigma|.
inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho.dim(), sigma.dim(), "trace_distance");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(rho.matrix() - sigma.matrix()),
                                                Eigen::EigenvaluesOnly);
  return std::clamp(0.5 * solver.eigenvalues().cwiseAbs().sum(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Purifications and support

/// Canonical purification sum_i sqrt(mu_i) |i> (x) |w_i> on a purifying
/// register of dimension `purifier_dim`.
inline PureState purify(const DensityMatrix& sigma, Index purifier_dim) {
  const Index rank = sigma.rank();
  if (purifier_dim < rank) {
    throw PreconditionError("purify: purifier dimension " + std::to_string(purifier_dim) +
                            " is below rank " + std::to_string(rank));
  }
  const Index d = sigma.dim();
  CMatrix coeffs = CMatrix::Zero(purifier_dim, d);
  for (Index i = 0; i < rank; ++i) {
    coeffs.row(i) = std::sqrt(sigma.eigenvalues()(i)) * sigma.eigenvectors().col(i).transpose();
  }
  return PureState::from_coefficients(coeffs);
}

/// The purification of sigma on register X of psi with maximal overlap with
/// psi. Built from the canonical purification phi0 by the unitary on X that
/// aligns the overlap matrix B = M_phi0 M_psi^dagger, i.e. the unitary
/// factor of its polar decomposition, so |<psi|phi>| = ||B||_1.
inline PureState optimal_purification_against(const DensityMatrix& sigma, const PureState& psi) {
  const Dims dims = psi.dims();
  require_same_dim(sigma.dim(), dims.d, "optimal_purification_against");
  if (sigma.rank() > dims.r) {
    throw PreconditionError("optimal_purification_against: rank(sigma) exceeds register X dimension");
  }
  const CMatrix phi0 = purify(sigma, dims.r).coefficients();
  const CMatrix overlap = phi0 * psi.coefficients().adjoint();
  Eigen::JacobiSVD<CMatrix> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix align = svd.matrixV() * svd.matrixU().adjoint();
  return PureState::from_coefficients(align * phi0);
}

/// Projector onto the eigenvectors of sigma with eigenvalue above kRankTol,
/// keeping at most `rank_cap` of the largest.
inline Projector support_projector(const DensityMatrix& sigma, Index rank_cap) {
  require(rank_cap >= 1, "support_projector: rank_cap must be at least 1");
  const Index k = std::min(sigma.rank(), rank_cap);
  return Projector::from_basis(sigma.eigenvectors().leftCols(k));
}

}  // namespace tomored
