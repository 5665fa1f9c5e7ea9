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
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomored/seed.hpp"

namespace tomored {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

// Numerical thresholds shared by every module.
inline constexpr double kNormTol = 1e-9;
inline constexpr double kRankTol = 1e-10;
inline constexpr double kSchmidtTol = 1e-12;
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kBoundSlack = 1e-9;

/// Operand shapes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument violates an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a trustworthy result (vanishing norm,
/// non-converging search).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

inline void require_same_dim(Index a, Index b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// nonincreasing and eigenvector columns permuted to match.
struct HermitianEigen {
  RVector values;
  CMatrix vectors;
};

inline HermitianEigen hermitian_eigen(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eigen: eigensolver did not converge");
  }
  // Eigen returns ascending order.
  const Index n = m.rows();
  HermitianEigen out{RVector(n), CMatrix(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

inline double max_abs_entry(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline CMatrix hermitian_part(const CMatrix& m) { return (m + m.adjoint()) / 2.0; }

/// Applies f to the spectrum of a Hermitian matrix.
template <typename F>
CMatrix hermitian_function(const HermitianEigen& eig, F&& f) {
  RVector mapped = eig.values.unaryExpr(std::forward<F>(f));
  return eig.vectors * mapped.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

/// Vector of i.i.d. standard complex Gaussians (E|z|^2 = 1).
inline CVector complex_gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector v(n);
  for (Index i = 0; i < n; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = Complex(re, im);
  }
  return v;
}

inline CMatrix complex_gaussian_matrix(Index rows, Index cols, Rng& rng) {
  CVector flat = complex_gaussian_vector(rows * cols, rng);
  return Eigen::Map<CMatrix>(flat.data(), rows, cols);
}

/// Haar-random unitary: QR of a Ginibre matrix with the R-diagonal phases
/// folded back into Q.
inline CMatrix haar_unitary(Index n, Rng& rng) {
  CMatrix g = complex_gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    const Complex diag = r(j, j);
    const double mag = std::abs(diag);
    q.col(j) *= (mag > 0.0) ? diag / mag : Complex(1.0);
  }
  return q;
}

/// Random anti-Hermitian generator with unit Frobenius norm.
inline CMatrix random_antihermitian(Index n, Rng& rng) {
  CMatrix g = complex_gaussian_matrix(n, n, rng);
  CMatrix k = (g - g.adjoint()) / 2.0;
  const double norm = k.norm();
  return norm > 0.0 ? CMatrix(k / norm) : k;
}

/// exp(theta * K) for anti-Hermitian K, prepared once and evaluated for many
/// theta (K = -iH with H Hermitian).
class AntiHermitianExp {
 public:
  explicit AntiHermitianExp(const CMatrix& k) : eig_(hermitian_eigen(Complex(0.0, 1.0) * k)) {}

  CMatrix operator()(double theta) const {
    const Index n = eig_.values.size();
    CVector phases(n);
    for (Index i = 0; i < n; ++i) phases(i) = std::polar(1.0, -theta * eig_.values(i));
    return eig_.vectors * phases.asDiagonal() * eig_.vectors.adjoint();
  }

 private:
  HermitianEigen eig_;
};

/// Median of a copy of the values; NaN for an empty range.
inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (xs.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(xs.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace tomored
