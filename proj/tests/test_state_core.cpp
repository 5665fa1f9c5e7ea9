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
#include <numbers>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "tomored/state_core.hpp"

using namespace tomored;
using Catch::Matchers::WithinAbs;

namespace {

CVector basis_vec(Index n, Index i) {
  CVector v = CVector::Zero(n);
  v(i) = 1.0;
  return v;
}

PureState bell_state() {
  CVector a = CVector::Zero(4);
  a(0) = a(3) = 1.0 / std::sqrt(2.0);
  return PureState::from_amplitudes(a, Dims{2, 2});
}

DensityMatrix diagonal_state(std::initializer_list<double> p) {
  RVector v(static_cast<Index>(p.size()));
  Index i = 0;
  for (double x : p) v(i++) = x;
  return DensityMatrix::from_matrix(v.cast<Complex>().asDiagonal().toDenseMatrix());
}

}  // namespace

TEST_CASE("random_pure_state: trivial dimension and determinism") {
  const PureState one = random_pure_state(1, 1, 1234);
  CHECK_THAT(std::abs(one.amplitudes()(0)), WithinAbs(1.0, 1e-12));

  const PureState a = random_pure_state(2, 2, 7);
  const PureState b = random_pure_state(2, 2, 7);
  CHECK(a.amplitudes() == b.amplitudes());
  CHECK(a.dims() == Dims{2, 2});
  CHECK_THAT(a.amplitudes().norm(), WithinAbs(1.0, 1e-9));
  CHECK(random_pure_state(2, 2, 8).amplitudes() != a.amplitudes());

  CHECK_THROWS_AS(random_pure_state(0, 3, 1), PreconditionError);
}

TEST_CASE("random_pure_state: Haar marginal of the first amplitude") {
  // E|a_0|^2 = 1/(r d) under the Haar measure.
  double sum = 0.0;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) sum += std::norm(random_pure_state(2, 2, derive_seed(99, i)).amplitudes()(0));
  CHECK_THAT(sum / kDraws, WithinAbs(0.25, 0.02));
}

TEST_CASE("global phase convention") {
  CVector v(3);
  v << 0.0, Complex(0.0, -2.0), 1.0;
  const PureState s = PureState::flat(v);
  CHECK(s.amplitudes()(0) == Complex(0.0));
  CHECK(s.amplitudes()(1).imag() == 0.0);
  CHECK(s.amplitudes()(1).real() > 0.0);
  CHECK_THROWS_AS(PureState::flat(CVector::Zero(3)), NumericalError);
}

TEST_CASE("random_rank_r_state") {
  const DensityMatrix pure = random_rank_r_state(3, 1, 5);
  CHECK_THAT(pure.eigenvalues()(0), WithinAbs(1.0, 1e-9));
  CHECK(pure.rank() == 1);

  const DensityMatrix full = random_rank_r_state(2, 2, 5);
  CHECK_THAT(full.eigenvalues().sum(), WithinAbs(1.0, 1e-12));
  CHECK(full.eigenvalues().minCoeff() >= 0.0);

  // Rank agrees with the number of nonzero singular values of the
  // purification's coefficient matrix, computed independently.
  const DensityMatrix rank2 = random_rank_r_state(4, 2, 11);
  const PureState purification = random_pure_state(2, 4, 11);
  const RVector sv = testing::singular_values_via_gram(
      testing::coefficient_matrix(purification.amplitudes(), 2, 4));
  CHECK((sv.array() > 1e-6).count() == 2);
  CHECK(rank2.rank() == 2);

  CHECK_THROWS_AS(random_rank_r_state(2, 3, 1), PreconditionError);
}

TEST_CASE("DensityMatrix validation") {
  CMatrix bad = CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix::from_matrix(bad), PreconditionError);  // trace 2
  CMatrix neg(2, 2);
  neg << 1.5, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(neg), PreconditionError);
  CMatrix nonherm(2, 2);
  nonherm << 0.5, 0.1, 0.0, 0.5;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(nonherm), PreconditionError);

  const DensityMatrix rho = random_rank_r_state(5, 3, 2);
  const CMatrix rebuilt =
      rho.eigenvectors() * rho.eigenvalues().cast<Complex>().asDiagonal() * rho.eigenvectors().adjoint();
  CHECK(max_abs_entry(rebuilt - rho.matrix()) <= 1e-8);
  for (Index i = 1; i < rho.dim(); ++i) CHECK(rho.eigenvalues()(i - 1) >= rho.eigenvalues()(i));
}

TEST_CASE("partial_trace_x") {
  CVector u(2), v(3);
  u << 0.6, Complex(0.0, 0.8);
  v << 1.0, 2.0, Complex(0.0, 2.0);
  v.normalize();
  const DensityMatrix prod = partial_trace_x(PureState::product(u, v));
  CHECK(max_abs_entry(prod.matrix() - v * v.adjoint()) <= 1e-12);

  const DensityMatrix bell = partial_trace_x(bell_state());
  CHECK(max_abs_entry(bell.matrix() - CMatrix::Identity(2, 2) / 2.0) <= 1e-12);

  for (Seed s = 0; s < 20; ++s) {
    const PureState psi = random_pure_state(2, 3, s);
    const DensityMatrix rho = partial_trace_x(psi);
    CHECK(max_abs_entry(rho.matrix() - testing::reduced_state(psi.amplitudes(), 2, 3)) <= 1e-12);
    const SchmidtDecomposition sd = schmidt_decompose(psi);
    REQUIRE(sd.size() == 2);
    for (Index i = 0; i < 2; ++i) {
      CHECK_THAT(rho.eigenvalues()(i), WithinAbs(sd.coefficients(i) * sd.coefficients(i), 1e-8));
    }
    CHECK(rho.rank() <= 2);
  }
}

TEST_CASE("schmidt_decompose") {
  CVector u = basis_vec(3, 1), v = basis_vec(2, 0);
  const SchmidtDecomposition prod = schmidt_decompose(PureState::product(u, v));
  REQUIRE(prod.size() == 1);
  CHECK_THAT(prod.coefficients(0), WithinAbs(1.0, 1e-12));

  const SchmidtDecomposition bell = schmidt_decompose(bell_state());
  REQUIRE(bell.size() == 2);
  CHECK_THAT(bell.coefficients(0), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
  CHECK_THAT(bell.coefficients(1), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));

  for (Seed s = 0; s < 20; ++s) {
    const PureState psi = random_pure_state(3, 5, 1000 + s);
    const SchmidtDecomposition sd = schmidt_decompose(psi);
    const RVector oracle = testing::singular_values_via_gram(testing::coefficient_matrix(psi.amplitudes(), 3, 5));
    REQUIRE(sd.size() == 3);
    for (Index i = 0; i < 3; ++i) CHECK_THAT(sd.coefficients(i), WithinAbs(oracle(i), 1e-10));
    CHECK_THAT(sd.coefficients.squaredNorm(), WithinAbs(1.0, 1e-9));
    CHECK(max_abs_entry(sd.left_vectors.adjoint() * sd.left_vectors - CMatrix::Identity(3, 3)) <= 1e-9);
    CHECK(max_abs_entry(sd.right_vectors.adjoint() * sd.right_vectors - CMatrix::Identity(3, 3)) <= 1e-9);
    CHECK((sd.reconstruct().amplitudes() - psi.amplitudes()).norm() <= 1e-8);
  }
}

TEST_CASE("fidelity_pure_pure") {
  const PureState psi = random_pure_state(1, 5, 3);
  CHECK_THAT(fidelity_pure_pure(psi, psi), WithinAbs(1.0, 1e-12));
  CHECK(fidelity_pure_pure(PureState::basis(0, {1, 3}), PureState::basis(2, {1, 3})) == 0.0);

  const Complex phase = std::polar(1.0, 2.345);
  const PureState rotated = PureState::flat(phase * psi.amplitudes());
  CHECK_THAT(fidelity_pure_pure(psi, rotated), WithinAbs(1.0, 1e-12));

  const PureState other = random_pure_state(1, 5, 4);
  CHECK(fidelity_pure_pure(psi, other) == fidelity_pure_pure(other, psi));
  CHECK_THROWS_AS(fidelity_pure_pure(psi, random_pure_state(1, 4, 1)), DimensionError);
}

TEST_CASE("fidelity_pure_mixed") {
  const PureState psi = random_pure_state(1, 4, 3);
  CHECK_THAT(fidelity_pure_mixed(psi, DensityMatrix::from_pure(psi)), WithinAbs(1.0, 1e-12));
  CHECK_THAT(fidelity_pure_mixed(PureState::basis(0, {1, 4}), DensityMatrix::maximally_mixed(4)),
             WithinAbs(0.25, 1e-12));
  for (Seed s = 0; s < 20; ++s) {
    const PureState p = random_pure_state(1, 4, 50 + s);
    const DensityMatrix sigma = random_rank_r_state(4, 1 + s % 4, 80 + s);
    CHECK_THAT(fidelity_pure_mixed(p, sigma), WithinAbs(fidelity_mixed(DensityMatrix::from_pure(p), sigma), 1e-8));
  }
  CHECK_THROWS_AS(fidelity_pure_mixed(psi, DensityMatrix::maximally_mixed(3)), DimensionError);
}

TEST_CASE("fidelity_mixed: closed forms") {
  const DensityMatrix rho = random_rank_r_state(4, 3, 17);
  CHECK_THAT(fidelity_mixed(rho, rho), WithinAbs(1.0, 1e-8));

  // Commuting states reduce to the classical Bhattacharyya coefficient.
  const DensityMatrix p = diagonal_state({0.5, 0.3, 0.2});
  const DensityMatrix q = diagonal_state({0.1, 0.6, 0.3});
  const double bc = std::sqrt(0.05) + std::sqrt(0.18) + std::sqrt(0.06);
  CHECK_THAT(fidelity_mixed(p, q), WithinAbs(bc * bc, 1e-12));

  CHECK_THROWS_AS(fidelity_mixed(rho, DensityMatrix::maximally_mixed(3)), DimensionError);
}

TEST_CASE("fidelity_mixed: symmetry, unitary invariance, pure agreement") {
  Rng rng = make_rng(77);
  for (Seed s = 0; s < 50; ++s) {
    const Index d = 2 + s % 4;
    const DensityMatrix rho = random_rank_r_state(d, 1 + s % d, 200 + s);
    const DensityMatrix sigma = random_rank_r_state(d, 1 + (s / 2) % d, 300 + s);
    const double f = fidelity_mixed(rho, sigma);
    CHECK_THAT(fidelity_mixed(sigma, rho), WithinAbs(f, 1e-8));
    const CMatrix u = haar_unitary(d, rng);
    const DensityMatrix ur = DensityMatrix::from_matrix(hermitian_part(u * rho.matrix() * u.adjoint()));
    const DensityMatrix us = DensityMatrix::from_matrix(hermitian_part(u * sigma.matrix() * u.adjoint()));
    CHECK_THAT(fidelity_mixed(ur, us), WithinAbs(f, 1e-8));

    const PureState a = random_pure_state(1, d, 400 + s);
    const PureState b = random_pure_state(1, d, 500 + s);
    CHECK_THAT(fidelity_mixed(DensityMatrix::from_pure(a), DensityMatrix::from_pure(b)),
               WithinAbs(fidelity_pure_pure(a, b), 1e-8));
  }
}

TEST_CASE("fidelity_mixed matches purification search at d = 3") {
  Rng rng = make_rng(2024);
  for (Seed s = 0; s < 5; ++s) {
    const PureState psi = random_pure_state(3, 3, 600 + s);
    const PureState phi0 = random_pure_state(3, 3, 700 + s);
    const double f = fidelity_mixed(partial_trace_x(psi), partial_trace_x(phi0));
    const double brute = testing::purification_search(
        testing::coefficient_matrix(psi.amplitudes(), 3, 3), testing::coefficient_matrix(phi0.amplitudes(), 3, 3),
        200, rng);
    CHECK_THAT(brute, WithinAbs(f, 1e-4));
  }
}

TEST_CASE("trace_distance") {
  const DensityMatrix rho = random_rank_r_state(3, 2, 9);
  CHECK_THAT(trace_distance(rho, rho), WithinAbs(0.0, 1e-12));
  const DensityMatrix e0 = DensityMatrix::from_pure(PureState::basis(0, {1, 3}));
  const DensityMatrix e1 = DensityMatrix::from_pure(PureState::basis(1, {1, 3}));
  CHECK_THAT(trace_distance(e0, e1), WithinAbs(1.0, 1e-12));
  for (Seed s = 0; s < 100; ++s) {
    const DensityMatrix a = random_rank_r_state(4, 1 + s % 4, 800 + s);
    const DensityMatrix b = random_rank_r_state(4, 1 + (s / 4) % 4, 900 + s);
    const double f = fidelity_mixed(a, b);
    const double t = trace_distance(a, b);
    CHECK(t - (1.0 - std::sqrt(f)) >= -1e-8);
    CHECK(std::sqrt(1.0 - f) - t >= -1e-8);
  }
}

TEST_CASE("purify") {
  const DensityMatrix pure = DensityMatrix::from_pure(random_pure_state(1, 3, 1));
  const PureState p = purify(pure, 2);
  CHECK(schmidt_decompose(p).size() == 1);

  const PureState maxent = purify(DensityMatrix::maximally_mixed(2), 2);
  const SchmidtDecomposition sd = schmidt_decompose(maxent);
  REQUIRE(sd.size() == 2);
  CHECK_THAT(sd.coefficients(0), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
  CHECK_THAT(sd.coefficients(1), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));

  for (Seed s = 0; s < 20; ++s) {
    const DensityMatrix sigma = random_rank_r_state(4, 2, 40 + s);
    const PureState w = purify(sigma, 2);
    CHECK(w.dims() == Dims{2, 4});
    CHECK(max_abs_entry(partial_trace_x(w).matrix() - sigma.matrix()) <= 1e-8);
    CHECK(max_abs_entry(partial_trace_x(purify(sigma, 5)).matrix() - sigma.matrix()) <= 1e-8);
  }
  CHECK_THROWS_AS(purify(random_rank_r_state(4, 3, 1), 2), PreconditionError);
}

TEST_CASE("optimal_purification_against") {
  const PureState psi = random_pure_state(2, 4, 31);
  const DensityMatrix rho = partial_trace_x(psi);
  CHECK_THAT(fidelity_pure_pure(psi, optimal_purification_against(rho, psi)), WithinAbs(1.0, 1e-8));

  // sigma pure and orthogonal to supp(rho): with r = 1, rho = |v><v|.
  const PureState prod = PureState::product(basis_vec(1, 0), basis_vec(3, 0));
  const DensityMatrix orth = DensityMatrix::from_pure(PureState::basis(2, {1, 3}));
  CHECK_THAT(fidelity_pure_pure(prod, optimal_purification_against(orth, prod)), WithinAbs(0.0, 1e-12));

  for (Seed s = 0; s < 50; ++s) {
    const PureState p = random_pure_state(2, 4, 1100 + s);
    const DensityMatrix sigma = random_rank_r_state(4, 1 + s % 2, 1200 + s);
    const PureState phi = optimal_purification_against(sigma, p);
    CHECK(max_abs_entry(partial_trace_x(phi).matrix() - sigma.matrix()) <= 1e-8);
    CHECK_THAT(fidelity_pure_pure(p, phi), WithinAbs(fidelity_mixed(partial_trace_x(p), sigma), 1e-6));
  }
  CHECK_THROWS_AS(optimal_purification_against(random_rank_r_state(4, 3, 2), psi), PreconditionError);
}

TEST_CASE("support_projector") {
  const PureState w = random_pure_state(1, 4, 8);
  const Projector p1 = support_projector(DensityMatrix::from_pure(w), 3);
  REQUIRE(p1.rank() == 1);
  CHECK(max_abs_entry(p1.matrix() - w.amplitudes() * w.amplitudes().adjoint()) <= 1e-10);

  const Projector full = support_projector(random_rank_r_state(3, 3, 4), 3);
  CHECK(max_abs_entry(full.matrix() - CMatrix::Identity(3, 3)) <= 1e-10);

  for (Seed s = 0; s < 30; ++s) {
    const DensityMatrix sigma = random_rank_r_state(5, 2, 60 + s);
    const Projector pi = support_projector(sigma, 2);
    const CMatrix m = pi.matrix();
    CHECK(pi.rank() == 2);
    CHECK(max_abs_entry(m * m - m) <= 1e-8);
    CHECK(max_abs_entry(m - m.adjoint()) <= 1e-8);
    CHECK_THAT(m.trace().real(), WithinAbs(2.0, 1e-8));
    CHECK_THAT((m * sigma.matrix()).trace().real(), WithinAbs(1.0, 1e-8));
    CHECK(max_abs_entry(m * sigma.matrix() * m - sigma.matrix()) <= 1e-8);
  }

  // Lower numerical rank than the cap gives a lower-rank projector.
  CHECK(support_projector(random_rank_r_state(5, 1, 3), 3).rank() == 1);
  // The cap truncates to the largest eigenvalues.
  CHECK(support_projector(random_rank_r_state(5, 4, 3), 2).rank() == 2);
  CHECK_THROWS_AS(support_projector(random_rank_r_state(3, 1, 3), 0), PreconditionError);
}
