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
#include <vector>

#include "tomored/state_core.hpp"

namespace tomored {

/// <psi|(I (x) Pi)|psi> = sum_x ||Pi psi(x, .)||^2.
inline double outcome_probability(const PureState& psi, const Projector& pi) {
  const Dims dims = psi.dims();
  require_same_dim(pi.dim(), dims.d, "outcome_probability");
  Eigen::Map<const CMatrix> slices(psi.amplitudes().data(), dims.d, dims.r);
  return std::clamp((pi.basis().adjoint() * slices).squaredNorm(), 0.0, 1.0);
}

namespace detail {

inline CVector apply_on_y(const PureState& psi, const CMatrix& op_on_y) {
  const Dims dims = psi.dims();
  Eigen::Map<const CMatrix> slices(psi.amplitudes().data(), dims.d, dims.r);
  CMatrix out = op_on_y * slices;
  return Eigen::Map<const CVector>(out.data(), out.size());
}

}  // namespace detail

/// (I (x) Pi)|psi> / ||(I (x) Pi)|psi>||. Throws NumericalError when the kept
/// probability is at or below kProbFloor.
inline PureState project_and_renormalize(const PureState& psi, const Projector& pi) {
  const double p = outcome_probability(psi, pi);
  if (!(p > kProbFloor)) {
    throw NumericalError("project_and_renormalize: projection onto the estimate's support vanishes");
  }
  return PureState::from_amplitudes(detail::apply_on_y(psi, pi.matrix()), psi.dims());
}

/// One run of the measurement {Pi, I - Pi} on register Y.
struct MeasurementOutcome {
  bool kept = false;
  double probability_kept = 0.0;
  PureState post_state;
};

inline MeasurementOutcome measure_once(const PureState& psi, const Projector& pi, Seed seed) {
  const double p = outcome_probability(psi, pi);
  Rng rng = make_rng(seed);
  const bool kept = std::bernoulli_distribution(p)(rng);
  if (kept) return {true, p, project_and_renormalize(psi, pi)};
  if (!(1.0 - p > kProbFloor)) {
    throw NumericalError("measure_once: rejected outcome has vanishing probability");
  }
  const Index d = pi.dim();
  const CMatrix complement = CMatrix::Identity(d, d) - pi.matrix();
  return {false, p, PureState::from_amplitudes(detail::apply_on_y(psi, complement), psi.dims())};
}

struct ShotRecord {
  std::int64_t kept_count = 0;
  std::vector<bool> outcomes;  // true = Pi outcome
};

/// i.i.d. Bernoulli(outcome_probability) draws, one per copy. Every kept copy
/// collapses to the same state project_and_renormalize(psi, pi).
inline ShotRecord sample_shots(const PureState& psi, const Projector& pi, std::int64_t shots, Seed seed) {
  require(shots >= 0, "sample_shots: shots must be nonnegative");
  const double p = outcome_probability(psi, pi);
  Rng rng = make_rng(seed);
  std::bernoulli_distribution draw(p);
  ShotRecord record;
  record.outcomes.reserve(static_cast<std::size_t>(shots));
  for (std::int64_t i = 0; i < shots; ++i) {
    const bool kept = draw(rng);
    record.outcomes.push_back(kept);
    record.kept_count += kept ? 1 : 0;
  }
  return record;
}

}  // namespace tomored
