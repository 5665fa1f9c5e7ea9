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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tomored/harness/records.hpp"
#include "tomored/linalg.hpp"

namespace tomored::harness {

struct ScalingPoint {
  double n = 0.0;
  double infidelity = 0.0;
};

/// log(infidelity) = intercept + slope * log(n), least squares.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;  // in log space, one per point
};

inline ScalingFit fit_scaling(std::span<const ScalingPoint> points) {
  std::vector<double> distinct;
  for (const auto& p : points) {
    if (!(p.n > 0.0) || !(p.infidelity > 0.0)) {
      throw PreconditionError("fit_scaling: budgets and infidelities must be positive");
    }
    if (std::find(distinct.begin(), distinct.end(), p.n) == distinct.end()) distinct.push_back(p.n);
  }
  if (distinct.size() < 3) throw PreconditionError("fit_scaling: need at least 3 distinct budget points");

  const auto m = static_cast<Index>(points.size());
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd y(m);
  for (Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(points[static_cast<std::size_t>(i)].n);
    y(i) = std::log(points[static_cast<std::size_t>(i)].infidelity);
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd res = y - design * beta;
  return {beta(1), beta(0), std::vector<double>(res.data(), res.data() + res.size())};
}

/// Median of `value_key` per distinct `n_key`, ordered by budget.
inline std::vector<ScalingPoint> median_points(const std::vector<TrialRecord>& records, const std::string& n_key,
                                               const std::string& value_key) {
  std::map<double, std::vector<double>> groups;
  for (const auto& rec : records) groups[rec.number(n_key)].push_back(rec.number(value_key));
  std::vector<ScalingPoint> out;
  for (auto& [n, values] : groups) out.push_back({n, median(std::move(values))});
  return out;
}

/// Fits the per-budget medians of the records.
inline ScalingFit fit_scaling(const std::vector<TrialRecord>& records, const std::string& n_key = "n",
                              const std::string& value_key = "infidelity") {
  const auto points = median_points(records, n_key, value_key);
  return fit_scaling(std::span<const ScalingPoint>(points));
}

}  // namespace tomored::harness
