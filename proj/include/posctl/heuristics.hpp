// Copyright 2026 The posctl Authors
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

#include "posctl/bellman.hpp"

#include <optional>
#include <ostream>

namespace posctl {

/// Linear bounds h_lower'x <= J*(x) <= h_upper'x on the optimal cost.
struct HeuristicPair {
  Vector upper;
  Vector lower;
};

/**
 * Upper bound from the cost of the initial stabilizing policy k_hat, lower
 * bound equal to the running cost s.
 */
HeuristicPair init_heuristics(const ProblemInstance& instance);

/// h <= bellman_apply(h) + tol elementwise.
bool check_consistent_lower(const ProblemInstance& instance, const Vector& h, double tol = kTol);

/// h >= bellman_apply(h) - tol elementwise.
bool check_consistent_upper(const ProblemInstance& instance, const Vector& h, double tol = kTol);

/// Applies the Bellman operator k times to both bounds.
HeuristicPair improve(const ProblemInstance& instance, const HeuristicPair& pair, int k);

struct RateBoundParams {
  /// Largest delta with lower >= delta * upper.
  double delta = 1.0;
  /// Smallest beta > 1 with A'upper <= beta s and B'upper <= beta r.
  double beta = 1.0;
  /// True when beta was lifted to 1 + tol because the data allowed beta <= 1.
  bool beta_clamped = false;

  /// 1 - (1 - delta) / (1 - 1/beta)^k
  double factor(int k) const;

  /// factor(k) * p, or nullopt when the factor lies outside [0, 1].
  std::optional<Vector> curve(const Vector& p, int k) const;
};

/// Throws kBetaUndefined when some r_j = 0 while (B'upper)_j > 0.
RateBoundParams rate_bound(const ProblemInstance& instance, const HeuristicPair& pair);

/// One CSV row per step: k, upper_0..upper_{n-1}, lower_0..lower_{n-1}.
void write_bound_trajectory_csv(std::ostream& os, const ProblemInstance& instance,
                                const HeuristicPair& start, int steps);

}  // namespace posctl
