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

#include <string>
#include <utility>
#include <vector>

namespace posctl {

/// Sparse probability vector, sorted by target state.
using Transition = std::vector<std::pair<int, double>>;

struct SspAction {
  std::string label;
  double cost = 0.0;
  Transition transition;

  double mass() const;
};

/// Stochastic shortest path problem over a finite state list.
struct SspInstance {
  std::vector<std::string> states;
  std::vector<bool> goal;
  std::vector<std::vector<SspAction>> actions;
  int initial = 0;

  int size() const { return static_cast<int>(states.size()); }
  int index_of(const std::string& name) const;
};

/// Human-readable list of violated invariants; empty when the instance is valid.
std::vector<std::string> ssp_problems(const SspInstance& ssp, double tol = kTol);

/// Throws kZeroCostNonGoal or kInvalidSsp on the first problem found.
void require_valid_ssp(const SspInstance& ssp, double tol = kTol);

struct SspConversion {
  SspInstance ssp;
  /// control state i -> ssp state state_map[i]
  std::vector<int> state_map;
  int goal_state = -1;
};

/**
 * Builds the SSP whose states are the control states plus one absorbing goal.
 * Action 0 of every state is idle, action j + 1 fully actuates input j. The
 * transition is the closed-loop column padded with goal mass. Requires E = I.
 * Throws kNotSubstochastic when some column has mass above one.
 */
SspConversion to_ssp(const ProblemInstance& instance);

struct ControlConversion {
  ProblemInstance instance;
  /// ssp state -> control state, or -1 for goal states
  std::vector<int> state_map;
  /// Per control state, the ssp action used as the autonomous dynamics.
  std::vector<int> base_action;
};

/**
 * Reverse construction: the cheapest action of each state becomes the
 * autonomous column of A and each other action becomes an input column with
 * the cost difference as input cost. E = I and x0 is the indicator of the
 * initial state.
 */
ControlConversion from_ssp(const SspInstance& ssp);

/// Maps an SSP action choice per non-goal state into a control policy.
Policy policy_from_ssp(const ControlConversion& conv, const std::vector<int>& ssp_choice);

struct SspSolution {
  Vector J;
  std::vector<int> policy;
  long iterations = 0;
};

/// Value iteration on J(v) = min_a C(v,a) + sum_w T(v,a)_w J(w), J = 0 on goals.
SspSolution solve_ssp(const SspInstance& ssp, const ViOptions& opts = {});

inline constexpr int kDefaultSkeletonLevels = 16;

/// State space expanded into levels v_1..v_K so every transition has unit mass.
struct SkeletonSsp {
  /// Flattened expansion; state (v, k) sits at index_of(v, k).
  SspInstance ssp;
  int base_states = 0;
  int levels = 1;
  /// flat state -> (base state, level)
  std::vector<std::pair<int, int>> origin;
  /// flat state had a transition clamped at the top level
  std::vector<bool> clamped;
  /// Largest per-(v,a) transition mass moved to the top level by clamping.
  double truncation_mass = 0.0;
  /// Max residuals of the level-mean and unit-mass conditions over the redefined actions.
  double level_mean_residual = 0.0;
  double unit_mass_residual = 0.0;

  int index_of(int base, int level) const;
};

/**
 * Expands super-stochastic transitions onto levels. A target mass t out of a
 * total column mass m > 1 gets probability t/m split across levels floor(m)
 * and ceil(m) so the mean level equals m. Level-k copies scale costs by k and
 * send level-l targets to level k*l, clamped at `levels`. Requires E = I.
 */
SkeletonSsp expand_skeleton(const ProblemInstance& instance, int levels = kDefaultSkeletonLevels);

struct ScalingReport {
  double max_relative_deviation = 0.0;
  int worst_state = -1;
  int worst_level = -1;
  int checked = 0;
  Vector J;
};

/// Compares J(v_k) with k J(v_1) for unclamped levels k <= max_level.
ScalingReport check_prop2_scaling(const SkeletonSsp& skeleton, int max_level, const ViOptions& opts = {});

/// Scaling check over the levels k <= levels / 2.
ScalingReport check_prop2_scaling(const SkeletonSsp& skeleton, const ViOptions& opts = {});

}  // namespace posctl
