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

#include "posctl/heuristics.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace posctl {

enum class BoundMode { kUpper, kLower };

/// Certified action per block; nullopt where nothing is fixed.
using FixedActions = std::vector<std::optional<int>>;

/// A with every column outside S replaced by the matching unit vector.
Matrix local_dynamics(const ProblemInstance& instance, const StateSet& S);

struct LocalSolveOptions {
  ViOptions vi;
  /// Starting point; entries outside S are overwritten by the heuristic.
  std::optional<Vector> warm_start;
  /// Blocks whose action is locked; empty means none.
  FixedActions fixed;
};

struct LocalSolution {
  Vector g;
  Policy policy;
  long iterations = 0;
};

/**
 * Solves the Bellman equation on S with the entries outside S frozen to the
 * heuristic bound of the requested mode.
 *
 * Upper mode keeps the blocks outside S on the initial policy k_hat. Lower
 * mode leaves them free to take their minimizing action; when E = I the
 * outside blocks only act on frozen entries, so this coincides with holding
 * them idle.
 */
LocalSolution local_solve(const ProblemInstance& instance, const StateSet& S, const HeuristicPair& pair,
                          BoundMode mode, const LocalSolveOptions& opts = {});

struct AbsorptionResult {
  Vector x;
  /// Closed loop unstable on S; x is a truncated power iterate.
  bool divergent = false;
};

inline constexpr long kAbsorptionPowerCap = 10000;

/**
 * Limit of (A_S + BK)^k x0 where K follows `policy`. Mass ends up on the
 * states outside S, which absorb. Solved directly on the S block; falls back
 * to a truncated power iteration when that block is not Schur stable.
 */
AbsorptionResult absorption_limit(const ProblemInstance& instance, const StateSet& S, const Policy& policy,
                                  const Vector& x0);

/// Plain power iteration of the absorbing closed loop, `steps` times.
Vector absorption_power_iterate(const ProblemInstance& instance, const StateSet& S, const Policy& policy,
                                const Vector& x0, long steps);

/// argmax over i outside S of (upper_i - lower_i)(x_up_i + x_low_i); lowest index on ties.
int select_next(const StateSet& S, const HeuristicPair& pair, const Vector& x_up, const Vector& x_low);

/**
 * For every block in S, the action (or kIdle) whose reduced cost is no larger
 * than any alternative for every g in the box [g_lower, g_upper].
 */
FixedActions fixable_actions(const ProblemInstance& instance, const StateSet& S, const Vector& g_lower,
                             const Vector& g_upper);

struct SearchOptions {
  double gamma = 1.0;
  bool fix_actions = false;
  bool record_snapshots = false;
  ViOptions vi;
};

struct TraceEntry {
  int iteration = 0;
  int cardinality = 0;
  double upper_total = 0.0;
  double lower_total = 0.0;
  int selected_state = -1;
  bool lower_divergent = false;
};

struct Snapshot {
  int iteration = 0;
  StateSet S;
  Vector g_upper;
  Vector g_lower;
  int selected_state = -1;
};

struct SearchState {
  StateSet S;
  Vector g_upper;
  Vector g_lower;
  Policy policy_upper;
  Policy policy_lower;
  HeuristicPair heuristics;
  FixedActions fixed;
  int iteration = 0;
  std::vector<TraceEntry> trace;
  std::vector<Snapshot> snapshots;

  double upper_total(const Vector& x0) const { return g_upper.dot(x0); }
  double lower_total(const Vector& x0) const { return g_lower.dot(x0); }
};

/// Heuristic search with heuristics from init_heuristics.
SearchState run_search(const ProblemInstance& instance, const SearchOptions& opts);

/// Heuristic search starting from the given bounds; the upper bound must be
/// the cost of k_hat or another consistent upper bound.
SearchState run_search(const ProblemInstance& instance, const HeuristicPair& pair, const SearchOptions& opts);

/// Columns: iteration, cardinality_S, upper_total, lower_total, selected_state.
void write_trace_csv(std::ostream& os, const SearchState& state);

/// Columns: state, in_S, g_upper, g_lower, h_upper, h_lower, p_optional.
void write_snapshot_csv(std::ostream& os, const Snapshot& snap, const HeuristicPair& pair,
                        const std::optional<Vector>& p = std::nullopt);

}  // namespace posctl
