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

#include "posctl/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace posctl {

/**
 * Portable random source. The engine is std::mt19937_64, whose output
 * sequence is fixed by the standard; doubles are built from the top 53 bits
 * of one draw, so the same seed gives the same values on every platform.
 * Generators consume draws in a fixed documented order.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int integer(int lo, int hi) {
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct CostRange {
  double lo = 0.0;
  double hi = 0.0;
};

enum class ConstraintKind {
  /// E = A: block i redirects the inflow (Ax)_i; input columns are d - e_i.
  kDynamics,
  /// E = I: block i redirects the mass x_i; input columns are d - A e_i.
  kIdentity,
};

struct GenConfig {
  int n = 4;
  /// Explicit m_i profile; when empty each m_i is drawn from [min_actions, max_actions].
  std::vector<int> actions_per_state;
  int min_actions = 2;
  int max_actions = 2;
  /// Probability of an off-diagonal entry in A and in each routing vector.
  double density = 0.3;
  std::uint64_t seed = 0;
  CostRange state_cost_range{0.5, 1.5};
  CostRange disposal_cost_range{5.0, 10.0};
  CostRange routing_cost_range{0.2, 2.0};
  /// Column sums of A stay below one; otherwise one column exceeds one.
  bool stable_open_loop = true;
  ConstraintKind constraint = ConstraintKind::kDynamics;
  /// First input of every state removes the whole block budget.
  bool disposal_first = false;
};

/// Throws kInvalidArgument for a nonsensical configuration.
void check_config(const GenConfig& config);

/**
 * Draws an instance satisfying the positivity assumption by construction:
 * every input column is a nonnegative routing vector d (1'd <= 1) minus the
 * block's budget direction, so the closed-loop column stays nonnegative.
 */
ProblemInstance random_instance(const GenConfig& config);

/// 25 compounds, a disposal and a routing reaction each, E = A, all-disposal k_hat.
ProblemInstance chemical_plant(std::uint64_t seed);

GenConfig chemical_plant_config(std::uint64_t seed);

/// The three-state network with inputs partitioned (1, 2, 1), E = I.
ProblemInstance example_network(double self_retention = 0.6);

struct FictitiousResult {
  ProblemInstance instance;
  /// (state, action index) of every added valve.
  std::vector<std::pair<int, int>> added;
  double cost_bound = 0.0;
  double valve_cost = 0.0;
  /// Added valves where present, k_hat (or idle) elsewhere.
  Policy valve_policy;
};

/**
 * Adds a disposal-style input to every state of `region` whose outflow leaves
 * the region (every state when the region is the whole set). Its cost is
 * penalty_factor times an upper bound on the region's optimal costs: the
 * given `cost_bound`, otherwise the k_hat cost, otherwise the solved value.
 */
FictitiousResult add_fictitious_actions(const ProblemInstance& instance, const StateSet& region,
                                        double penalty_factor,
                                        std::optional<double> cost_bound = std::nullopt);

/// True when the policy never selects an added valve.
bool fictitious_unused(const FictitiousResult& result, const Policy& policy);

}  // namespace posctl
