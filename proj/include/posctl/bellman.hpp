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

namespace posctl {

struct SolveResult {
  Vector p;
  Policy policy;
  long iterations = 0;
  double residual = 0.0;
};

struct ViOptions {
  double tol = 1e-10;
  long max_iter = 100000;
};

/// Smallest reduced cost r_ij + B_ij'p of block i and its index (kIdle if none is negative).
std::pair<double, int> block_minimum(const ProblemInstance& instance, const Vector& p, int block);

/// p -> s + A'p + sum_i min{r_i + B_i'p, 0} E_i
Vector bellman_apply(const ProblemInstance& instance, const Vector& p);

/**
 * Repeats bellman_apply from p0 until the max-norm change drops to tol.
 * Throws kNoConvergence when max_iter is exhausted or the iterates blow up,
 * which indicates an infinite optimal value.
 */
SolveResult value_iterate(const ProblemInstance& instance, const Vector& p0, const ViOptions& opts = {});

/// Per block, the lowest-index minimizer of the reduced cost if it is negative.
Policy extract_policy(const ProblemInstance& instance, const Vector& p);

/// Cost vector of a fixed policy; throws kUnstablePolicy for an unstable closed loop.
Vector evaluate_policy(const ProblemInstance& instance, const Policy& policy);

inline constexpr std::uint64_t kDefaultEnumerationCap = 1000000;

/**
 * Enumerates every policy, evaluates the stable ones and returns the
 * elementwise minimal cost vector together with the first policy (in
 * enumeration order) attaining it. Used as an independent oracle.
 */
SolveResult brute_force_solve(const ProblemInstance& instance,
                              std::uint64_t cap = kDefaultEnumerationCap);

/// p >= 0 and p equals the Bellman image of p within tol.
bool check_lp_form(const ProblemInstance& instance, const Vector& p, double tol = kTol);

/// p >= 0 and p <= bellman_apply(p) + tol, the inequality form of the LP constraints.
bool check_lp_feasible(const ProblemInstance& instance, const Vector& p, double tol = kTol);

}  // namespace posctl
