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

#include "posctl/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace posctl {

/// One action per state: kIdle or a 0-based input index inside the block.
struct Policy {
  std::vector<int> choice;

  static Policy idle(int n) { return Policy{std::vector<int>(n, kIdle)}; }
  int size() const { return static_cast<int>(choice.size()); }
  bool operator==(const Policy&) const = default;
};

/**
 * Data of the control problem
 *
 *   minimize  sum_t s'x(t) + r'u(t)
 *   s.t.      x(t+1) = A x(t) + B u(t),  u >= 0,  x(0) = x0,
 *             1'u_i(t) <= E_i' x(t)  for every state i.
 *
 * The inputs are grouped in blocks following `partition`; block i owns the
 * columns [block_offset(i), block_offset(i) + partition[i]) of B and the
 * matching entries of r. E_i' is row i of E.
 */
struct ProblemInstance {
  std::vector<int> partition;
  Matrix A;
  Matrix B;
  Matrix E;
  Vector s;
  Vector r;
  Vector x0;
  std::optional<Policy> k_hat;

  int n() const { return static_cast<int>(partition.size()); }
  int m() const;
  int block_offset(int i) const;
  int block_size(int i) const { return partition.at(i); }

  auto input_column(int i, int j) const { return B.col(block_offset(i) + j); }
  double input_cost(int i, int j) const { return r(block_offset(i) + j); }
};

struct Check {
  std::string name;
  bool mandatory = true;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<Check> checks;

  /// True when every mandatory check passed.
  bool ok() const;
  const Check* find(const std::string& name) const;
};

/// Runs every check on the instance. Never throws.
ValidationReport validate(const ProblemInstance& instance);

/// Empty when the matrix and vector sizes agree with the partition.
std::vector<std::string> dimension_errors(const ProblemInstance& instance);

/// Throws kDimensionMismatch or kInvalidArgument when a mandatory check fails.
void require_valid(const ProblemInstance& instance);

struct Assumption1Result {
  bool holds = true;
  /// Most negative closed-loop entry over all feedback matrices.
  double worst_value = 0.0;
  int row = -1;
  int col = -1;
  /// Per-block action attaining worst_value at (row, col).
  Policy witness;
};

/**
 * Checks that A + BK >= 0 for every K in the feedback set, elementwise.
 * Entry (p, q) is minimized separately over the block choices.
 */
Assumption1Result check_assumption1(const ProblemInstance& instance);

struct Assumption2Result {
  bool holds = true;
  /// Largest column sum of A + BK over the feedback set, per column.
  Vector worst_column_sums;
  int worst_column = -1;
};

/// Checks that A + BK is column substochastic for every K in the feedback set.
Assumption2Result check_assumption2(const ProblemInstance& instance);

/// Ratio of extreme singular values; infinity for a singular matrix.
double condition_number(const Matrix& m);

inline constexpr double kMaxConditionE = 1e12;

struct NormalizedInstance {
  ProblemInstance instance;
  std::vector<std::string> warnings;
};

/**
 * Changes coordinates to x' = E x so that the constraint matrix becomes the
 * identity. The optimal cost vector transforms as p' = E^{-T} p, so p'x0' is
 * unchanged. A nonpositive transformed state cost is reported as a warning.
 */
NormalizedInstance normalize_E(const ProblemInstance& instance);

bool is_identity(const Matrix& m, double tol = 0.0);

/// Throws kBadAction unless every choice is kIdle or a valid input index.
void check_policy(const ProblemInstance& instance, const Policy& policy);

struct ClosedLoop {
  Matrix K;           // m x n feedback matrix
  Matrix dynamics;    // A + BK
  Vector stage_cost;  // s + K'r
};

ClosedLoop expand_policy(const ProblemInstance& instance, const Policy& policy);

/// Membership in the feedback set: each block sums to E_i' or to zero.
bool in_feedback_set(const ProblemInstance& instance, const Matrix& K,
                     double tol = kTol);

/// Number of distinct policies, saturated at UINT64_MAX.
std::uint64_t policy_count(const ProblemInstance& instance);

/**
 * Certifies spectral radius(|M|) < 1 by checking that (I - |M|)^{-1} 1 exists
 * and is at least 1 elementwise. Exact for nonnegative matrices and
 * sufficient for general ones.
 */
bool is_schur_stable(const Matrix& m);

}  // namespace posctl
