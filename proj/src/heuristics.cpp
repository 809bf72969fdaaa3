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

#include "posctl/heuristics.hpp"

#include "posctl/csv.hpp"

#include <algorithm>
#include <cmath>

namespace posctl {

HeuristicPair init_heuristics(const ProblemInstance& inst) {
  if (!inst.k_hat)
    throw SolverError(ErrorCode::kMissingInitialPolicy, "instance has no initial stabilizing policy");
  return HeuristicPair{evaluate_policy(inst, *inst.k_hat), inst.s};
}

bool check_consistent_lower(const ProblemInstance& inst, const Vector& h, double tol) {
  return (h - bellman_apply(inst, h)).maxCoeff() <= tol;
}

bool check_consistent_upper(const ProblemInstance& inst, const Vector& h, double tol) {
  return (bellman_apply(inst, h) - h).maxCoeff() <= tol;
}

HeuristicPair improve(const ProblemInstance& inst, const HeuristicPair& pair, int k) {
  HeuristicPair out = pair;
  for (int step = 0; step < k; ++step) {
    out.upper = bellman_apply(inst, out.upper);
    out.lower = bellman_apply(inst, out.lower);
  }
  return out;
}

double RateBoundParams::factor(int k) const {
  return 1.0 - (1.0 - delta) / std::pow(1.0 - 1.0 / beta, k);
}

std::optional<Vector> RateBoundParams::curve(const Vector& p, int k) const {
  const double f = factor(k);
  if (!(f >= 0.0 && f <= 1.0)) return std::nullopt;
  return Vector(f * p);
}

RateBoundParams rate_bound(const ProblemInstance& inst, const HeuristicPair& pair) {
  RateBoundParams out;
  const Vector& up = pair.upper;
  const Vector& lo = pair.lower;

  double delta = 1.0;
  for (Eigen::Index i = 0; i < up.size(); ++i) {
    if (up(i) > 0.0) delta = std::min(delta, lo(i) / up(i));
  }
  out.delta = std::max(delta, 0.0);

  double beta = 0.0;
  const Vector a_term = inst.A.transpose() * up;
  for (Eigen::Index i = 0; i < a_term.size(); ++i) beta = std::max(beta, a_term(i) / inst.s(i));
  const Vector b_term = inst.B.transpose() * up;
  for (Eigen::Index j = 0; j < b_term.size(); ++j) {
    if (inst.r(j) > 0.0) {
      beta = std::max(beta, b_term(j) / inst.r(j));
    } else if (b_term(j) > kTol) {
      throw SolverError(ErrorCode::kBetaUndefined,
                        "input " + std::to_string(j) + " has zero cost but positive B'h_upper");
    }
  }
  const double floor = 1.0 + kTol;
  out.beta_clamped = beta < floor;
  out.beta = std::max(beta, floor);
  return out;
}

void write_bound_trajectory_csv(std::ostream& os, const ProblemInstance& inst, const HeuristicPair& start,
                                int steps) {
  const int n = inst.n();
  CsvWriter csv(os);
  std::vector<std::string> header{"k"};
  for (int i = 0; i < n; ++i) header.push_back("h_upper_" + std::to_string(i));
  for (int i = 0; i < n; ++i) header.push_back("h_lower_" + std::to_string(i));
  csv.row(header);
  HeuristicPair cur = start;
  for (int k = 0; k <= steps; ++k) {
    if (k > 0) cur = improve(inst, cur, 1);
    csv.begin_row();
    csv.field(k);
    for (int i = 0; i < n; ++i) csv.field(cur.upper(i));
    for (int i = 0; i < n; ++i) csv.field(cur.lower(i));
    csv.end_row();
  }
}

}  // namespace posctl
