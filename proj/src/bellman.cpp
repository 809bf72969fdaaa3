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

#include "posctl/bellman.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace posctl {

std::pair<double, int> block_minimum(const ProblemInstance& inst, const Vector& p, int i) {
  double best = 0.0;
  int arg = kIdle;
  const int offset = inst.block_offset(i);
  for (int j = 0; j < inst.partition[i]; ++j) {
    const double v = inst.r(offset + j) + inst.B.col(offset + j).dot(p);
    if (v < best) {
      best = v;
      arg = j;
    }
  }
  return {best, arg};
}

Vector bellman_apply(const ProblemInstance& inst, const Vector& p) {
  const int n = inst.n();
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = block_minimum(inst, p, i).first;
  return inst.s + inst.A.transpose() * p + inst.E.transpose() * z;
}

SolveResult value_iterate(const ProblemInstance& inst, const Vector& p0, const ViOptions& opts) {
  if (p0.size() != inst.n()) throw SolverError(ErrorCode::kDimensionMismatch, "p0 length differs from n");
  SolveResult res;
  Vector p = p0;
  double change = std::numeric_limits<double>::infinity();
  while (res.iterations < opts.max_iter) {
    Vector next = bellman_apply(inst, p);
    ++res.iterations;
    change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (!std::isfinite(change)) break;
    if (change <= opts.tol) {
      res.p = p;
      res.residual = change;
      res.policy = extract_policy(inst, p);
      return res;
    }
  }
  std::ostringstream os;
  os << "value iteration did not converge after " << res.iterations
     << " iterations (last change " << change << "); the optimal value may be infinite";
  throw SolverError(ErrorCode::kNoConvergence, os.str());
}

Policy extract_policy(const ProblemInstance& inst, const Vector& p) {
  Policy pol = Policy::idle(inst.n());
  for (int i = 0; i < inst.n(); ++i) pol.choice[i] = block_minimum(inst, p, i).second;
  return pol;
}

Vector evaluate_policy(const ProblemInstance& inst, const Policy& policy) {
  const auto cl = expand_policy(inst, policy);
  if (!is_schur_stable(cl.dynamics))
    throw SolverError(ErrorCode::kUnstablePolicy, "closed loop A+BK is not Schur stable");
  const int n = inst.n();
  const Matrix lhs = Matrix::Identity(n, n) - cl.dynamics.transpose();
  Vector p = lhs.partialPivLu().solve(cl.stage_cost);
  if (!p.allFinite() || p.minCoeff() < -kTol)
    throw SolverError(ErrorCode::kUnstablePolicy, "policy cost system has no nonnegative solution");
  return p;
}

SolveResult brute_force_solve(const ProblemInstance& inst, std::uint64_t cap) {
  const int n = inst.n();
  const auto total = policy_count(inst);
  if (total > cap) {
    std::ostringstream os;
    os << "enumeration of " << total << " policies exceeds cap " << cap;
    throw SolverError(ErrorCode::kTooLarge, os.str());
  }

  // Mixed-radix counter over the choices, digit value 0 meaning Idle.
  std::vector<int> digits(n, 0);
  auto current = [&] {
    Policy pol = Policy::idle(n);
    for (int i = 0; i < n; ++i) pol.choice[i] = digits[i] - 1;
    return pol;
  };
  auto advance = [&] {
    for (int i = n - 1; i >= 0; --i) {
      if (++digits[i] <= inst.partition[i]) return true;
      digits[i] = 0;
    }
    return false;
  };

  std::vector<std::pair<Policy, Vector>> stable;
  Vector best;
  do {
    Policy pol = current();
    Vector cost;
    try {
      cost = evaluate_policy(inst, pol);
    } catch (const SolverError& e) {
      if (e.code() != ErrorCode::kUnstablePolicy) throw;
      continue;
    }
    best = best.size() == 0 ? cost : Vector(best.cwiseMin(cost));
    stable.emplace_back(std::move(pol), std::move(cost));
  } while (advance());

  if (stable.empty()) throw SolverError(ErrorCode::kInfeasible, "no stabilizing policy exists");

  SolveResult res;
  res.iterations = static_cast<long>(stable.size());
  for (const auto& [pol, cost] : stable) {
    const double gap = (cost - best).maxCoeff();
    if (gap <= 1e-9 * (1.0 + best.cwiseAbs().maxCoeff())) {
      res.p = best;
      res.policy = pol;
      res.residual = (bellman_apply(inst, best) - best).cwiseAbs().maxCoeff();
      return res;
    }
  }
  throw SolverError(ErrorCode::kInfeasible,
                    "no single policy attains the elementwise minimum; instance violates the model assumptions");
}

bool check_lp_form(const ProblemInstance& inst, const Vector& p, double tol) {
  if (p.size() != inst.n() || p.minCoeff() < -tol) return false;
  return (bellman_apply(inst, p) - p).cwiseAbs().maxCoeff() <= tol;
}

bool check_lp_feasible(const ProblemInstance& inst, const Vector& p, double tol) {
  if (p.size() != inst.n() || p.minCoeff() < -tol) return false;
  return (p - bellman_apply(inst, p)).maxCoeff() <= tol;
}

}  // namespace posctl
