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

#include "posctl/ssp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace posctl {

double SspAction::mass() const {
  double total = 0.0;
  for (const auto& [w, t] : transition) total += t;
  return total;
}

int SspInstance::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (states[i] == name) return i;
  return -1;
}

std::vector<std::string> ssp_problems(const SspInstance& ssp, double tol) {
  std::vector<std::string> out;
  const int n = ssp.size();
  if (n == 0) out.emplace_back("no states");
  if (static_cast<int>(ssp.goal.size()) != n || static_cast<int>(ssp.actions.size()) != n) {
    out.emplace_back("goal/action lists do not match the state list");
    return out;
  }
  if (std::none_of(ssp.goal.begin(), ssp.goal.end(), [](bool g) { return g; }))
    out.emplace_back("goal set is empty");
  if (ssp.initial < 0 || ssp.initial >= n) out.emplace_back("initial state out of range");
  for (int v = 0; v < n; ++v) {
    if (ssp.actions[v].empty()) out.push_back("state " + ssp.states[v] + " has no action");
    for (const auto& a : ssp.actions[v]) {
      const std::string where = ssp.states[v] + "/" + a.label;
      for (const auto& [w, t] : a.transition) {
        if (w < 0 || w >= n) out.push_back(where + ": target out of range");
        else if (!(t >= 0.0 && t <= 1.0)) out.push_back(where + ": probability outside [0,1]");
        else if (ssp.goal[v] && !ssp.goal[w] && t > 0.0) out.push_back(where + ": goal state is not absorbing");
      }
      if (std::abs(a.mass() - 1.0) > tol) out.push_back(where + ": probabilities do not sum to 1");
      if (ssp.goal[v] && a.cost != 0.0) out.push_back(where + ": goal cost is not zero");
      if (!ssp.goal[v] && !(a.cost > 0.0)) out.push_back(where + ": zero-cost action outside the goal set");
      else if (!std::isfinite(a.cost) || a.cost < 0.0) out.push_back(where + ": invalid cost");
    }
  }
  return out;
}

void require_valid_ssp(const SspInstance& ssp, double tol) {
  const auto problems = ssp_problems(ssp, tol);
  for (const auto& p : problems)
    if (p.find("zero-cost") != std::string::npos) throw SolverError(ErrorCode::kZeroCostNonGoal, p);
  if (!problems.empty()) throw SolverError(ErrorCode::kInvalidSsp, problems.front());
}

namespace {

void require_identity_e(const ProblemInstance& inst) {
  if (!dimension_errors(inst).empty())
    throw SolverError(ErrorCode::kDimensionMismatch, "instance dimensions inconsistent");
  if (!is_identity(inst.E, 1e-12))
    throw SolverError(ErrorCode::kInvalidArgument, "conversion needs E = I; normalize the instance first");
}

// Closed-loop column of state v under action a (0 = idle, j + 1 = input j), E = I.
Vector action_column(const ProblemInstance& inst, int v, int a) {
  Vector col = inst.A.col(v);
  if (a > 0) col += inst.input_column(v, a - 1);
  for (Eigen::Index w = 0; w < col.size(); ++w) {
    if (col(w) < -kTol) {
      std::ostringstream os;
      os << "closed-loop entry (" << w << "," << v << ") is negative; positivity assumption violated";
      throw SolverError(ErrorCode::kInvalidArgument, os.str());
    }
    col(w) = std::max(col(w), 0.0);
  }
  return col;
}

double action_cost(const ProblemInstance& inst, int v, int a) {
  return inst.s(v) + (a > 0 ? inst.input_cost(v, a - 1) : 0.0);
}

std::string action_label(int a) { return a == 0 ? "idle" : "u" + std::to_string(a); }

std::string state_name(int v) { return "x" + std::to_string(v + 1); }

}  // namespace

SspConversion to_ssp(const ProblemInstance& inst) {
  require_identity_e(inst);
  const int n = inst.n();
  SspConversion out;
  auto& ssp = out.ssp;
  for (int v = 0; v < n; ++v) ssp.states.push_back(state_name(v));
  ssp.states.emplace_back("goal");
  ssp.goal.assign(n + 1, false);
  ssp.goal[n] = true;
  out.goal_state = n;
  ssp.actions.resize(n + 1);
  for (int v = 0; v < n; ++v) {
    out.state_map.push_back(v);
    for (int a = 0; a <= inst.partition[v]; ++a) {
      const Vector col = action_column(inst, v, a);
      const double mass = col.sum();
      if (mass > 1.0 + kTol) {
        std::ostringstream os;
        os << "state " << v << " action " << action_label(a) << " has transition mass " << mass
           << "; use the skeleton expansion";
        throw SolverError(ErrorCode::kNotSubstochastic, os.str());
      }
      SspAction act{action_label(a), action_cost(inst, v, a), {}};
      for (int w = 0; w < n; ++w)
        if (col(w) != 0.0) act.transition.emplace_back(w, col(w));
      if (1.0 - mass > 0.0) act.transition.emplace_back(n, 1.0 - mass);
      ssp.actions[v].push_back(std::move(act));
    }
  }
  ssp.actions[n].push_back(SspAction{"stay", 0.0, {{n, 1.0}}});
  ssp.initial = 0;
  for (int v = 0; v < n; ++v)
    if (inst.x0(v) > 0.0) {
      ssp.initial = v;
      break;
    }
  return out;
}

ControlConversion from_ssp(const SspInstance& ssp) {
  require_valid_ssp(ssp);
  ControlConversion out;
  out.state_map.assign(ssp.size(), -1);
  std::vector<int> control_states;
  for (int v = 0; v < ssp.size(); ++v)
    if (!ssp.goal[v]) {
      out.state_map[v] = static_cast<int>(control_states.size());
      control_states.push_back(v);
    }
  const int n = static_cast<int>(control_states.size());
  if (n == 0) throw SolverError(ErrorCode::kInvalidSsp, "SSP has no non-goal state");

  auto restricted = [&](const Transition& t) {
    Vector col = Vector::Zero(n);
    for (const auto& [w, prob] : t)
      if (out.state_map[w] >= 0) col(out.state_map[w]) += prob;
    return col;
  };

  auto& inst = out.instance;
  inst.partition.resize(n);
  inst.A = Matrix::Zero(n, n);
  inst.E = Matrix::Identity(n, n);
  inst.s = Vector::Zero(n);
  inst.x0 = Vector::Zero(n);
  std::vector<Vector> b_cols;
  std::vector<double> r_vals;
  for (int i = 0; i < n; ++i) {
    const auto& acts = ssp.actions[control_states[i]];
    int base = 0;
    for (int a = 1; a < static_cast<int>(acts.size()); ++a)
      if (acts[a].cost < acts[base].cost) base = a;
    out.base_action.push_back(base);
    const Vector base_col = restricted(acts[base].transition);
    inst.A.col(i) = base_col;
    inst.s(i) = acts[base].cost;
    inst.partition[i] = static_cast<int>(acts.size()) - 1;
    for (int a = 0; a < static_cast<int>(acts.size()); ++a) {
      if (a == base) continue;
      b_cols.push_back(restricted(acts[a].transition) - base_col);
      r_vals.push_back(acts[a].cost - acts[base].cost);
    }
  }
  const int m = static_cast<int>(b_cols.size());
  inst.B = Matrix::Zero(n, m);
  inst.r = Vector::Zero(m);
  for (int j = 0; j < m; ++j) {
    inst.B.col(j) = b_cols[j];
    inst.r(j) = r_vals[j];
  }
  if (out.state_map[ssp.initial] >= 0) inst.x0(out.state_map[ssp.initial]) = 1.0;
  return out;
}

Policy policy_from_ssp(const ControlConversion& conv, const std::vector<int>& ssp_choice) {
  const int n = conv.instance.n();
  Policy pol = Policy::idle(n);
  for (int v = 0; v < static_cast<int>(conv.state_map.size()); ++v) {
    const int i = conv.state_map[v];
    if (i < 0) continue;
    const int a = ssp_choice.at(v);
    const int base = conv.base_action[i];
    pol.choice[i] = a == base ? kIdle : (a < base ? a : a - 1);
  }
  return pol;
}

SspSolution solve_ssp(const SspInstance& ssp, const ViOptions& opts) {
  require_valid_ssp(ssp);
  const int n = ssp.size();
  SspSolution sol;
  sol.J = Vector::Zero(n);
  sol.policy.assign(n, 0);
  double change = std::numeric_limits<double>::infinity();
  while (sol.iterations < opts.max_iter) {
    Vector next = Vector::Zero(n);
    for (int v = 0; v < n; ++v) {
      if (ssp.goal[v]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < static_cast<int>(ssp.actions[v].size()); ++a) {
        const auto& act = ssp.actions[v][a];
        double q = act.cost;
        for (const auto& [w, t] : act.transition) q += t * sol.J(w);
        if (q < best) {
          best = q;
          sol.policy[v] = a;
        }
      }
      next(v) = best;
    }
    ++sol.iterations;
    change = (next - sol.J).cwiseAbs().maxCoeff();
    sol.J = std::move(next);
    if (!std::isfinite(change)) break;
    if (change <= opts.tol) return sol;
  }
  std::ostringstream os;
  os << "SSP value iteration did not converge (last change " << change << "); no proper policy may exist";
  throw SolverError(ErrorCode::kNoConvergence, os.str());
}

int SkeletonSsp::index_of(int base, int level) const {
  if (base == base_states) return base_states * levels;
  return (level - 1) * base_states + base;
}

namespace {

struct LevelMass {
  int target;  // base state, or n for the goal
  int level;
  double prob;
};

}  // namespace

SkeletonSsp expand_skeleton(const ProblemInstance& inst, int levels) {
  require_identity_e(inst);
  if (levels < 1) throw SolverError(ErrorCode::kInvalidArgument, "skeleton needs at least one level");
  const int n = inst.n();

  // Level-1 distribution of every (v, a).
  std::vector<std::vector<std::vector<LevelMass>>> base(n);
  std::vector<std::vector<double>> costs(n);
  bool super = false;
  double mean_res = 0.0;
  double unit_res = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int a = 0; a <= inst.partition[v]; ++a) {
      const Vector col = action_column(inst, v, a);
      const double mass = col.sum();
      std::vector<LevelMass> dist;
      if (mass <= 1.0 + kTol) {
        for (int w = 0; w < n; ++w)
          if (col(w) != 0.0) dist.push_back({w, 1, col(w)});
        if (1.0 - mass > 0.0) dist.push_back({n, 1, 1.0 - mass});
      } else {
        super = true;
        const double rounded = std::round(mass);
        const bool integral = std::abs(mass - rounded) <= 1e-12;
        const int lo = integral ? static_cast<int>(rounded) : static_cast<int>(std::floor(mass));
        const int hi = integral ? lo : lo + 1;
        const double w_hi = integral ? 0.0 : mass - lo;
        const double w_lo = 1.0 - w_hi;
        double total = 0.0;
        for (int w = 0; w < n; ++w) {
          if (col(w) == 0.0) continue;
          const double budget = col(w) / mass;
          double mean = 0.0;
          if (w_lo > 0.0) {
            dist.push_back({w, lo, budget * w_lo});
            mean += lo * budget * w_lo;
            total += budget * w_lo;
          }
          if (w_hi > 0.0) {
            dist.push_back({w, hi, budget * w_hi});
            mean += hi * budget * w_hi;
            total += budget * w_hi;
          }
          mean_res = std::max(mean_res, std::abs(mean - col(w)));
        }
        unit_res = std::max(unit_res, std::abs(total - 1.0));
      }
      base[v].push_back(std::move(dist));
      costs[v].push_back(action_cost(inst, v, a));
    }
  }

  SkeletonSsp sk;
  sk.base_states = n;
  sk.levels = super ? levels : 1;
  sk.level_mean_residual = mean_res;
  sk.unit_mass_residual = unit_res;
  const int flat = n * sk.levels + 1;
  const int goal = n * sk.levels;
  auto& ssp = sk.ssp;
  ssp.states.resize(flat);
  ssp.goal.assign(flat, false);
  ssp.goal[goal] = true;
  ssp.actions.resize(flat);
  sk.origin.resize(flat);
  sk.clamped.assign(flat, false);
  ssp.states[goal] = "goal";
  sk.origin[goal] = {n, 1};

  for (int k = 1; k <= sk.levels; ++k) {
    for (int v = 0; v < n; ++v) {
      const int idx = sk.index_of(v, k);
      ssp.states[idx] = sk.levels == 1 ? state_name(v) : state_name(v) + "@" + std::to_string(k);
      sk.origin[idx] = {v, k};
      for (std::size_t a = 0; a < base[v].size(); ++a) {
        std::map<int, double> merged;
        double clamped_mass = 0.0;
        for (const auto& lm : base[v][a]) {
          if (lm.target == n) {
            merged[goal] += lm.prob;
            continue;
          }
          int level = k * lm.level;
          if (level > sk.levels) {
            level = sk.levels;
            clamped_mass += lm.prob;
          }
          merged[sk.index_of(lm.target, level)] += lm.prob;
        }
        if (clamped_mass > 0.0) {
          sk.clamped[idx] = true;
          sk.truncation_mass = std::max(sk.truncation_mass, clamped_mass);
        }
        SspAction act{action_label(static_cast<int>(a)), k * costs[v][a], {}};
        act.transition.assign(merged.begin(), merged.end());
        ssp.actions[idx].push_back(std::move(act));
      }
    }
  }
  ssp.actions[goal].push_back(SspAction{"stay", 0.0, {{goal, 1.0}}});
  ssp.initial = 0;
  for (int v = 0; v < n; ++v)
    if (inst.x0(v) > 0.0) {
      ssp.initial = sk.index_of(v, 1);
      break;
    }
  return sk;
}

ScalingReport check_prop2_scaling(const SkeletonSsp& sk, int max_level, const ViOptions& opts) {
  ScalingReport rep;
  rep.J = solve_ssp(sk.ssp, opts).J;
  const int top = std::min(max_level, sk.levels);
  for (int v = 0; v < sk.base_states; ++v) {
    const double j1 = rep.J(sk.index_of(v, 1));
    for (int k = 1; k <= top; ++k) {
      const int idx = sk.index_of(v, k);
      if (sk.clamped[idx]) continue;
      const double dev = std::abs(rep.J(idx) - k * j1) / std::max(1.0, k * j1);
      ++rep.checked;
      if (rep.worst_state < 0 || dev > rep.max_relative_deviation) {
        rep.max_relative_deviation = dev;
        rep.worst_state = v;
        rep.worst_level = k;
      }
    }
  }
  return rep;
}

ScalingReport check_prop2_scaling(const SkeletonSsp& sk, const ViOptions& opts) {
  return check_prop2_scaling(sk, std::max(1, sk.levels / 2), opts);
}

}  // namespace posctl
