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

#include "posctl/gen.hpp"

#include "posctl/bellman.hpp"

#include <algorithm>
#include <cmath>

namespace posctl {

namespace {

constexpr int kMaxDrawAttempts = 100;
constexpr double kMaxConditionGenerated = 1e8;

bool valid_range(const CostRange& c) { return c.lo > 0.0 && c.hi >= c.lo && std::isfinite(c.hi); }

// Nonnegative matrix with a positive diagonal and the requested column sums.
Matrix draw_dynamics(const GenConfig& cfg, Rng& rng) {
  const int n = cfg.n;
  Matrix a = Matrix::Zero(n, n);
  for (int q = 0; q < n; ++q)
    for (int p = 0; p < n; ++p)
      if (p == q || rng.bernoulli(cfg.density)) a(p, q) = rng.uniform(0.05, 1.0);
  const int unstable_col = cfg.stable_open_loop ? -1 : rng.integer(0, n - 1);
  for (int q = 0; q < n; ++q) {
    const double target = q == unstable_col ? rng.uniform(1.1, 1.5) : rng.uniform(0.5, 0.95);
    a.col(q) *= target / a.col(q).sum();
  }
  return a;
}

// Routing vector away from `self`: nonnegative with total in [0.5, 1).
Vector draw_routing(const GenConfig& cfg, int self, Rng& rng) {
  const int n = cfg.n;
  Vector d = Vector::Zero(n);
  if (n == 1) return d;
  for (int w = 0; w < n; ++w)
    if (w != self && rng.bernoulli(cfg.density)) d(w) = rng.uniform(0.05, 1.0);
  if (d.sum() == 0.0) {
    int w = rng.integer(0, n - 2);
    if (w >= self) ++w;
    d(w) = rng.uniform(0.05, 1.0);
  }
  d *= rng.uniform(0.5, 0.99) / d.sum();
  return d;
}

}  // namespace

void check_config(const GenConfig& cfg) {
  auto fail = [](const char* msg) { throw SolverError(ErrorCode::kInvalidArgument, msg); };
  if (cfg.n < 1) fail("n must be positive");
  if (!(cfg.density > 0.0 && cfg.density <= 1.0)) fail("density must lie in (0, 1]");
  if (!cfg.actions_per_state.empty() && static_cast<int>(cfg.actions_per_state.size()) != cfg.n)
    fail("actions_per_state length differs from n");
  for (int m : cfg.actions_per_state)
    if (m < 0) fail("negative action count");
  if (cfg.actions_per_state.empty() && (cfg.min_actions < 0 || cfg.max_actions < cfg.min_actions))
    fail("invalid action count range");
  if (!valid_range(cfg.state_cost_range) || !valid_range(cfg.disposal_cost_range) ||
      !valid_range(cfg.routing_cost_range))
    fail("cost ranges must be positive intervals");
}

ProblemInstance random_instance(const GenConfig& cfg) {
  check_config(cfg);
  Rng rng(cfg.seed);
  const int n = cfg.n;
  ProblemInstance inst;

  // Draw order: action profile, A, inputs block by block, s, x0.
  inst.partition = cfg.actions_per_state;
  if (inst.partition.empty())
    for (int i = 0; i < n; ++i) inst.partition.push_back(rng.integer(cfg.min_actions, cfg.max_actions));

  for (int attempt = 0;; ++attempt) {
    inst.A = draw_dynamics(cfg, rng);
    if (cfg.constraint == ConstraintKind::kIdentity || condition_number(inst.A) <= kMaxConditionGenerated) break;
    if (attempt + 1 == kMaxDrawAttempts)
      throw SolverError(ErrorCode::kInvalidArgument, "could not draw an invertible dynamics matrix");
  }
  inst.E = cfg.constraint == ConstraintKind::kDynamics ? inst.A : Matrix::Identity(n, n);

  const int m = inst.m();
  inst.B = Matrix::Zero(n, m);
  inst.r = Vector::Zero(m);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < inst.partition[i]; ++j, ++col) {
      const bool disposal = (cfg.disposal_first && j == 0) || n == 1;
      const Vector d = disposal ? Vector::Zero(n) : draw_routing(cfg, i, rng);
      const Vector drain = cfg.constraint == ConstraintKind::kDynamics ? Vector(Vector::Unit(n, i))
                                                                       : Vector(inst.A.col(i));
      inst.B.col(col) = d - drain;
      const auto& range = disposal ? cfg.disposal_cost_range : cfg.routing_cost_range;
      inst.r(col) = rng.uniform(range.lo, range.hi);
    }
  }

  inst.s.resize(n);
  for (int i = 0; i < n; ++i) inst.s(i) = rng.uniform(cfg.state_cost_range.lo, cfg.state_cost_range.hi);

  inst.x0 = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    if (rng.bernoulli(0.5)) inst.x0(i) = rng.uniform(0.1, 1.0);
  if (inst.x0.maxCoeff() <= 0.0) inst.x0(rng.integer(0, n - 1)) = rng.uniform(0.1, 1.0);

  const bool every_block = std::all_of(inst.partition.begin(), inst.partition.end(), [](int m_i) { return m_i > 0; });
  if (cfg.disposal_first && every_block) {
    inst.k_hat = Policy{std::vector<int>(n, 0)};
  } else if (cfg.stable_open_loop) {
    inst.k_hat = Policy::idle(n);
  } else if (every_block) {
    Policy all_first{std::vector<int>(n, 0)};
    if (is_schur_stable(expand_policy(inst, all_first).dynamics)) inst.k_hat = all_first;
  }
  return inst;
}

GenConfig chemical_plant_config(std::uint64_t seed) {
  GenConfig cfg;
  cfg.n = 25;
  cfg.actions_per_state.assign(25, 2);
  cfg.seed = seed;
  cfg.disposal_first = true;
  cfg.constraint = ConstraintKind::kDynamics;
  return cfg;
}

ProblemInstance chemical_plant(std::uint64_t seed) {
  ProblemInstance inst = random_instance(chemical_plant_config(seed));
  inst.x0 = Vector::Zero(25);
  inst.x0(1) = 0.7;
  inst.x0(2) = 0.8;
  inst.k_hat = Policy{std::vector<int>(25, 0)};
  return inst;
}

ProblemInstance example_network(double self_retention) {
  ProblemInstance inst;
  inst.partition = {1, 2, 1};
  inst.A.resize(3, 3);
  inst.A << 0.4, 0.0, 0.0,
            0.0, self_retention, 0.0,
            0.4, 0.4, 0.4;
  inst.B.resize(3, 4);
  inst.B << -0.4, 0.3, 0.0, 0.2,
            0.4, -0.6, -0.5, 0.2,
            0.0, 0.3, 0.0, -0.4;
  inst.E = Matrix::Identity(3, 3);
  inst.s = Vector::Ones(3);
  inst.r = Vector::Ones(4);
  inst.x0 = Vector(3);
  inst.x0 << 2.0, 0.0, 1.0;
  inst.k_hat = Policy::idle(3);
  return inst;
}

namespace {

bool leaves_region(const ProblemInstance& inst, const StateSet& region, int i) {
  auto crosses = [&](const auto& column) {
    for (int w : region.complement())
      if (column(w) > 0.0) return true;
    return false;
  };
  if (crosses(inst.A.col(i))) return true;
  for (int b = 0; b < inst.n(); ++b) {
    if (inst.E(b, i) <= 0.0) continue;
    for (int j = 0; j < inst.partition[b]; ++j)
      if (crosses(inst.input_column(b, j))) return true;
  }
  return false;
}

}  // namespace

FictitiousResult add_fictitious_actions(const ProblemInstance& inst, const StateSet& region, double penalty_factor,
                                        std::optional<double> cost_bound) {
  if (!(penalty_factor > 1.0)) throw SolverError(ErrorCode::kInvalidArgument, "penalty_factor must exceed 1");
  const int n = inst.n();
  const bool identity = is_identity(inst.E, 1e-12);
  if (!identity && (inst.E - inst.A).cwiseAbs().maxCoeff() > 1e-12)
    throw SolverError(ErrorCode::kInvalidArgument, "valves are defined for E = I or E = A");

  FictitiousResult out;
  if (cost_bound) {
    out.cost_bound = *cost_bound;
  } else {
    Vector bound;
    if (inst.k_hat) {
      bound = evaluate_policy(inst, *inst.k_hat);
    } else {
      bound = value_iterate(inst, Vector::Zero(n)).p;
    }
    out.cost_bound = 0.0;
    for (int i : region.members()) out.cost_bound = std::max(out.cost_bound, bound(i));
  }
  out.valve_cost = penalty_factor * out.cost_bound;

  std::vector<bool> valve(n, false);
  for (int i : region.members()) valve[i] = region.full() || leaves_region(inst, region, i);

  ProblemInstance aug = inst;
  aug.partition.clear();
  std::vector<Vector> cols;
  std::vector<double> costs;
  for (int i = 0; i < n; ++i) {
    int size = inst.partition[i];
    for (int j = 0; j < size; ++j) {
      cols.emplace_back(inst.input_column(i, j));
      costs.push_back(inst.input_cost(i, j));
    }
    if (valve[i]) {
      cols.emplace_back(identity ? Vector(-inst.A.col(i)) : Vector(-Vector::Unit(n, i)));
      costs.push_back(out.valve_cost);
      out.added.emplace_back(i, size);
      ++size;
    }
    aug.partition.push_back(size);
  }
  aug.B = Matrix::Zero(n, static_cast<Eigen::Index>(cols.size()));
  aug.r = Vector::Zero(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    aug.B.col(static_cast<Eigen::Index>(c)) = cols[c];
    aug.r(static_cast<Eigen::Index>(c)) = costs[c];
  }

  out.valve_policy = inst.k_hat ? *inst.k_hat : Policy::idle(n);
  for (const auto& [state, action] : out.added) out.valve_policy.choice[state] = action;
  out.instance = std::move(aug);
  return out;
}

bool fictitious_unused(const FictitiousResult& result, const Policy& policy) {
  for (const auto& [state, action] : result.added)
    if (policy.choice.at(state) == action) return false;
  return true;
}

}  // namespace posctl
