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

#include "oracle.hpp"
#include "posctl/bellman.hpp"
#include "posctl/gen.hpp"
#include "posctl/ssp.hpp"

#include <doctest.h>

using namespace posctl;

namespace {

double prob(const SspAction& a, int target) {
  double total = 0.0;
  for (const auto& [w, q] : a.transition)
    if (w == target) total += q;
  return total;
}

}  // namespace

TEST_CASE("example 1 state 2 costs and transitions") {
  const auto conv = to_ssp(example_network());
  const auto& acts = conv.ssp.actions[conv.state_map[1]];
  REQUIRE(acts.size() == 3);
  const double costs[3] = {1.0, 2.0, 2.0};
  const double T[3][4] = {{0, 0.6, 0.4, 0}, {0.3, 0, 0.7, 0}, {0, 0.1, 0.4, 0.5}};
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(acts[a].cost - costs[a]) <= 1e-12);
    for (int w = 0; w < 3; ++w) CHECK(std::abs(prob(acts[a], conv.state_map[w]) - T[a][w]) <= 1e-12);
    CHECK(std::abs(prob(acts[a], conv.goal_state) - T[a][3]) <= 1e-12);
    CHECK(std::abs(acts[a].mass() - 1.0) <= 1e-12);
  }
  CHECK(ssp_problems(conv.ssp).empty());
}

TEST_CASE("ssp immediate cost equals the linear stage cost") {
  Rng rng(23);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenConfig cfg;
    cfg.n = 4;
    cfg.min_actions = 0;
    cfg.max_actions = 3;
    cfg.seed = seed;
    cfg.constraint = ConstraintKind::kIdentity;
    const auto inst = random_instance(cfg);
    const auto conv = to_ssp(inst);
    Vector x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.uniform();
    Policy pol = Policy::idle(4);
    for (int i = 0; i < 4; ++i) pol.choice[i] = rng.integer(-1, inst.partition[i] - 1);
    const auto cl = expand_policy(inst, pol);
    double ssp_cost = 0.0;
    for (int i = 0; i < 4; ++i) ssp_cost += x(i) * conv.ssp.actions[conv.state_map[i]][pol.choice[i] + 1].cost;
    CHECK(ssp_cost == doctest::Approx(cl.stage_cost.dot(x)).epsilon(1e-12));
  }
}

TEST_CASE("ssp solution matches the control oracle") {
  const auto inst = example_network();
  const auto conv = to_ssp(inst);
  const auto sol = solve_ssp(conv.ssp);
  const auto p = *oracle::optimal_cost(inst);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(sol.J(conv.state_map[i]) - p(i)) <= 1e-8);
  const auto ref = *oracle::ssp_optimal_cost(conv.ssp);
  CHECK((sol.J - ref).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("round trip preserves the optimal cost vector") {
  const auto inst = example_network();
  const auto back = from_ssp(to_ssp(inst).ssp);
  const auto p = *oracle::optimal_cost(inst);
  const auto q = *oracle::optimal_cost(back.instance);
  for (int v = 0; v < static_cast<int>(back.state_map.size()); ++v) {
    const int c = back.state_map[v];
    if (c >= 0) CHECK(std::abs(q(c) - p(v)) <= 1e-9);
  }
  CHECK(is_identity(back.instance.E));
  CHECK(validate(back.instance).ok());
}

TEST_CASE("ssp policy maps back to an optimal control policy") {
  const auto inst = example_network();
  const auto back = from_ssp(to_ssp(inst).ssp);
  const auto sol = solve_ssp(to_ssp(inst).ssp);
  const auto pol = policy_from_ssp(back, sol.policy);
  const auto p = *oracle::optimal_cost(back.instance);
  CHECK((evaluate_policy(back.instance, pol) - p).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("conversion refuses non identity constraints and heavy columns") {
  try {
    to_ssp(example_network(0.8));
    FAIL("expected NotSubstochastic");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kNotSubstochastic);
  }
  GenConfig cfg;
  cfg.n = 3;
  cfg.seed = 1;
  const auto inst = random_instance(cfg);
  CHECK_THROWS_AS(to_ssp(inst), SolverError);
}

TEST_CASE("invalid ssp data is rejected") {
  SspInstance ssp;
  ssp.states = {"a", "g"};
  ssp.goal = {false, true};
  ssp.actions = {{SspAction{"x", 1.0, {{1, 0.7}}}}, {SspAction{"stay", 0.0, {{1, 1.0}}}}};
  CHECK_FALSE(ssp_problems(ssp).empty());
  ssp.actions[0][0].transition = {{1, 1.0}};
  CHECK(ssp_problems(ssp).empty());
  ssp.actions[0][0].cost = 0.0;
  try {
    require_valid_ssp(ssp);
    FAIL("expected ZeroCostNonGoal");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kZeroCostNonGoal);
  }
}

TEST_CASE("skeleton redistribution of the example 2 idle column") {
  const auto sk = expand_skeleton(example_network(0.8), 16);
  const int v1 = sk.index_of(1, 1);
  const auto& idle = sk.ssp.actions[v1][0];
  CHECK(std::abs(prob(idle, sk.index_of(1, 1)) - 8.0 / 15.0) <= 1e-12);
  CHECK(std::abs(prob(idle, sk.index_of(1, 2)) - 2.0 / 15.0) <= 1e-12);
  CHECK(std::abs(prob(idle, sk.index_of(2, 1)) - 4.0 / 15.0) <= 1e-12);
  CHECK(std::abs(prob(idle, sk.index_of(2, 2)) - 1.0 / 15.0) <= 1e-12);
  CHECK(std::abs(idle.mass() - 1.0) <= 1e-12);
  CHECK(sk.level_mean_residual <= 1e-12);
  CHECK(sk.unit_mass_residual <= 1e-12);
  CHECK(ssp_problems(sk.ssp).empty());
}

TEST_CASE("skeleton level copies scale costs and targets") {
  const auto sk = expand_skeleton(example_network(0.8), 16);
  const auto& base = sk.ssp.actions[sk.index_of(0, 1)];
  const auto& third = sk.ssp.actions[sk.index_of(0, 3)];
  REQUIRE(base.size() == third.size());
  for (std::size_t a = 0; a < base.size(); ++a) {
    CHECK(third[a].cost == doctest::Approx(3.0 * base[a].cost).epsilon(1e-15));
    for (const auto& [w, q] : base[a].transition) {
      const auto [v, level] = sk.origin[w];
      if (v < 0) continue;
      CHECK(prob(third[a], sk.index_of(v, std::min(3 * level, 16))) >= q - 1e-15);
    }
  }
}

TEST_CASE("skeleton values scale with the level") {
  const auto sk = expand_skeleton(example_network(0.8), 16);
  const auto rep = check_prop2_scaling(sk, 5);
  CHECK(rep.checked > 0);
  CHECK(rep.max_relative_deviation <= 1e-6);
  // Level one values equal the control optimum.
  const auto p = *oracle::optimal_cost(example_network(0.8));
  for (int v = 0; v < 3; ++v) CHECK(std::abs(rep.J(sk.index_of(v, 1)) - p(v)) <= 1e-8);
}
