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
#include "posctl/search.hpp"

#include <doctest.h>

#include <sstream>

using namespace posctl;

namespace {

StateSet set_of(int n, std::initializer_list<int> members) {
  StateSet S(n);
  for (int i : members) S.insert(i);
  return S;
}

ProblemInstance two_state_chain() {
  ProblemInstance inst;
  inst.partition = {0, 0};
  inst.A = (Matrix(2, 2) << 0.5, 0.0, 0.5, 0.3).finished();
  inst.B = Matrix::Zero(2, 0);
  inst.E = Matrix::Identity(2, 2);
  inst.s = (Vector(2) << 1.0, 2.0).finished();
  inst.r = Vector::Zero(0);
  inst.x0 = (Vector(2) << 1.0, 0.0).finished();
  inst.k_hat = Policy::idle(2);
  return inst;
}

}  // namespace

TEST_CASE("local dynamics absorb outside states") {
  const auto inst = two_state_chain();
  const Matrix AS = local_dynamics(inst, set_of(2, {0}));
  CHECK(AS == (Matrix(2, 2) << 0.5, 0.0, 0.5, 1.0).finished());
  CHECK(local_dynamics(inst, StateSet::all(2)) == inst.A);
}

TEST_CASE("single state local solve has a scalar closed form") {
  const auto inst = two_state_chain();
  const HeuristicPair pair{(Vector(2) << 10.0, 7.0).finished(), (Vector(2) << 1.0, 2.0).finished()};
  const auto S = set_of(2, {0});
  const auto up = local_solve(inst, S, pair, BoundMode::kUpper);
  CHECK(up.g(0) == doctest::Approx((1.0 + 0.5 * 7.0) / 0.5).epsilon(1e-9));
  CHECK(up.g(1) == 7.0);
  const auto low = local_solve(inst, S, pair, BoundMode::kLower);
  CHECK(low.g(0) == doctest::Approx((1.0 + 0.5 * 2.0) / 0.5).epsilon(1e-9));
  CHECK(low.g(1) == 2.0);
}

TEST_CASE("local solve on the full set is the global solution") {
  const auto inst = example_network();
  const auto p = *oracle::optimal_cost(inst);
  const HeuristicPair pair{Vector::Constant(3, 100.0), Vector::Zero(3)};
  for (auto mode : {BoundMode::kUpper, BoundMode::kLower}) {
    const auto sol = local_solve(inst, StateSet::all(3), pair, mode);
    CHECK((sol.g - p).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("local bounds sandwich the optimum on a small chemical-style instance") {
  GenConfig cfg = chemical_plant_config(7);
  cfg.n = 6;
  cfg.actions_per_state.resize(6);
  const auto inst = random_instance(cfg);
  REQUIRE(inst.k_hat);
  const auto p = *oracle::optimal_cost(inst);
  const auto pair = init_heuristics(inst);
  StateSet S(inst.n());
  for (int i = 0; i < inst.n(); ++i)
    if (inst.x0(i) > 0.0) S.insert(i);
  const auto up = local_solve(inst, S, pair, BoundMode::kUpper);
  const auto low = local_solve(inst, S, pair, BoundMode::kLower);
  CHECK(((p - low.g).array() >= -1e-8).all());
  CHECK(((up.g - p).array() >= -1e-8).all());
}

TEST_CASE("absorption limit of a two state chain") {
  const auto inst = two_state_chain();
  const auto res = absorption_limit(inst, set_of(2, {0}), Policy::idle(2), inst.x0);
  CHECK_FALSE(res.divergent);
  CHECK(res.x(0) == doctest::Approx(0.0));
  CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-12));
  const auto full = absorption_limit(inst, StateSet::all(2), Policy::idle(2), inst.x0);
  CHECK(full.x.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("absorption limit agrees with power iteration") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenConfig cfg;
    cfg.n = 4;
    cfg.seed = seed;
    const auto inst = random_instance(cfg);
    const auto S = set_of(4, {0, static_cast<int>(seed % 4)});
    const auto direct = absorption_limit(inst, S, *inst.k_hat, Vector::Ones(4));
    const auto power = absorption_power_iterate(inst, S, *inst.k_hat, Vector::Ones(4), 5000);
    CHECK_FALSE(direct.divergent);
    CHECK((direct.x - power).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("unstable inside block falls back and flags") {
  auto inst = two_state_chain();
  inst.A(0, 0) = 1.2;
  const auto res = absorption_limit(inst, set_of(2, {0}), Policy::idle(2), inst.x0);
  CHECK(res.divergent);
}

TEST_CASE("selection picks the largest weighted gap with lowest index ties") {
  const auto S = set_of(4, {0});
  const HeuristicPair flat{Vector::Ones(4), Vector::Ones(4)};
  CHECK(select_next(S, flat, Vector::Zero(4), Vector::Zero(4)) == 1);
  const HeuristicPair pair{(Vector(4) << 1, 3, 3, 3).finished(), Vector::Ones(4)};
  const Vector x = (Vector(4) << 0, 0, 0, 1).finished();
  CHECK(select_next(S, pair, x, Vector::Zero(4)) == 3);
}

TEST_CASE("search at gamma one recovers the optimum on x0's support") {
  const auto inst = example_network();
  const auto p = *oracle::optimal_cost(inst);
  SearchOptions opts;
  opts.gamma = 1.0;
  const auto st = run_search(inst, opts);
  for (int i = 0; i < inst.n(); ++i)
    if (inst.x0(i) > 0.0) CHECK(st.g_upper(i) == doctest::Approx(p(i)).epsilon(1e-8));
  CHECK(st.upper_total(inst.x0) == doctest::Approx(p.dot(inst.x0)).epsilon(1e-8));
  CHECK(st.iteration <= inst.n());
}

TEST_CASE("search invariants hold on every snapshot") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    GenConfig cfg;
    cfg.n = 5;
    cfg.min_actions = 1;
    cfg.max_actions = 2;
    cfg.seed = seed;
    cfg.constraint = seed % 2 ? ConstraintKind::kIdentity : ConstraintKind::kDynamics;
    auto inst = random_instance(cfg);
    inst.x0.setZero();
    inst.x0(seed % 5) = 1.0;
    const auto p = *oracle::optimal_cost(inst);
    SearchOptions opts;
    opts.record_snapshots = true;
    opts.fix_actions = seed % 3 == 0;
    const auto st = run_search(inst, opts);
    int last = 0;
    for (const auto& snap : st.snapshots) {
      CHECK(snap.S.size() >= static_cast<std::size_t>(last));
      last = static_cast<int>(snap.S.size());
      for (int i = 0; i < inst.n(); ++i) {
        if (!snap.S.contains(i)) {
          CHECK(snap.g_upper(i) == st.heuristics.upper(i));
          CHECK(snap.g_lower(i) == st.heuristics.lower(i));
        }
        CHECK(snap.g_lower(i) <= p(i) + 1e-8);
        CHECK(p(i) <= snap.g_upper(i) + 1e-8);
      }
    }
    for (std::size_t k = 1; k < st.trace.size(); ++k) {
      CHECK(st.trace[k].upper_total <= st.trace[k - 1].upper_total + 1e-9);
      CHECK(st.trace[k].lower_total >= st.trace[k - 1].lower_total - 1e-9);
    }
    CHECK(st.upper_total(inst.x0) <= p.dot(inst.x0) + 1e-8);
  }
}

TEST_CASE("loop body is skipped when the initial bounds already agree") {
  // A + BK* = 0 makes p = s + K*'r, which k_hat already attains.
  ProblemInstance inst;
  inst.partition = {1};
  inst.A = Matrix::Constant(1, 1, 0.5);
  inst.B = Matrix::Constant(1, 1, -0.5);
  inst.E = Matrix::Identity(1, 1);
  inst.s = Vector::Constant(1, 1.0);
  inst.r = Vector::Constant(1, 0.0);
  inst.x0 = Vector::Constant(1, 1.0);
  inst.k_hat = Policy{{0}};
  const auto st = run_search(inst, SearchOptions{});
  CHECK(st.iteration == 0);
  CHECK(st.upper_total(inst.x0) == doctest::Approx(1.0));
}

TEST_CASE("certified actions belong to an optimal policy") {
  const auto inst = example_network();
  const auto p = *oracle::optimal_cost(inst);
  SUBCASE("degenerate box") {
    const auto fixed = fixable_actions(inst, StateSet::all(3), p, p);
    const auto pol = extract_policy(inst, p);
    for (int i = 0; i < 3; ++i)
      if (fixed[i]) CHECK(*fixed[i] == pol.choice[i]);
  }
  SUBCASE("wide box certifies nothing with alternatives") {
    const auto fixed = fixable_actions(inst, StateSet::all(3), Vector::Zero(3), Vector::Constant(3, 1e6));
    CHECK_FALSE(fixed[1]);
  }
  SUBCASE("bounds after two improvement steps") {
    const auto pair = improve(inst, init_heuristics(inst), 2);
    const auto fixed = fixable_actions(inst, StateSet::all(3), pair.lower, pair.upper);
    for (int i = 0; i < 3; ++i) {
      if (!fixed[i]) continue;
      // The certified action must attain the block minimum at p.
      const double best = block_minimum(inst, p, i).first;
      const double mine =
          *fixed[i] == kIdle ? 0.0 : inst.input_cost(i, *fixed[i]) + inst.input_column(i, *fixed[i]).dot(p);
      CHECK(mine <= best + 1e-9);
    }
  }
}

TEST_CASE("chemical plant seed 7 trace") {
  const auto inst = chemical_plant(7);
  SearchOptions opts;
  opts.gamma = 1.05;
  const auto st = run_search(inst, opts);
  CHECK(st.upper_total(inst.x0) <= 1.05 * st.lower_total(inst.x0) + 1e-12);
  REQUIRE(st.trace.size() >= 2);
  // Frozen regression values for the first selection.
  CHECK(st.trace[1].selected_state == 11);
  CHECK(st.trace.front().cardinality == 2);

  std::ostringstream os;
  write_trace_csv(os, st);
  CHECK(os.str().rfind("iteration,cardinality_S,upper_total,lower_total,selected_state\n", 0) == 0);
}
