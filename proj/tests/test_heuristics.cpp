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
#include "posctl/heuristics.hpp"

#include <doctest.h>

#include <sstream>

using namespace posctl;

TEST_CASE("initial bounds on the example network") {
  const auto inst = example_network();
  const auto pair = init_heuristics(inst);
  CHECK(pair.lower == inst.s);
  const auto ref = oracle::policy_cost(inst, inst.k_hat->choice);
  REQUIRE(ref);
  CHECK((pair.upper - *ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(check_consistent_lower(inst, pair.lower));
  CHECK(check_consistent_upper(inst, pair.upper));
  CHECK_FALSE(check_consistent_lower(inst, 2.0 * *oracle::optimal_cost(inst)));
}

TEST_CASE("upper bound from an optimal k_hat is already optimal") {
  auto inst = example_network();
  const auto bf = brute_force_solve(inst);
  inst.k_hat = bf.policy;
  CHECK((init_heuristics(inst).upper - bf.p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("missing k_hat is reported") {
  auto inst = example_network();
  inst.k_hat.reset();
  try {
    init_heuristics(inst);
    FAIL("expected MissingInitialPolicy");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kMissingInitialPolicy);
  }
}

TEST_CASE("chemical plant upper bound is s + A'r_hat") {
  const auto inst = chemical_plant(4);
  const auto pair = init_heuristics(inst);
  Vector r_hat(inst.n());
  for (int i = 0; i < inst.n(); ++i) r_hat(i) = inst.input_cost(i, 0);
  CHECK((pair.upper - (inst.s + inst.A.transpose() * r_hat)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one improvement step tightens both bounds") {
  const auto inst = example_network();
  const auto h0 = init_heuristics(inst);
  const auto h1 = improve(inst, h0, 1);
  CHECK(((h0.upper - h1.upper).array() >= -1e-12).all());
  CHECK(((h1.lower - h0.lower).array() >= -1e-12).all());
  CHECK(((h0.upper - h1.upper).maxCoeff() > 0.0 || (h1.lower - h0.lower).maxCoeff() > 0.0));
}

TEST_CASE("consistency survives improvement") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    GenConfig cfg;
    cfg.n = 2 + static_cast<int>(seed % 5);
    cfg.min_actions = 0;
    cfg.max_actions = 2;
    cfg.seed = seed;
    const auto inst = random_instance(cfg);
    auto pair = init_heuristics(inst);
    for (int k = 0; k < 5; ++k) {
      pair = improve(inst, pair, 1);
      CHECK(check_consistent_lower(inst, pair.lower, 1e-9));
      CHECK(check_consistent_upper(inst, pair.upper, 1e-9));
    }
  }
}

TEST_CASE("rate bound stays below the improving lower bound") {
  const auto inst = example_network();
  const auto pair = init_heuristics(inst);
  const auto rb = rate_bound(inst, pair);
  CHECK(rb.delta > 0.0);
  CHECK(rb.delta <= 1.0);
  CHECK(rb.beta > 1.0);
  const auto p = *oracle::optimal_cost(inst);
  // delta is the largest value with lower >= delta * upper.
  for (int i = 0; i < inst.n(); ++i) CHECK(pair.lower(i) >= rb.delta * pair.upper(i) - 1e-15);
  CHECK(rb.factor(0) == doctest::Approx(rb.delta));
  auto h = pair;
  for (int k = 1; k <= 50; ++k) {
    h = improve(inst, h, 1);
    if (auto curve = rb.curve(p, k)) CHECK(((h.lower - *curve).array() >= -1e-9).all());
  }
}

TEST_CASE("beta is undefined when a free input raises the upper bound") {
  auto inst = example_network();
  inst.r(0) = 0.0;
  const auto pair = init_heuristics(inst);
  // Input 0 moves mass from state 0 to state 1 at no charge; B'h is positive
  // when the upper bound at state 1 exceeds the one at state 0.
  if (inst.B.col(0).dot(pair.upper) > 0.0) {
    try {
      rate_bound(inst, pair);
      FAIL("expected BetaUndefined");
    } catch (const SolverError& e) {
      CHECK(e.code() == ErrorCode::kBetaUndefined);
    }
  } else {
    CHECK_NOTHROW(rate_bound(inst, pair));
  }
}

TEST_CASE("bound trajectory csv has one row per step") {
  const auto inst = example_network();
  std::ostringstream os;
  write_bound_trajectory_csv(os, inst, init_heuristics(inst), 3);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "k,h_upper_0,h_upper_1,h_upper_2,h_lower_0,h_lower_1,h_lower_2");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 4);
}
