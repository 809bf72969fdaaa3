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

#include "posctl/search.hpp"

#include "posctl/csv.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace posctl {

Matrix local_dynamics(const ProblemInstance& inst, const StateSet& S) {
  Matrix out = inst.A;
  for (int i : S.complement()) {
    out.col(i).setZero();
    out(i, i) = 1.0;
  }
  return out;
}

namespace {

double reduced_cost(const ProblemInstance& inst, const Vector& g, int block, int action) {
  if (action == kIdle) return 0.0;
  const int col = inst.block_offset(block) + action;
  return inst.r(col) + inst.B.col(col).dot(g);
}

// Block terms z_b and the choices that produce them.
void block_terms(const ProblemInstance& inst, const StateSet& S, BoundMode mode, const FixedActions& fixed,
                 const Vector& g, Vector& z, Policy& choice) {
  for (int b = 0; b < inst.n(); ++b) {
    int c;
    if (!S.contains(b) && mode == BoundMode::kUpper) {
      c = inst.k_hat->choice[b];
    } else if (S.contains(b) && !fixed.empty() && fixed[b]) {
      c = *fixed[b];
    } else {
      c = block_minimum(inst, g, b).second;
    }
    choice.choice[b] = c;
    z(b) = reduced_cost(inst, g, b, c);
  }
}

}  // namespace

LocalSolution local_solve(const ProblemInstance& inst, const StateSet& S, const HeuristicPair& pair,
                          BoundMode mode, const LocalSolveOptions& opts) {
  const int n = inst.n();
  if (static_cast<int>(S.universe()) != n) throw SolverError(ErrorCode::kDimensionMismatch, "S universe differs from n");
  if (mode == BoundMode::kUpper && !inst.k_hat)
    throw SolverError(ErrorCode::kMissingInitialPolicy, "upper local solve needs k_hat");
  if (!opts.fixed.empty() && static_cast<int>(opts.fixed.size()) != n)
    throw SolverError(ErrorCode::kDimensionMismatch, "fixed action list length differs from n");

  const Vector& frozen = mode == BoundMode::kUpper ? pair.upper : pair.lower;
  Vector g = opts.warm_start ? *opts.warm_start : frozen;
  const auto inside = S.members();
  for (int i : S.complement()) g(i) = frozen(i);

  LocalSolution sol;
  sol.policy = Policy::idle(n);
  Vector z(n);
  double change = std::numeric_limits<double>::infinity();
  while (sol.iterations < opts.vi.max_iter) {
    block_terms(inst, S, mode, opts.fixed, g, z, sol.policy);
    change = 0.0;
    Vector next = g;
    for (int i : inside) {
      next(i) = inst.s(i) + inst.A.col(i).dot(g) + inst.E.col(i).dot(z);
      change = std::max(change, std::abs(next(i) - g(i)));
    }
    g = std::move(next);
    ++sol.iterations;
    if (!std::isfinite(change)) break;
    if (change <= opts.vi.tol) {
      block_terms(inst, S, mode, opts.fixed, g, z, sol.policy);
      sol.g = std::move(g);
      return sol;
    }
  }
  std::ostringstream os;
  os << (mode == BoundMode::kUpper ? "upper" : "lower") << " local solve did not converge (last change "
     << change << "); boundary values may be inconsistent";
  throw SolverError(ErrorCode::kNoConvergence, os.str());
}

namespace {

Matrix absorbing_closed_loop(const ProblemInstance& inst, const StateSet& S, const Policy& policy) {
  Matrix m = expand_policy(inst, policy).dynamics;
  for (int i : S.complement()) {
    m.col(i).setZero();
    m(i, i) = 1.0;
  }
  return m;
}

}  // namespace

Vector absorption_power_iterate(const ProblemInstance& inst, const StateSet& S, const Policy& policy,
                                const Vector& x0, long steps) {
  const Matrix m = absorbing_closed_loop(inst, S, policy);
  Vector x = x0;
  for (long k = 0; k < steps; ++k) x = m * x;
  return x;
}

AbsorptionResult absorption_limit(const ProblemInstance& inst, const StateSet& S, const Policy& policy,
                                  const Vector& x0) {
  const auto in = S.members();
  const auto out = S.complement();
  const Matrix m = absorbing_closed_loop(inst, S, policy);
  const auto k_in = static_cast<Eigen::Index>(in.size());

  Matrix q(k_in, k_in);
  for (Eigen::Index a = 0; a < k_in; ++a)
    for (Eigen::Index b = 0; b < k_in; ++b) q(a, b) = m(in[a], in[b]);

  AbsorptionResult res;
  if (!is_schur_stable(q)) {
    res.divergent = true;
    Vector x = x0;
    for (long k = 0; k < kAbsorptionPowerCap; ++k) {
      x = m * x;
      if (!x.allFinite()) break;
    }
    res.x = std::move(x);
    return res;
  }

  Vector x_in(k_in);
  for (Eigen::Index a = 0; a < k_in; ++a) x_in(a) = x0(in[a]);
  const Vector visits = (Matrix::Identity(k_in, k_in) - q).partialPivLu().solve(x_in);

  res.x = Vector::Zero(inst.n());
  for (int o : out) {
    double mass = x0(o);
    for (Eigen::Index a = 0; a < k_in; ++a) mass += m(o, in[a]) * visits(a);
    res.x(o) = mass;
  }
  return res;
}

int select_next(const StateSet& S, const HeuristicPair& pair, const Vector& x_up, const Vector& x_low) {
  if (S.full()) throw SolverError(ErrorCode::kInvalidArgument, "search space already covers every state");
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i : S.complement()) {
    const double score = (pair.upper(i) - pair.lower(i)) * (x_up(i) + x_low(i));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

namespace {

// Worst case over the box of (cost of a) - (cost of b) for block i.
double dominance_margin(const ProblemInstance& inst, int i, int a, int b, const Vector& lo, const Vector& hi) {
  const int offset = inst.block_offset(i);
  double r_diff = 0.0;
  Vector d = Vector::Zero(inst.n());
  if (a != kIdle) {
    r_diff += inst.r(offset + a);
    d += inst.B.col(offset + a);
  }
  if (b != kIdle) {
    r_diff -= inst.r(offset + b);
    d -= inst.B.col(offset + b);
  }
  return r_diff + d.cwiseMax(0.0).dot(hi) + d.cwiseMin(0.0).dot(lo);
}

}  // namespace

FixedActions fixable_actions(const ProblemInstance& inst, const StateSet& S, const Vector& g_lower,
                             const Vector& g_upper) {
  const int n = inst.n();
  FixedActions out(n);
  for (int i : S.members()) {
    const int size = inst.partition[i];
    if (size == 0) continue;
    std::vector<int> candidates{kIdle};
    for (int j = 0; j < size; ++j) candidates.push_back(j);
    for (int a : candidates) {
      bool dominates = true;
      for (int b : candidates) {
        if (a == b) continue;
        if (dominance_margin(inst, i, a, b, g_lower, g_upper) > 0.0) {
          dominates = false;
          break;
        }
      }
      if (dominates) {
        out[i] = a;
        break;
      }
    }
  }
  return out;
}

namespace {

bool within_gamma(double upper, double lower, double gamma) {
  return upper <= gamma * lower + 1e-12 * std::abs(lower);
}

}  // namespace

SearchState run_search(const ProblemInstance& inst, const SearchOptions& opts) {
  return run_search(inst, init_heuristics(inst), opts);
}

SearchState run_search(const ProblemInstance& inst, const HeuristicPair& pair, const SearchOptions& opts) {
  const int n = inst.n();
  if (!(opts.gamma >= 1.0)) throw SolverError(ErrorCode::kInvalidArgument, "gamma must be at least 1");
  if (!inst.k_hat) throw SolverError(ErrorCode::kMissingInitialPolicy, "search needs k_hat");
  if (inst.x0.minCoeff() < 0.0 || !(inst.x0.maxCoeff() > 0.0))
    throw SolverError(ErrorCode::kInvalidArgument, "x0 must be nonnegative and nonzero");

  SearchState st;
  st.heuristics = pair;
  st.S = StateSet(n);
  for (int i = 0; i < n; ++i)
    if (inst.x0(i) > 0.0) st.S.insert(i);
  st.g_upper = pair.upper;
  st.g_lower = pair.lower;
  st.policy_upper = *inst.k_hat;
  st.policy_lower = Policy::idle(n);
  if (opts.fix_actions) st.fixed.assign(n, std::nullopt);

  const Vector& x0 = inst.x0;
  st.trace.push_back({0, static_cast<int>(st.S.size()), st.upper_total(x0), st.lower_total(x0), -1, false});
  if (opts.record_snapshots) st.snapshots.push_back({0, st.S, st.g_upper, st.g_lower, -1});
  if (within_gamma(st.upper_total(x0), st.lower_total(x0), opts.gamma)) return st;

  while (true) {
    ++st.iteration;
    LocalSolveOptions lo;
    lo.vi = opts.vi;
    lo.fixed = st.fixed;
    lo.warm_start = st.g_upper;
    auto up = local_solve(inst, st.S, pair, BoundMode::kUpper, lo);
    lo.warm_start = st.g_lower;
    auto low = local_solve(inst, st.S, pair, BoundMode::kLower, lo);
    st.g_upper = std::move(up.g);
    st.g_lower = std::move(low.g);
    st.policy_upper = std::move(up.policy);
    st.policy_lower = std::move(low.policy);

    if (opts.fix_actions) {
      const auto certified = fixable_actions(inst, st.S, st.g_lower, st.g_upper);
      for (int i = 0; i < n; ++i)
        if (!st.fixed[i] && certified[i]) st.fixed[i] = certified[i];
    }

    TraceEntry entry{st.iteration, static_cast<int>(st.S.size()), st.upper_total(x0), st.lower_total(x0), -1,
                     false};
    if (within_gamma(entry.upper_total, entry.lower_total, opts.gamma) || st.S.full()) {
      st.trace.push_back(entry);
      if (opts.record_snapshots) st.snapshots.push_back({st.iteration, st.S, st.g_upper, st.g_lower, -1});
      return st;
    }

    const auto x_up = absorption_limit(inst, st.S, st.policy_upper, x0);
    const auto x_low = absorption_limit(inst, st.S, st.policy_lower, x0);
    entry.lower_divergent = x_low.divergent || x_up.divergent;
    entry.selected_state = select_next(st.S, pair, x_up.x, x_low.x);
    st.trace.push_back(entry);
    if (opts.record_snapshots)
      st.snapshots.push_back({st.iteration, st.S, st.g_upper, st.g_lower, entry.selected_state});
    st.S.insert(entry.selected_state);
  }
}

void write_trace_csv(std::ostream& os, const SearchState& state) {
  CsvWriter csv(os);
  csv.row({"iteration", "cardinality_S", "upper_total", "lower_total", "selected_state"});
  for (const auto& e : state.trace) {
    csv.begin_row();
    csv.field(e.iteration);
    csv.field(e.cardinality);
    csv.field(e.upper_total);
    csv.field(e.lower_total);
    csv.field(e.selected_state);
    csv.end_row();
  }
}

void write_snapshot_csv(std::ostream& os, const Snapshot& snap, const HeuristicPair& pair,
                        const std::optional<Vector>& p) {
  CsvWriter csv(os);
  csv.row({"state", "in_S", "g_upper", "g_lower", "h_upper", "h_lower", "p_optional"});
  for (Eigen::Index i = 0; i < snap.g_upper.size(); ++i) {
    csv.begin_row();
    csv.field(static_cast<int>(i));
    csv.field(snap.S.contains(i) ? 1 : 0);
    csv.field(snap.g_upper(i));
    csv.field(snap.g_lower(i));
    csv.field(pair.upper(i));
    csv.field(pair.lower(i));
    csv.field(p ? format_double((*p)(i)) : std::string());
    csv.end_row();
  }
}

}  // namespace posctl
