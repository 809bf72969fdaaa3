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

#include "posctl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace posctl {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSingularE: return "SingularE";
    case ErrorCode::kBadAction: return "BadAction";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kUnstablePolicy: return "UnstablePolicy";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kMissingInitialPolicy: return "MissingInitialPolicy";
    case ErrorCode::kBetaUndefined: return "BetaUndefined";
    case ErrorCode::kNotSubstochastic: return "NotSubstochastic";
    case ErrorCode::kZeroCostNonGoal: return "ZeroCostNonGoal";
    case ErrorCode::kInvalidSsp: return "InvalidSsp";
    case ErrorCode::kParse: return "ParseError";
  }
  return "Unknown";
}

int ProblemInstance::m() const {
  return std::accumulate(partition.begin(), partition.end(), 0);
}

int ProblemInstance::block_offset(int i) const {
  return std::accumulate(partition.begin(), partition.begin() + i, 0);
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return !c.mandatory || c.passed; });
}

const Check* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<std::string> dimension_errors(const ProblemInstance& inst) {
  std::vector<std::string> errs;
  const int n = inst.n();
  if (n <= 0) {
    errs.emplace_back("partition must have at least one entry");
    return errs;
  }
  for (int i = 0; i < n; ++i)
    if (inst.partition[i] < 0) errs.push_back("partition entry " + std::to_string(i) + " is negative");
  const int m = inst.m();
  auto shape = [&](const char* name, const Matrix& M, int rows, int cols) {
    if (M.rows() != rows || M.cols() != cols) {
      std::ostringstream os;
      os << name << " is " << M.rows() << "x" << M.cols() << ", expected " << rows << "x" << cols;
      errs.push_back(os.str());
    }
  };
  auto length = [&](const char* name, const Vector& v, int len) {
    if (v.size() != len) {
      std::ostringstream os;
      os << name << " has length " << v.size() << ", expected " << len;
      errs.push_back(os.str());
    }
  };
  shape("A", inst.A, n, n);
  shape("B", inst.B, n, m);
  shape("E", inst.E, n, n);
  length("s", inst.s, n);
  length("r", inst.r, m);
  length("x0", inst.x0, n);
  if (inst.k_hat && inst.k_hat->size() != n) errs.emplace_back("k_hat length differs from n");
  return errs;
}

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::string first_below(const Vector& v, double bound, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v(i) >= bound)) {
      std::ostringstream os;
      os << name << "[" << i << "] = " << v(i);
      return os.str();
    }
  return {};
}

bool valid_choice(const ProblemInstance& inst, int i, int c) {
  return c == kIdle || (c >= 0 && c < inst.partition[i]);
}

}  // namespace

ValidationReport validate(const ProblemInstance& inst) {
  ValidationReport rep;
  auto dims = dimension_errors(inst);
  {
    Check c{"dimensions", true, dims.empty(), ""};
    for (const auto& e : dims) c.detail += (c.detail.empty() ? "" : "; ") + e;
    rep.checks.push_back(c);
  }
  if (!dims.empty()) return rep;

  const bool finite = all_finite(inst.A) && all_finite(inst.B) && all_finite(inst.E) &&
                      inst.s.allFinite() && inst.r.allFinite() && inst.x0.allFinite();
  rep.checks.push_back({"finite", true, finite, finite ? "" : "non-finite entry"});

  auto d = first_below(inst.s, std::numeric_limits<double>::min(), "s");
  rep.checks.push_back({"s_positive", true, d.empty(), d});
  d = first_below(inst.r, 0.0, "r");
  rep.checks.push_back({"r_nonnegative", true, d.empty(), d});
  d = first_below(inst.x0, 0.0, "x0");
  rep.checks.push_back({"x0_nonnegative", true, d.empty(), d});
  const bool e_nonneg = (inst.E.array() >= 0.0).all();
  rep.checks.push_back({"E_nonnegative", true, e_nonneg, e_nonneg ? "" : "E has a negative entry"});

  const double cond = condition_number(inst.E);
  {
    std::ostringstream os;
    os << "condition number " << cond;
    rep.checks.push_back({"E_invertible", true, cond <= kMaxConditionE, os.str()});
  }

  const auto a1 = check_assumption1(inst);
  {
    std::ostringstream os;
    if (!a1.holds) os << "entry (" << a1.row << "," << a1.col << ") reaches " << a1.worst_value;
    rep.checks.push_back({"assumption1_positivity", true, a1.holds, os.str()});
  }
  const auto a2 = check_assumption2(inst);
  {
    std::ostringstream os;
    if (!a2.holds)
      os << "column " << a2.worst_column << " sum reaches " << a2.worst_column_sums(a2.worst_column);
    rep.checks.push_back({"assumption2_substochastic", false, a2.holds, os.str()});
  }

  if (inst.k_hat) {
    bool valid = true;
    for (int i = 0; i < inst.n(); ++i) valid = valid && valid_choice(inst, i, inst.k_hat->choice[i]);
    rep.checks.push_back({"k_hat_valid", true, valid, valid ? "" : "action out of range"});
    bool stable = false;
    if (valid) stable = is_schur_stable(expand_policy(inst, *inst.k_hat).dynamics);
    rep.checks.push_back({"k_hat_stable", true, stable, stable ? "" : "closed loop not Schur stable"});
  } else {
    rep.checks.push_back({"k_hat_present", false, false, "no initial stabilizing policy"});
  }
  return rep;
}

void require_valid(const ProblemInstance& inst) {
  auto dims = dimension_errors(inst);
  if (!dims.empty()) throw SolverError(ErrorCode::kDimensionMismatch, dims.front());
  const auto rep = validate(inst);
  for (const auto& c : rep.checks)
    if (c.mandatory && !c.passed)
      throw SolverError(c.name == "E_invertible" ? ErrorCode::kSingularE : ErrorCode::kInvalidArgument,
                        "check " + c.name + " failed: " + c.detail);
}

Assumption1Result check_assumption1(const ProblemInstance& inst) {
  const int n = inst.n();
  Assumption1Result res;
  res.witness = Policy::idle(n);
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      double value = inst.A(p, q);
      for (int i = 0; i < n; ++i) {
        double best = 0.0;
        for (int j = 0; j < inst.partition[i]; ++j)
          best = std::min(best, inst.input_column(i, j)(p) * inst.E(i, q));
        value += best;
      }
      if (value < worst) {
        worst = value;
        res.row = p;
        res.col = q;
      }
    }
  }
  res.worst_value = worst;
  res.holds = worst >= -kTol;
  for (int i = 0; i < n; ++i) {
    double best = 0.0;
    for (int j = 0; j < inst.partition[i]; ++j) {
      const double v = inst.input_column(i, j)(res.row) * inst.E(i, res.col);
      if (v < best) {
        best = v;
        res.witness.choice[i] = j;
      }
    }
  }
  return res;
}

Assumption2Result check_assumption2(const ProblemInstance& inst) {
  const int n = inst.n();
  Assumption2Result res;
  res.worst_column_sums = inst.A.colwise().sum().transpose();
  for (int i = 0; i < n; ++i) {
    double gain = 0.0;
    for (int j = 0; j < inst.partition[i]; ++j) gain = std::max(gain, inst.input_column(i, j).sum());
    res.worst_column_sums += gain * inst.E.row(i).transpose();
  }
  Eigen::Index arg = 0;
  const double top = n > 0 ? res.worst_column_sums.maxCoeff(&arg) : 0.0;
  res.worst_column = static_cast<int>(arg);
  res.holds = top <= 1.0 + kTol;
  return res;
}

double condition_number(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

bool is_identity(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

NormalizedInstance normalize_E(const ProblemInstance& inst) {
  if (!dimension_errors(inst).empty())
    throw SolverError(ErrorCode::kDimensionMismatch, "instance dimensions inconsistent");
  NormalizedInstance out{inst, {}};
  if (is_identity(inst.E)) return out;
  if (condition_number(inst.E) > kMaxConditionE)
    throw SolverError(ErrorCode::kSingularE, "E is numerically singular");
  Eigen::FullPivLU<Matrix> lu(inst.E);
  const Matrix e_inv = lu.inverse();
  auto& t = out.instance;
  t.A = inst.E * inst.A * e_inv;
  t.B = inst.E * inst.B;
  t.s = e_inv.transpose() * inst.s;
  t.x0 = inst.E * inst.x0;
  t.E = Matrix::Identity(inst.n(), inst.n());
  for (Eigen::Index i = 0; i < t.s.size(); ++i)
    if (!(t.s(i) > 0.0)) {
      std::ostringstream os;
      os << "NonPositiveTransformedCost: transformed s[" << i << "] = " << t.s(i);
      out.warnings.push_back(os.str());
    }
  return out;
}

void check_policy(const ProblemInstance& inst, const Policy& policy) {
  if (policy.size() != inst.n())
    throw SolverError(ErrorCode::kBadAction, "policy length differs from state count");
  for (int i = 0; i < inst.n(); ++i)
    if (!valid_choice(inst, i, policy.choice[i]))
      throw SolverError(ErrorCode::kBadAction, "invalid action " + std::to_string(policy.choice[i]) +
                                                   " for state " + std::to_string(i));
}

ClosedLoop expand_policy(const ProblemInstance& inst, const Policy& policy) {
  check_policy(inst, policy);
  const int n = inst.n();
  ClosedLoop cl;
  cl.K = Matrix::Zero(inst.m(), n);
  for (int i = 0; i < n; ++i) {
    const int c = policy.choice[i];
    if (c != kIdle) cl.K.row(inst.block_offset(i) + c) = inst.E.row(i);
  }
  cl.dynamics = inst.A + inst.B * cl.K;
  cl.stage_cost = inst.s + cl.K.transpose() * inst.r;
  return cl;
}

bool in_feedback_set(const ProblemInstance& inst, const Matrix& K, double tol) {
  if (K.rows() != inst.m() || K.cols() != inst.n()) return false;
  if ((K.array() < -tol).any()) return false;
  for (int i = 0; i < inst.n(); ++i) {
    const int size = inst.partition[i];
    const Vector sums = size == 0 ? Vector::Zero(inst.n())
                                  : Vector(K.middleRows(inst.block_offset(i), size).colwise().sum().transpose());
    const bool zero = sums.cwiseAbs().maxCoeff() <= tol;
    const bool full = size > 0 && (sums - inst.E.row(i).transpose()).cwiseAbs().maxCoeff() <= tol;
    if (!zero && !full) return false;
  }
  return true;
}

std::uint64_t policy_count(const ProblemInstance& inst) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (int size : inst.partition) {
    const auto f = static_cast<std::uint64_t>(size) + 1;
    if (total > kMax / f) return kMax;
    total *= f;
  }
  return total;
}

bool is_schur_stable(const Matrix& m) {
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  const Matrix gap = Matrix::Identity(m.rows(), m.cols()) - m.cwiseAbs();
  Eigen::FullPivLU<Matrix> lu(gap);
  if (!lu.isInvertible()) return false;
  const Vector y = lu.solve(Vector::Ones(m.rows()));
  return y.allFinite() && y.minCoeff() >= 1.0 - 1e-9;
}

}  // namespace posctl
