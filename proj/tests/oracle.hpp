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

// Reference computations for the tests. Nothing here calls into the solver
// paths it is used to check: stability comes from eigenvalues, costs from a
// dense LU solve, and policies are enumerated with a plain odometer.

#pragma once

#include "posctl/model.hpp"
#include "posctl/ssp.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using posctl::Matrix;
using posctl::ProblemInstance;
using posctl::Vector;

inline double spectral_radius(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Closed loop of the policy that sends block i to input choice[i] (-1 idle).
inline Matrix closed_loop(const ProblemInstance& p, const std::vector<int>& choice, Vector* cost) {
  const int n = static_cast<int>(p.partition.size());
  Matrix M = p.A;
  Vector c = p.s;
  int offset = 0;
  for (int i = 0; i < n; ++i) {
    if (choice[i] >= 0) {
      const int col = offset + choice[i];
      for (int q = 0; q < n; ++q) {
        M.col(q) += p.B.col(col) * p.E(i, q);
        c(q) += p.r(col) * p.E(i, q);
      }
    }
    offset += p.partition[i];
  }
  if (cost) *cost = c;
  return M;
}

// Cost vector of a fixed policy, or nullopt when the closed loop is not stable.
inline std::optional<Vector> policy_cost(const ProblemInstance& p, const std::vector<int>& choice) {
  Vector c;
  const Matrix M = closed_loop(p, choice, &c);
  if (spectral_radius(M) >= 1.0 - 1e-12) return std::nullopt;
  const Matrix lhs = Matrix::Identity(M.rows(), M.cols()) - M.transpose();
  return Vector(lhs.partialPivLu().solve(c));
}

// Elementwise minimum of the stable policy costs.
inline std::optional<Vector> optimal_cost(const ProblemInstance& p) {
  const int n = static_cast<int>(p.partition.size());
  std::vector<int> choice(n, -1);
  std::optional<Vector> best;
  while (true) {
    if (auto c = policy_cost(p, choice)) best = best ? Vector(best->cwiseMin(*c)) : *c;
    int i = 0;
    while (i < n) {
      if (++choice[i] < p.partition[i]) break;
      choice[i] = -1;
      ++i;
    }
    if (i == n) break;
  }
  return best;
}

// Expected cost of an SSP under optimal play, by enumerating deterministic
// stationary policies and solving each proper one exactly.
inline std::optional<Vector> ssp_optimal_cost(const posctl::SspInstance& ssp) {
  const int N = ssp.size();
  std::vector<int> live;
  for (int v = 0; v < N; ++v)
    if (!ssp.goal[v]) live.push_back(v);
  std::vector<int> pos(N, -1);
  for (int k = 0; k < static_cast<int>(live.size()); ++k) pos[live[k]] = k;
  const int L = static_cast<int>(live.size());
  std::vector<int> choice(L, 0);
  std::optional<Vector> best;
  while (true) {
    Matrix P = Matrix::Zero(L, L);
    Vector c(L);
    for (int k = 0; k < L; ++k) {
      const auto& a = ssp.actions[live[k]][choice[k]];
      c(k) = a.cost;
      for (const auto& [w, prob] : a.transition)
        if (pos[w] >= 0) P(k, pos[w]) += prob;
    }
    if (spectral_radius(P) < 1.0 - 1e-12) {
      Vector J = (Matrix::Identity(L, L) - P).partialPivLu().solve(c);
      Vector full = Vector::Zero(N);
      for (int k = 0; k < L; ++k) full(live[k]) = J(k);
      best = best ? Vector(best->cwiseMin(full)) : full;
    }
    int k = 0;
    while (k < L) {
      if (++choice[k] < static_cast<int>(ssp.actions[live[k]].size())) break;
      choice[k] = 0;
      ++k;
    }
    if (k == L) break;
  }
  return best;
}

}  // namespace oracle
