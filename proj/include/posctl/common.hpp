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

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace posctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance used for every sign and membership check.
inline constexpr double kTol = 1e-9;

/// Action index meaning "no actuation" for a block.
inline constexpr int kIdle = -1;

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kSingularE,
  kBadAction,
  kNoConvergence,
  kUnstablePolicy,
  kTooLarge,
  kInfeasible,
  kMissingInitialPolicy,
  kBetaUndefined,
  kNotSubstochastic,
  kZeroCostNonGoal,
  kInvalidSsp,
  kParse,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Subset of the state indices {0..n-1}.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::size_t n) : mask_(n, false) {}

  static StateSet all(std::size_t n) {
    StateSet s(n);
    s.mask_.assign(n, true);
    s.count_ = n;
    return s;
  }

  std::size_t universe() const { return mask_.size(); }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  bool full() const { return count_ == mask_.size(); }
  bool contains(std::size_t i) const { return mask_.at(i); }

  void insert(std::size_t i) {
    if (!mask_.at(i)) {
      mask_[i] = true;
      ++count_;
    }
  }

  std::vector<int> members() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < mask_.size(); ++i)
      if (mask_[i]) out.push_back(static_cast<int>(i));
    return out;
  }

  std::vector<int> complement() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < mask_.size(); ++i)
      if (!mask_[i]) out.push_back(static_cast<int>(i));
    return out;
  }

  bool operator==(const StateSet&) const = default;

 private:
  std::vector<bool> mask_;
  std::size_t count_ = 0;
};

}  // namespace posctl
