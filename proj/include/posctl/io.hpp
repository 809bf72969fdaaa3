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

#include "posctl/bellman.hpp"
#include "posctl/search.hpp"
#include "posctl/ssp.hpp"

#include <json.hpp>

#include <string>

namespace posctl {

using Json = nlohmann::ordered_json;

// Problem files: {n, partition, A, B, E, s, r, x0, k_hat?}. Matrices are
// row-major nested arrays; k_hat holds 0-based input indices with -1 = idle.
ProblemInstance problem_from_json(const Json& j);
Json problem_to_json(const ProblemInstance& instance);

// SSP files: {states, goal, initial?, actions: {state: [{label, cost,
// transition: {state: prob}}]}}.
SspInstance ssp_from_json(const Json& j);
Json ssp_to_json(const SspInstance& ssp);

Json policy_to_json(const Policy& policy);
Json vector_to_json(const Vector& v);
Json solve_result_to_json(const SolveResult& result, const Vector& x0);
Json validation_report_to_json(const ValidationReport& report);
Json scaling_report_to_json(const SkeletonSsp& skeleton, const ScalingReport& report);

/// Reads and parses a JSON file; throws kParse on I/O or syntax errors.
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
/// Writes the JSON with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);

/// True when the document looks like an SSP file rather than a problem file.
bool is_ssp_document(const Json& j);

/// Hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

}  // namespace posctl
