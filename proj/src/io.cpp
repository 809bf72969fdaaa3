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

#include "posctl/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace posctl {

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw SolverError(ErrorCode::kParse, msg); }

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_fail(std::string("missing key '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where + " is not a number");
  return j.get<double>();
}

Vector read_vector(const Json& j, const std::string& name) {
  if (!j.is_array()) parse_fail(name + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], name + "[" + std::to_string(i) + "]");
  return v;
}

// Any rectangular nested array; shape agreement is checked by validate().
Matrix read_matrix(const Json& j, const std::string& name, Eigen::Index expected_cols) {
  if (!j.is_array()) parse_fail(name + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = expected_cols;
  if (rows > 0) {
    if (!j[0].is_array()) parse_fail(name + " rows must be arrays");
    cols = static_cast<Eigen::Index>(j[0].size());
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      parse_fail(name + " is not rectangular at row " + std::to_string(r));
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = number(row[c], name + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json policy_to_json(const Policy& policy) {
  Json out = Json::array();
  for (int c : policy.choice) out.push_back(c);
  return out;
}

ProblemInstance problem_from_json(const Json& j) {
  ProblemInstance inst;
  const auto& part = need(j, "partition");
  if (!part.is_array()) parse_fail("partition must be an array");
  for (const auto& m_i : part) {
    if (!m_i.is_number_integer()) parse_fail("partition entries must be integers");
    inst.partition.push_back(m_i.get<int>());
  }
  const auto n = static_cast<Eigen::Index>(inst.partition.size());
  if (j.contains("n") && (!j["n"].is_number_integer() || j["n"].get<Eigen::Index>() != n))
    parse_fail("n does not match the partition length");
  for (int m_i : inst.partition)
    if (m_i < 0) parse_fail("partition entries must be nonnegative");
  const Eigen::Index m = inst.m();
  inst.A = read_matrix(need(j, "A"), "A", n);
  inst.B = read_matrix(need(j, "B"), "B", m);
  if (m == 0 && inst.B.rows() == 0) inst.B.resize(n, 0);
  inst.E = read_matrix(need(j, "E"), "E", n);
  inst.s = read_vector(need(j, "s"), "s");
  inst.r = read_vector(need(j, "r"), "r");
  inst.x0 = read_vector(need(j, "x0"), "x0");
  if (j.contains("k_hat") && !j["k_hat"].is_null()) {
    const auto& k = j["k_hat"];
    if (!k.is_array()) parse_fail("k_hat must be an array");
    Policy pol;
    for (const auto& c : k) {
      if (!c.is_number_integer()) parse_fail("k_hat entries must be integers");
      pol.choice.push_back(c.get<int>());
    }
    inst.k_hat = std::move(pol);
  }
  return inst;
}

Json problem_to_json(const ProblemInstance& inst) {
  Json j;
  j["n"] = inst.n();
  j["partition"] = inst.partition;
  j["A"] = matrix_to_json(inst.A);
  j["B"] = matrix_to_json(inst.B);
  j["E"] = matrix_to_json(inst.E);
  j["s"] = vector_to_json(inst.s);
  j["r"] = vector_to_json(inst.r);
  j["x0"] = vector_to_json(inst.x0);
  if (inst.k_hat) j["k_hat"] = policy_to_json(*inst.k_hat);
  return j;
}

bool is_ssp_document(const Json& j) { return j.is_object() && j.contains("states"); }

SspInstance ssp_from_json(const Json& j) {
  SspInstance ssp;
  const auto& states = need(j, "states");
  if (!states.is_array()) parse_fail("states must be an array");
  for (const auto& s : states) {
    if (!s.is_string()) parse_fail("state names must be strings");
    ssp.states.push_back(s.get<std::string>());
  }
  const int n = ssp.size();
  {
    auto sorted = ssp.states;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) parse_fail("duplicate state name");
  }
  auto lookup = [&](const Json& name) {
    if (!name.is_string()) parse_fail("state reference must be a string");
    const int idx = ssp.index_of(name.get<std::string>());
    if (idx < 0) parse_fail("unknown state '" + name.get<std::string>() + "'");
    return idx;
  };
  ssp.goal.assign(n, false);
  const auto& goal = need(j, "goal");
  if (!goal.is_array()) parse_fail("goal must be an array");
  for (const auto& g : goal) ssp.goal[lookup(g)] = true;
  ssp.initial = -1;
  if (j.contains("initial")) ssp.initial = lookup(j["initial"]);
  else
    for (int v = 0; v < n && ssp.initial < 0; ++v)
      if (!ssp.goal[v]) ssp.initial = v;
  if (ssp.initial < 0) ssp.initial = 0;

  ssp.actions.resize(n);
  const auto& actions = need(j, "actions");
  if (!actions.is_object()) parse_fail("actions must be an object keyed by state");
  for (auto it = actions.begin(); it != actions.end(); ++it) {
    const int v = lookup(Json(it.key()));
    if (!it.value().is_array()) parse_fail("actions of " + it.key() + " must be an array");
    for (const auto& rec : it.value()) {
      SspAction act;
      act.label = rec.contains("label") && rec["label"].is_string() ? rec["label"].get<std::string>() : "";
      act.cost = number(need(rec, "cost"), it.key() + " cost");
      const auto& tr = need(rec, "transition");
      if (!tr.is_object()) parse_fail("transition must be an object");
      for (auto t = tr.begin(); t != tr.end(); ++t)
        act.transition.emplace_back(lookup(Json(t.key())), number(t.value(), "probability"));
      std::sort(act.transition.begin(), act.transition.end());
      ssp.actions[v].push_back(std::move(act));
    }
  }
  require_valid_ssp(ssp, kTol);
  return ssp;
}

Json ssp_to_json(const SspInstance& ssp) {
  Json j;
  j["states"] = ssp.states;
  Json goal = Json::array();
  for (int v = 0; v < ssp.size(); ++v)
    if (ssp.goal[v]) goal.push_back(ssp.states[v]);
  j["goal"] = goal;
  j["initial"] = ssp.states.at(ssp.initial);
  Json actions = Json::object();
  for (int v = 0; v < ssp.size(); ++v) {
    Json list = Json::array();
    for (const auto& a : ssp.actions[v]) {
      Json rec;
      rec["label"] = a.label;
      rec["cost"] = a.cost;
      Json tr = Json::object();
      for (const auto& [w, t] : a.transition) tr[ssp.states[w]] = t;
      rec["transition"] = tr;
      list.push_back(rec);
    }
    actions[ssp.states[v]] = list;
  }
  j["actions"] = actions;
  return j;
}

Json solve_result_to_json(const SolveResult& res, const Vector& x0) {
  Json j;
  j["p"] = vector_to_json(res.p);
  j["policy"] = policy_to_json(res.policy);
  j["iterations"] = res.iterations;
  j["residual"] = res.residual;
  j["value"] = res.p.dot(x0);
  return j;
}

Json validation_report_to_json(const ValidationReport& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json item;
    item["name"] = c.name;
    item["mandatory"] = c.mandatory;
    item["passed"] = c.passed;
    item["detail"] = c.detail;
    checks.push_back(item);
  }
  Json j;
  j["ok"] = rep.ok();
  j["checks"] = checks;
  return j;
}

Json scaling_report_to_json(const SkeletonSsp& sk, const ScalingReport& rep) {
  Json j;
  j["levels"] = sk.levels;
  j["truncation_mass"] = sk.truncation_mass;
  j["level_mean_residual"] = sk.level_mean_residual;
  j["unit_mass_residual"] = sk.unit_mass_residual;
  j["checked_levels"] = rep.checked;
  j["max_relative_deviation"] = rep.max_relative_deviation;
  j["worst_state"] = rep.worst_state;
  j["worst_level"] = rep.worst_level;
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) parse_fail("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    parse_fail(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError(ErrorCode::kParse, "cannot write " + path);
  out << text;
}

void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

}  // namespace posctl
