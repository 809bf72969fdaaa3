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

#include "posctl/cli.hpp"

#include "posctl/gen.hpp"
#include "posctl/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace posctl {

namespace {

struct Options {
  std::string input;
  std::string out;
  std::string record;
  double tol = 0.0;
  std::string method = "vi";
  std::uint64_t cap = kDefaultEnumerationCap;
  double gamma = 1.0;
  std::string trace;
  std::string snapshots;
  bool fix_actions = false;
  bool oracle = false;
  std::string to;
  int skeleton = 0;
  std::string report;
  std::string preset;
  std::uint64_t seed = 0;
  int n = 0;
  double density = 0.3;
  int min_actions = 2;
  int max_actions = 2;
  bool identity_e = false;
  bool unstable = false;
  bool disposal = false;
};

double default_tolerance() {
  if (const char* env = std::getenv("POSCTL_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return ViOptions{}.tol;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return kExitUsage;
    case ErrorCode::kNoConvergence: return kExitNoConvergence;
    case ErrorCode::kMissingInitialPolicy: return kExitMissingPolicy;
    case ErrorCode::kNotSubstochastic: return kExitNotSubstochastic;
    default: return kExitValidation;
  }
}

void emit(const Options& o, std::ostream& out, const Json& j, std::vector<std::string>& outputs) {
  if (o.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_json_file(o.out, j);
    outputs.push_back(o.out);
  }
}

ProblemInstance load_valid_problem(const Options& o, std::ostream& err) {
  const auto inst = problem_from_json(read_json_file(o.input));
  const auto rep = validate(inst);
  if (!rep.ok()) {
    for (const auto& c : rep.checks)
      if (c.mandatory && !c.passed) err << "validation failed: " << c.name << " " << c.detail << '\n';
    throw SolverError(ErrorCode::kInvalidArgument, "instance failed validation");
  }
  return inst;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream&, std::vector<std::string>& outputs) {
  const auto inst = problem_from_json(read_json_file(o.input));
  const auto rep = validate(inst);
  emit(o, out, validation_report_to_json(rep), outputs);
  return rep.ok() ? kExitOk : kExitValidation;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err, std::vector<std::string>& outputs) {
  const auto inst = load_valid_problem(o, err);
  SolveResult res;
  if (o.method == "oracle") {
    res = brute_force_solve(inst, o.cap);
  } else {
    ViOptions vi;
    vi.tol = o.tol;
    try {
      res = value_iterate(inst, Vector::Zero(inst.n()), vi);
    } catch (const SolverError& e) {
      if (e.code() == ErrorCode::kNoConvergence)
        err << "no finite solution of the Bellman equation: the problem value is infinite or the iteration "
               "budget is too small\n";
      throw;
    }
  }
  Json j = solve_result_to_json(res, inst.x0);
  j["method"] = o.method;
  j["lp_certified"] = check_lp_form(inst, res.p, std::max(kTol, 10.0 * o.tol));
  emit(o, out, j, outputs);
  return kExitOk;
}

int cmd_search(const Options& o, std::ostream& out, std::ostream& err, std::vector<std::string>& outputs) {
  const auto inst = load_valid_problem(o, err);
  if (!inst.k_hat) throw SolverError(ErrorCode::kMissingInitialPolicy, "search needs k_hat in the problem file");
  SearchOptions so;
  so.gamma = o.gamma;
  so.fix_actions = o.fix_actions;
  so.record_snapshots = !o.snapshots.empty();
  so.vi.tol = o.tol;
  const auto st = run_search(inst, so);

  std::optional<Vector> p;
  if (o.oracle) p = value_iterate(inst, Vector::Zero(inst.n()), so.vi).p;

  if (!o.trace.empty()) {
    std::ostringstream os;
    write_trace_csv(os, st);
    write_text_file(o.trace, os.str());
    outputs.push_back(o.trace);
  }
  if (!o.snapshots.empty()) {
    std::filesystem::create_directories(o.snapshots);
    for (const auto& snap : st.snapshots) {
      std::ostringstream os;
      write_snapshot_csv(os, snap, st.heuristics, p);
      const auto path = (std::filesystem::path(o.snapshots) / ("snapshot_" + std::to_string(snap.iteration) + ".csv")).string();
      write_text_file(path, os.str());
      outputs.push_back(path);
    }
  }

  Json j;
  j["gamma"] = o.gamma;
  j["iterations"] = st.iteration;
  j["cardinality_S"] = st.S.size();
  j["S"] = st.S.members();
  const double up = st.upper_total(inst.x0);
  const double low = st.lower_total(inst.x0);
  j["upper_total"] = up;
  j["lower_total"] = low;
  j["ratio"] = up / low;
  j["g_upper"] = vector_to_json(st.g_upper);
  j["g_lower"] = vector_to_json(st.g_lower);
  j["policy_upper"] = policy_to_json(st.policy_upper);
  if (p) j["optimal_total"] = p->dot(inst.x0);
  if (o.fix_actions) {
    Json fixed = Json::array();
    for (const auto& f : st.fixed) fixed.push_back(f ? Json(*f) : Json(nullptr));
    j["fixed_actions"] = fixed;
  }
  emit(o, out, j, outputs);
  return kExitOk;
}

int cmd_convert(const Options& o, std::ostream& out, std::ostream& err, std::vector<std::string>& outputs) {
  const Json doc = read_json_file(o.input);
  if (is_ssp_document(doc)) {
    if (o.to != "control") throw SolverError(ErrorCode::kParse, "an SSP file converts only with --to control");
    const auto conv = from_ssp(ssp_from_json(doc));
    emit(o, out, problem_to_json(conv.instance), outputs);
    return kExitOk;
  }
  if (o.to != "ssp") throw SolverError(ErrorCode::kParse, "a problem file converts only with --to ssp");
  const auto raw = load_valid_problem(o, err);
  const auto norm = normalize_E(raw);
  for (const auto& w : norm.warnings) err << "warning: " << w << '\n';
  if (o.skeleton > 0) {
    const auto sk = expand_skeleton(norm.instance, o.skeleton);
    ViOptions vi;
    vi.tol = o.tol;
    const auto rep = check_prop2_scaling(sk, vi);
    const Json report = scaling_report_to_json(sk, rep);
    if (!o.report.empty()) {
      write_json_file(o.report, report);
      outputs.push_back(o.report);
    } else {
      err << report.dump() << '\n';
    }
    emit(o, out, ssp_to_json(sk.ssp), outputs);
    return kExitOk;
  }
  try {
    emit(o, out, ssp_to_json(to_ssp(norm.instance).ssp), outputs);
  } catch (const SolverError& e) {
    if (e.code() == ErrorCode::kNotSubstochastic) err << "hint: rerun with --skeleton K_max\n";
    throw;
  }
  return kExitOk;
}

int cmd_gen(const Options& o, std::ostream& out, std::ostream&, std::vector<std::string>& outputs) {
  ProblemInstance inst;
  if (o.preset == "example1" || o.preset == "example2") {
    inst = example_network(o.preset == "example1" ? 0.6 : 0.8);
  } else if (o.preset == "chemical") {
    if ((o.n != 0 && o.n != 25) || o.identity_e || o.unstable)
      throw SolverError(ErrorCode::kParse, "the chemical preset fixes n = 25, E = A and a stable open loop");
    inst = chemical_plant(o.seed);
  } else {
    GenConfig cfg;
    cfg.n = o.n == 0 ? 4 : o.n;
    cfg.seed = o.seed;
    cfg.density = o.density;
    cfg.min_actions = o.min_actions;
    cfg.max_actions = o.max_actions;
    cfg.constraint = o.identity_e ? ConstraintKind::kIdentity : ConstraintKind::kDynamics;
    cfg.stable_open_loop = !o.unstable;
    cfg.disposal_first = o.disposal;
    try {
      inst = random_instance(cfg);
    } catch (const SolverError& e) {
      throw SolverError(ErrorCode::kParse, e.what());
    }
  }
  emit(o, out, problem_to_json(inst), outputs);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  o.tol = default_tolerance();
  CLI::App app{"Optimal control of positive linear systems with linear costs"};
  app.require_subcommand(1);
  app.add_option("--record", o.record, "Write a run record JSON to this path");

  auto* validate_cmd = app.add_subcommand("validate", "Check a problem file");
  validate_cmd->add_option("path", o.input, "Problem JSON")->required();
  validate_cmd->add_option("--out", o.out, "Write the report here instead of standard output");

  auto* solve_cmd = app.add_subcommand("solve", "Solve for the optimal cost vector");
  solve_cmd->add_option("path", o.input, "Problem JSON")->required();
  solve_cmd->add_option("--tol", o.tol, "Value iteration tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--method", o.method, "vi or oracle")->check(CLI::IsMember({"vi", "oracle"}));
  solve_cmd->add_option("--cap", o.cap, "Enumeration cap for the oracle");
  solve_cmd->add_option("--out", o.out, "Output path");

  auto* search_cmd = app.add_subcommand("search", "Run the heuristic search from x0");
  search_cmd->add_option("path", o.input, "Problem JSON with k_hat")->required();
  search_cmd->add_option("--gamma", o.gamma, "Stop once upper/lower <= gamma")->check(CLI::Range(1.0, 1e300));
  search_cmd->add_option("--trace", o.trace, "Iteration trace CSV");
  search_cmd->add_option("--snapshots", o.snapshots, "Directory for per-iteration state CSVs");
  search_cmd->add_flag("--fix-actions", o.fix_actions, "Lock actions certified optimal within the bounds");
  search_cmd->add_flag("--oracle", o.oracle, "Also solve globally and report the optimal cost");
  search_cmd->add_option("--tol", o.tol, "Local value iteration tolerance")->check(CLI::PositiveNumber);
  search_cmd->add_option("--out", o.out, "Output path");

  auto* convert_cmd = app.add_subcommand("convert", "Convert between problem and SSP files");
  convert_cmd->add_option("path", o.input, "Problem or SSP JSON")->required();
  convert_cmd->add_option("--to", o.to, "ssp or control")->required()->check(CLI::IsMember({"ssp", "control"}));
  convert_cmd->add_option("--skeleton", o.skeleton, "Expand onto this many levels")->check(CLI::PositiveNumber);
  convert_cmd->add_option("--report", o.report, "Skeleton scaling report JSON");
  convert_cmd->add_option("--tol", o.tol, "Value iteration tolerance")->check(CLI::PositiveNumber);
  convert_cmd->add_option("--out", o.out, "Output path");

  auto* gen_cmd = app.add_subcommand("gen", "Generate an instance");
  gen_cmd->add_option("--preset", o.preset, "chemical, random, example1 or example2")
      ->required()
      ->check(CLI::IsMember({"chemical", "random", "example1", "example2"}));
  gen_cmd->add_option("--seed", o.seed, "Random seed");
  gen_cmd->add_option("--n", o.n, "State count (random preset)");
  gen_cmd->add_option("--density", o.density, "Off-diagonal density");
  gen_cmd->add_option("--min-actions", o.min_actions, "Smallest m_i");
  gen_cmd->add_option("--max-actions", o.max_actions, "Largest m_i");
  gen_cmd->add_flag("--identity-e", o.identity_e, "Use E = I instead of E = A");
  gen_cmd->add_flag("--unstable", o.unstable, "Let one open-loop column sum exceed one");
  gen_cmd->add_flag("--disposal", o.disposal, "Make the first input of every state a disposal");
  gen_cmd->add_option("--out", o.out, "Output path");

  std::vector<std::string> argv_store{"posctl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  std::string command;
  int code = kExitOk;
  try {
    if (*validate_cmd) command = "validate", code = cmd_validate(o, out, err, outputs);
    else if (*solve_cmd) command = "solve", code = cmd_solve(o, out, err, outputs);
    else if (*search_cmd) command = "search", code = cmd_search(o, out, err, outputs);
    else if (*convert_cmd) command = "convert", code = cmd_convert(o, out, err, outputs);
    else if (*gen_cmd) command = "gen", code = cmd_gen(o, out, err, outputs);
  } catch (const SolverError& e) {
    err << to_string(e.code()) << ": " << e.what() << '\n';
    code = exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitValidation;
  }

  if (!o.record.empty()) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json rec;
    rec["command"] = command;
    rec["input"] = o.input;
    std::string digest;
    if (!o.input.empty()) {
      try {
        digest = sha256_hex(read_text_file(o.input));
      } catch (const SolverError&) {
      }
    }
    rec["input_sha256"] = digest;
    rec["parameters"] = args;
    rec["outputs"] = outputs;
    rec["exit_code"] = code;
    rec["wall_time_seconds"] = wall;
    write_json_file(o.record, rec);
  }
  return code;
}

}  // namespace posctl
