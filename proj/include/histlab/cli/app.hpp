#pragma once

// `histlab list` and `histlab run`: argument handling, file output and the
// exit-code contract (0 pass, 2 check failure, 1 input error).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "histlab/cli/runner.hpp"

namespace histlab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitCheck = 2;

struct RunArgs {
  std::string scenario;
  std::string out_dir = "histlab-out";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  unsigned threads = 1;
  std::string format = "text";
  std::optional<std::size_t> budget;
  std::vector<std::string> tasks;
  std::vector<std::string> params;
};

/// Reads a scenario file, or a built-in name when no such file exists.
inline Json scenario_document(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) {
    std::ifstream in(arg, std::ios::binary);
    if (!in) throw InputError(arg + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), arg);
  }
  for (const auto& s : list_scenarios()) {
    if (s.name == arg) return builtin_document(arg);
  }
  throw InputError(arg + ": no such file or built-in scenario");
}

/// Applies command-line overrides so that the echoed document reproduces the run.
inline void apply_overrides(Json& doc, const RunArgs& args) {
  if (!doc.is_object()) throw InputError("scenario: expected an object");
  if (args.seed) doc["sample"]["seed"] = *args.seed;
  if (args.tol) doc["tolerances"]["global"] = *args.tol;
  if (args.budget) doc["budget"] = *args.budget;
  if (!args.tasks.empty()) doc["tasks"] = args.tasks;
  for (const auto& kv : args.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--param expects key=value, got '" + kv + "'");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("--param " + kv + ": value is not a number");
    }
    doc["params"][kv.substr(0, eq)] = v;
  }
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError(p.string() + ": cannot write");
  out << content;
}

inline int run_command(const RunArgs& args, std::ostream& out, std::ostream& err) {
  RunResult result;
  try {
    Json doc = scenario_document(args.scenario);
    apply_overrides(doc, args);
    const Scenario sc = load_scenario(doc);
    result = run_scenario(sc, RunOptions{args.threads});
  } catch (const Error& e) {
    err << "histlab: " << e.what() << '\n';
    return kExitInput;
  } catch (const Json::exception& e) {
    err << "histlab: " << e.what() << '\n';
    return kExitInput;
  }
  try {
    namespace fs = std::filesystem;
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    write_file(dir / "report.json", result.report.dump(2) + "\n");
    write_file(dir / "summary.txt", result.summary);
    if (result.trajectories_csv) write_file(dir / "trajectories.csv", *result.trajectories_csv);
  } catch (const std::exception& e) {
    err << "histlab: " << e.what() << '\n';
    return kExitInput;
  }
  out << (args.format == "json" ? result.report.dump(2) + "\n" : result.summary);
  return result.passed ? kExitPass : kExitCheck;
}

inline int list_command(std::ostream& out) {
  for (const auto& s : list_scenarios()) out << s.name << "\t" << s.description << '\n';
  return kExitPass;
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  CLI::App app{"Finite history-space laboratory"};
  app.require_subcommand(1);
  auto* list = app.add_subcommand("list", "List built-in scenarios");
  auto* run = app.add_subcommand("run", "Run a scenario file or built-in scenario");
  RunArgs args;
  run->add_option("scenario", args.scenario, "Scenario JSON file or built-in name")->required();
  run->add_option("--out", args.out_dir, "Output directory");
  run->add_option("--seed", args.seed, "Sampler seed (overrides the scenario)");
  run->add_option("--tol", args.tol, "Global residual tolerance");
  run->add_option("--threads", args.threads, "Sampler threads")->check(CLI::PositiveNumber);
  run->add_option("--format", args.format, "Standard output format")
      ->check(CLI::IsMember({"json", "text"}));
  run->add_option("--budget", args.budget, "Maximum number of histories");
  run->add_option("--tasks", args.tasks, "Tasks to run")->delimiter(',');
  run->add_option("--param", args.params, "Built-in parameter key=value");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "histlab: " << e.what() << '\n';
    return kExitInput;
  }
  if (*list) return list_command(out);
  return run_command(args, out, err);
}

}  // namespace histlab::cli
