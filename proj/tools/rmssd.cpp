// Copyright 2026 The rmssd Authors.
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

// rmssd: run, search, compare and validate scenario configurations.
//
// Exit codes: 0 success, 1 internal error, 2 configuration error,
// 3 infeasible kernel search.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmssd/config.hpp"
#include "rmssd/kernel_search.hpp"
#include "rmssd/report.hpp"
#include "rmssd/sim.hpp"

namespace fs = std::filesystem;
using namespace rmssd;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct Options {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "text";
  bool quiet = false;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << content;
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void emit(const Options& o, const std::string& text) {
  if (!o.quiet) std::cout << text;
}

int cmd_run(const Options& o) {
  const Scenario sc = load_scenario(o.configs.at(0));
  const RunResult r = run(sc, o.seed.value_or(sc.workload.seed));
  const std::string metrics = metrics_to_json(r.metrics).dump(2) + "\n";
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o.out);
    write_file(dir / "metrics.json", metrics);
    write_file(dir / "traces.csv", traces_csv(r.traces));
    if (!r.schedule.empty()) write_file(dir / "schedule.csv", schedule_csv(r.schedule));
    if (r.search) write_file(dir / "search.json", search_outcome_to_json(*r.search).dump(2) + "\n");
  }
  if (o.format == "json") emit(o, metrics);
  else if (o.format == "csv") emit(o, traces_csv(r.traces));
  else emit(o, metrics_text(r.metrics));
  return 0;
}

int cmd_search(const Options& o) {
  const Scenario sc = load_scenario(o.configs.at(0));
  SearchProblem problem = sc.search_problem();
  if (o.seed) problem.profile.seed = *o.seed;
  const SearchOutcome outcome = search(problem);
  const std::string doc = search_outcome_to_json(outcome).dump(2) + "\n";
  if (!o.out.empty()) write_file(prepare_out(o.out) / "search.json", doc);
  emit(o, o.format == "text" ? search_outcome_text(outcome) : doc);
  if (!outcome.feasible) {
    std::cerr << "rmssd: kernel search infeasible: " << outcome.binding << "\n";
    return kExitInfeasible;
  }
  return 0;
}

int cmd_compare(const Options& o) {
  std::vector<Scenario> scenarios;
  std::vector<std::string> labels;
  for (const auto& path : o.configs) {
    scenarios.push_back(load_scenario(path));
    if (o.seed) scenarios.back().workload.seed = *o.seed;
    labels.push_back(fs::path(path).stem().string());
  }
  check_comparable(scenarios);
  std::vector<RunResult> results;
  for (const auto& s : scenarios) results.push_back(run(s));
  const Comparison c = compare(labels, results);
  const std::string doc = comparison_to_json(c).dump(2) + "\n";
  const std::string table = comparison_text(c);
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o.out);
    write_file(dir / "comparison.json", doc);
    write_file(dir / "comparison.txt", table);
    for (std::size_t i = 0; i < results.size(); ++i)
      write_file(dir / (labels[i] + ".metrics.json"), metrics_to_json(results[i].metrics).dump(2) + "\n");
  }
  emit(o, o.format == "json" ? doc : table);
  return 0;
}

int cmd_validate(const Options& o) {
  const Scenario sc = load_scenario(o.configs.at(0));
  emit(o, "valid: " + o.configs.at(0) + " (" + mode_name(sc.mode) + ", " + sc.model.name + ")\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rmssd: in-storage recommendation inference simulator and kernel-size search"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration as JSON and exit");

  Options opts;
  auto add_common = [&](CLI::App* sub, bool many) {
    if (many)
      sub->add_option("configs", opts.configs, "Config files; the first is the baseline")
          ->required()
          ->expected(2, -1);
    else
      sub->add_option("config", opts.configs, "Config file")->required()->expected(1);
    sub->add_option("--seed", opts.seed, "Workload seed override");
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_option("--format", opts.format, "Standard output format")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_flag("--quiet", opts.quiet, "Suppress standard output");
  };
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
  add_common(run_cmd, false);
  auto* search_cmd = app.add_subcommand("search", "Run the kernel-size search only");
  add_common(search_cmd, false);
  auto* compare_cmd = app.add_subcommand("compare", "Run scenarios and report ratios against the first");
  add_common(compare_cmd, true);
  auto* validate_cmd = app.add_subcommand("validate", "Check a config without simulating");
  add_common(validate_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (print_defaults) {
      std::cout << scenario_to_json(Scenario{}).dump(2) << "\n";
      return 0;
    }
    if (search_cmd->parsed()) {
      if (!search_cmd->count("--format")) opts.format = "json";
      return cmd_search(opts);
    }
    if (run_cmd->parsed()) return cmd_run(opts);
    if (compare_cmd->parsed()) return cmd_compare(opts);
    if (validate_cmd->parsed()) return cmd_validate(opts);
    std::cout << app.help();
    return 0;
  } catch (const InfeasibleError& e) {
    std::cerr << "rmssd: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "rmssd: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "rmssd: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "rmssd: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
