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

// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Criterion 7 reruns 1-6 and compares their JSON reports.

#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "rmssd/config.hpp"
#include "rmssd/report.hpp"

namespace rmssd {
namespace {

using nlohmann::json;

struct Verdict {
  bool pass = false;
  std::string detail;
  json report;  // deterministic content only; compared by criterion 7
};

double relative_error(float got, float ref) {
  const double denom = std::max(std::fabs(static_cast<double>(ref)), 1e-30);
  return std::fabs(static_cast<double>(got) - ref) / denom;
}

Verdict functional_equivalence() {
  Verdict v;
  v.pass = true;
  std::uint64_t checked = 0;
  for (const auto& name : preset_names()) {
    for (Mode mode : {Mode::RmSsd, Mode::EmbVectorSum, Mode::SsdS}) {
      Scenario s;
      s.mode = mode;
      s.model = preset_model(name);
      s.workload.count = 1000;
      s.workload.seed = 1;
      s.record_traces = false;
      const RecModel model = build_model(s.model, s.weight_seed);
      const RunResult r = run(s, 1, model);
      const auto queries = generate_workload(s.model, s.workload);
      std::uint64_t mismatches = 0;
      double max_rel = 0;
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const float ref = name == "rmc3-mini" ? oracle::rmc3_straight_line(model, queries[q])
                                              : reference_inference(model, queries[q]);
        mismatches += std::bit_cast<std::uint32_t>(ref) != std::bit_cast<std::uint32_t>(r.scores.at(q));
        max_rel = std::max(max_rel, relative_error(r.scores[q], ref));
      }
      checked += queries.size();
      const bool ok = r.scores.size() == 1000 &&
                      (mode == Mode::RmSsd ? mismatches == 0 : max_rel <= 1e-5);
      v.pass = v.pass && ok;
      v.report[name][mode_name(mode)] = {{"mismatches", mismatches}, {"max_relative_error", max_rel}};
    }
  }
  v.detail = fmt::format("{} scores over 3 models x 3 modes", checked);
  return v;
}

Verdict search_optimality() {
  Verdict v;
  v.pass = true;
  Rng rng(2026);
  int instances = 0, feasible = 0, binding = 0;
  while (instances < 40) {
    // Small models: at most four layers per chain, sizes {1, 2, 4, 8}.
    SearchProblem p;
    ModelSpec& m = p.model;
    m.name = fmt::format("small{}", instances);
    m.dense_dim = 1 + static_cast<std::uint32_t>(rng.below(32));
    m.bottom_mlp_dims = {m.dense_dim};
    for (std::uint64_t l = 0, n = 1 + rng.below(2); l < n; ++l)
      m.bottom_mlp_dims.push_back(1 + static_cast<std::uint32_t>(rng.below(32)));
    m.tables.assign(1 + rng.below(3), TableSpec{200 + rng.below(800), 1u << rng.below(4)});
    m.top_mlp_dims = {m.bottom_output_width() + m.embedding_width()};
    for (std::uint64_t l = 0, n = rng.below(3); l < n; ++l)
      m.top_mlp_dims.push_back(1 + static_cast<std::uint32_t>(rng.below(32)));
    m.top_mlp_dims.push_back(1);
    if (m.top_mlp_dims.size() < 3) continue;  // the search needs a first top layer to split
    p.space.kernel_sizes = {1, 2, 4, 8};
    p.space.max_batch = 8;
    p.profile.pooling = 1 + static_cast<std::uint32_t>(rng.below(4));
    p.profile.seed = rng.next();
    // Fast flash so that the MLP chains, not the lookup, tend to bind.
    p.timing.page_read_us = 0.05 * static_cast<double>(1 + rng.below(20));
    p.timing.channel_transfer_ns_per_byte = 0.01 * static_cast<double>(1 + rng.below(10));
    const EmbTimeFn emb = simulated_emb_time(p);
    const SearchOutcome got = search(p, emb);
    const auto want = oracle::enumerate_search(p, emb);
    bool ok = got.feasible == want.feasible;
    if (ok && got.feasible) {
      ++feasible;
      binding += got.batch > 1 || got.objective > min_assignment(p.model, p.space).objective();
      const ConstraintReport r = verify_constraints(p, got, emb);
      ok = got.objective == want.objective && got.batch == want.batch && r.ok() && r.slack_bot >= 0 &&
           r.slack_top >= 0;
    }
    v.pass = v.pass && ok;
    v.report.push_back({{"feasible", got.feasible},
                        {"objective", got.objective},
                        {"oracle_objective", want.objective},
                        {"batch", got.batch},
                        {"slack_ns", {got.slack_bot, got.slack_top}}});
    ++instances;
  }
  v.pass = v.pass && feasible >= 20;
  v.detail = fmt::format("{} instances, {} feasible, {} with binding constraints, all matched: {}", instances,
                         feasible, binding, v.pass);
  return v;
}

Verdict halving() {
  const std::vector<FcLayerSpec> layers = alternate_scans(std::vector<FcLayerSpec>(8, FcLayerSpec{64, 64}));
  const std::vector<Kernel> ks(8, Kernel{1, 1});
  const auto alt = pipeline_schedule(layers, ks, 1, {}, false).makespan;
  const auto conv = conventional_makespan(layers, ks, 1);
  const double ratio = static_cast<double>(alt) / static_cast<double>(conv);
  Verdict v;
  v.pass = ratio >= 0.50 && ratio <= 0.55;
  v.detail = fmt::format("alternating {} / conventional {} cycles = {:.4f}", alt, conv, ratio);
  v.report = {{"alternating_cycles", alt}, {"conventional_cycles", conv}, {"ratio", ratio}};
  return v;
}

struct DeskRun {
  Scenario scenario;
  Metrics metrics;
};

// One shipped config, run under its own seed.
DeskRun desk_run(const char* name) {
  DeskRun d;
  d.scenario = load_scenario(std::filesystem::path(RMSSD_CONFIG_DIR) / name);
  d.scenario.record_traces = false;
  d.scenario.functional_check = false;
  d.metrics = run(d.scenario).metrics;
  return d;
}

bool desk_workload(const DeskRun& d) {
  return d.scenario.workload.count == 10000 && d.scenario.workload.distribution == IndexDistribution::Uniform &&
         d.metrics.completed == 10000;
}

Verdict throughput_trend() {
  const DeskRun dev = desk_run("rmssd.json"), base = desk_run("ssd_s.json");
  const Metrics& r = dev.metrics;
  const Metrics& b = base.metrics;
  const double ratio = r.throughput_qps / b.throughput_qps;
  const double p99_cut = 100.0 * (1.0 - static_cast<double>(r.latency.p99) / static_cast<double>(b.latency.p99));
  Verdict v;
  v.pass = base.scenario.dram_fraction == 0.25 && desk_workload(dev) && desk_workload(base) && ratio >= 10.0 &&
           p99_cut >= 80.0;
  v.detail = fmt::format("RM-SSD {:.1f} q/s vs SSD-S {:.1f} q/s = {:.2f}x, p99 {} ns vs {} ns = {:.1f}% lower",
                         r.throughput_qps, b.throughput_qps, ratio, r.latency.p99, b.latency.p99, p99_cut);
  v.report = {{"rmssd", metrics_to_json(r)}, {"ssd_s", metrics_to_json(b)}};
  return v;
}

Verdict ev_engine_trend() {
  const DeskRun dev = desk_run("emb_vectorsum.json"), base = desk_run("ssd_s.json");
  const double ratio = dev.metrics.throughput_qps / base.metrics.throughput_qps;
  Verdict v;
  v.pass = base.scenario.dram_fraction == 0.25 && desk_workload(dev) && desk_workload(base) && ratio >= 5.0;
  v.detail = fmt::format("EMB-VectorSum {:.1f} q/s vs SSD-S {:.1f} q/s = {:.2f}x", dev.metrics.throughput_qps,
                         base.metrics.throughput_qps, ratio);
  v.report = {{"emb_vectorsum", metrics_to_json(dev.metrics)}, {"ssd_s", metrics_to_json(base.metrics)}};
  return v;
}

Verdict resource_reduction() {
  SearchProblem p = Scenario{}.search_problem();
  const SearchOutcome o = search(p);
  const Resources full = resource_usage(p.model, max_assignment(p.model, p.space), p.resources);
  const double cut = 100.0 * (1.0 - o.resources.dsp / full.dsp);
  Verdict v;
  v.pass = o.feasible && verify_constraints(p, o).ok() && cut >= 25.0;
  v.detail = fmt::format("{} DSPs vs {} for maximal kernels = {:.1f}% fewer, feasible at batch {}",
                         o.resources.dsp, full.dsp, cut, o.batch);
  v.report = {{"search", search_outcome_to_json(o)}, {"maximal_dsp", full.dsp}, {"reduction_pct", cut}};
  return v;
}

Verdict properties() {
  Verdict v;
  v.pass = true;
  std::vector<std::string> failed;
  for (const auto& p : props::all_properties()) {
    const props::PropertyResult r = p.run(8, props::kDefaultCases);
    const bool ok = r.ok() && r.cases >= 1000;
    if (!ok) failed.push_back(r.name + " (" + r.first_failure + ")");
    v.pass = v.pass && ok;
    v.report[r.name] = {{"cases", r.cases}, {"failures", r.failures}};
  }
  v.detail = failed.empty() ? fmt::format("{} properties x {} cases", props::all_properties().size(),
                                          props::kDefaultCases)
                            : "failed: " + fmt::format("{}", fmt::join(failed, "; "));
  return v;
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Verdict()> check;
};

}  // namespace
}  // namespace rmssd

int main(int argc, char** argv) {
  using namespace rmssd;
  using Clock = std::chrono::steady_clock;
  std::filesystem::path out;
  if (argc == 3 && std::string(argv[1]) == "--out") out = argv[2];

  const std::vector<Criterion> criteria = {
      {1, "functional oracle equivalence", 30, functional_equivalence},
      {2, "kernel-search optimality", 30, search_optimality},
      {3, "halving property", 5, halving},
      {4, "RM-SSD vs SSD-S throughput and p99", 60, throughput_trend},
      {5, "EMB-VectorSum vs SSD-S throughput", 60, ev_engine_trend},
      {6, "DSP reduction vs maximal kernels", 10, resource_reduction},
  };

  bool all = true;
  json first_pass;
  const auto line = [&](int id, const std::string& name, bool pass, double secs, double limit,
                        const std::string& detail) {
    const std::string timing =
        limit > 0 ? fmt::format("{:.2f} s, limit {:.0f} s", secs, limit) : fmt::format("{:.2f} s", secs);
    std::cout << fmt::format("criterion {}: {} [{}] {} ({})", id, pass ? "PASS" : "FAIL", name, detail, timing)
              << std::endl;
    all = all && pass;
  };
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    line(c.id, c.name, v.pass && secs < c.limit_s, secs, c.limit_s, v.detail);
    first_pass[std::to_string(c.id)] = v.report;
  }

  {
    const auto t0 = Clock::now();
    std::string detail = "reports of criteria 1-6 byte-identical on rerun";
    bool pass = true;
    try {
      for (const auto& c : criteria) {
        const std::string key = std::to_string(c.id);
        if (c.check().report.dump() != first_pass[key].dump()) {
          pass = false;
          detail = "report of criterion " + key + " differs on rerun";
        }
      }
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    line(7, "determinism", pass, secs, 0, detail);
  }

  {
    const auto t0 = Clock::now();
    Verdict v = properties();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    line(8, "property suites", v.pass && secs < 120, secs, 120, v.detail);
    first_pass["8"] = v.report;
  }

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream(out / "acceptance.json") << first_pass.dump(2) << "\n";
  }
  std::cout << (all ? "acceptance: all criteria PASS" : "acceptance: FAIL") << std::endl;
  return all ? 0 : 1;
}
