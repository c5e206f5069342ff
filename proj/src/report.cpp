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

#include "rmssd/report.hpp"

#include <fmt/format.h>

#include "rmssd/config.hpp"

namespace rmssd {

using nlohmann::json;

namespace {

json resources_to_json(const Resources& r) {
  return {{"lut", r.lut}, {"ff", r.ff}, {"dsp", r.dsp}, {"bram_bytes", r.bram_bytes},
          {"dram_bytes", r.dram_bytes}};
}

}  // namespace

json metrics_to_json(const Metrics& m) {
  json j = {
      {"schema_version", Metrics::kSchemaVersion},
      {"mode", m.mode},
      {"model", m.model},
      {"seed", m.seed},
      {"batch", m.batch},
      {"queries", {{"issued", m.issued}, {"completed", m.completed}, {"in_flight", m.in_flight}}},
      {"horizon_ns", m.horizon_ns},
      {"throughput_qps", m.throughput_qps},
      {"latency_ns",
       {{"p50", m.latency.p50}, {"p95", m.latency.p95}, {"p99", m.latency.p99}, {"max", m.latency.max},
        {"mean", m.latency.mean}}},
      {"channel_utilization", m.channel_utilization},
      {"events", m.events},
      {"ev_requests", m.ev_requests},
      {"page_reads", m.page_reads},
      {"dram", {{"hits", m.dram_hits}, {"misses", m.dram_misses}, {"miss_rate", m.miss_rate},
                {"analytic_miss_rate", m.analytic_miss_rate}}},
      {"functional", {{"checked", m.functional_checked}, {"mismatches", m.functional_mismatches},
                      {"max_relative_error", m.max_relative_error}}},
  };
  j["kernels"] = m.kernels ? kernels_to_json(*m.kernels) : json(nullptr);
  j["resources"] = m.resources ? resources_to_json(*m.resources) : json(nullptr);
  return j;
}

std::string metrics_text(const Metrics& m) {
  std::string s = fmt::format("mode {}  model {}  seed {}  batch {}\n", m.mode, m.model, m.seed, m.batch);
  s += fmt::format("queries     issued {}  completed {}  in flight {}\n", m.issued, m.completed, m.in_flight);
  s += fmt::format("throughput  {:.1f} q/s over {} ns\n", m.throughput_qps, m.horizon_ns);
  s += fmt::format("latency ns  p50 {}  p95 {}  p99 {}  max {}\n", m.latency.p50, m.latency.p95,
                   m.latency.p99, m.latency.max);
  s += fmt::format("flash       page reads {}  events {}\n", m.page_reads, m.events);
  if (m.dram_hits + m.dram_misses > 0)
    s += fmt::format("dram        miss rate {:.4f} (analytic {:.4f})\n", m.miss_rate, m.analytic_miss_rate);
  if (m.functional_checked)
    s += fmt::format("functional  mismatches {}  max rel error {:.3g}\n", m.functional_mismatches,
                     m.max_relative_error);
  if (m.resources)
    s += fmt::format("resources   dsp {:.0f}  lut {:.0f}  ff {:.0f}  bram {} B\n", m.resources->dsp,
                     m.resources->lut, m.resources->ff, m.resources->bram_bytes);
  return s;
}

json search_outcome_to_json(const SearchOutcome& o) {
  return {
      {"schema_version", Metrics::kSchemaVersion},
      {"feasible", o.feasible},
      {"batch", o.batch},
      {"assignment", kernels_to_json(o.assignment)},
      {"objective", o.objective},
      {"times_ns", {{"t_bot", o.times.t_bot}, {"t_top", o.times.t_top}, {"t_emb", o.times.t_emb}}},
      {"slack_ns", {{"bottom", o.slack_bot}, {"top", o.slack_top}}},
      {"resources", resources_to_json(o.resources)},
      {"binding", o.binding},
      {"evaluations", o.evaluations},
  };
}

std::string search_outcome_text(const SearchOutcome& o) {
  std::string s = fmt::format("{} at batch {}  objective {}\n", o.feasible ? "feasible" : "INFEASIBLE",
                              o.batch, o.objective);
  s += fmt::format("T_bot {} ns  T_top {} ns  T_emb {} ns\n", o.times.t_bot, o.times.t_top, o.times.t_emb);
  s += fmt::format("dsp {:.0f}  lut {:.0f}  ff {:.0f}  bram {} B  dram {} B\n", o.resources.dsp,
                   o.resources.lut, o.resources.ff, o.resources.bram_bytes, o.resources.dram_bytes);
  s += "kernels " + kernels_to_json(o.assignment).dump() + "\n";
  if (!o.binding.empty()) s += "binding: " + o.binding + "\n";
  return s;
}

json comparison_to_json(const Comparison& c) {
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"label", r.label}, {"mode", r.mode}, {"throughput_qps", r.throughput_qps},
                    {"p50_ns", r.p50}, {"p99_ns", r.p99}, {"throughput_ratio", r.throughput_ratio},
                    {"p50_reduction_pct", r.p50_reduction_pct},
                    {"p99_reduction_pct", r.p99_reduction_pct}});
  return {{"schema_version", Metrics::kSchemaVersion}, {"baseline", c.rows.at(0).label}, {"rows", rows}};
}

std::string comparison_text(const Comparison& c) {
  std::size_t w = 5;
  for (const auto& r : c.rows) w = std::max(w, r.label.size());
  std::string s = fmt::format("{:<{}}  {:<13}  {:>12}  {:>12}  {:>12}  {:>9}  {:>9}\n", "label", w, "mode",
                              "q/s", "p50 ns", "p99 ns", "thr x", "p99 -%");
  for (const auto& r : c.rows)
    s += fmt::format("{:<{}}  {:<13}  {:>12.1f}  {:>12}  {:>12}  {:>9.2f}  {:>9.1f}\n", r.label, w, r.mode,
                     r.throughput_qps, r.p50, r.p99, r.throughput_ratio, r.p99_reduction_pct);
  return s;
}

std::string traces_csv(const std::vector<TraceRow>& rows) {
  std::string s = "query_id,stage,start_ns,end_ns\n";
  for (const auto& r : rows) s += fmt::format("{},{},{},{}\n", r.query_id, r.stage, r.start, r.end);
  return s;
}

std::string schedule_csv(const std::vector<ScheduleRow>& rows) {
  std::string s = "layer,output_group,start_ns,end_ns\n";
  for (const auto& r : rows) s += fmt::format("{},{},{},{}\n", r.layer, r.output_group, r.start, r.end);
  return s;
}

}  // namespace rmssd
