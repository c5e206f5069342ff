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

// Scenario runner for the three system configurations.
//
// RmSsd: embedding lookup and the decomposed bottom MLP run in the device,
// the top MLP follows once both finish. EmbVectorSum: the device returns
// pooled vectors and the host runs both MLPs. SsdS: the host serves lookups
// from a static DRAM resident set and reads misses through block I/O.
//
// Device modes are closed loop with one batch in the lookup engine at a
// time: batch k is submitted when batch k-1 leaves the lookup engine.
// Latency is measured from submission to result delivery.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmssd/ev_engine.hpp"
#include "rmssd/kernel_search.hpp"
#include "rmssd/recmodel.hpp"
#include "rmssd/storage.hpp"
#include "rmssd/workload.hpp"

namespace rmssd {

enum class Mode { RmSsd, EmbVectorSum, SsdS };

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

struct Scenario {
  Mode mode = Mode::RmSsd;
  double dram_fraction = 0.25;  // SsdS only
  ModelSpec model = preset_model("rmc3-mini");
  std::uint64_t weight_seed = 1;
  std::vector<std::string> table_files;  // optional, one per table
  SsdGeometry geometry;
  TimingParams timing;
  std::optional<KernelAssignment> kernels;  // nullopt: kernel search
  std::uint32_t batch = 1;                  // used with explicit kernels
  WorkloadParams workload;
  Nanos horizon_ns = 0;  // 0: run every query to completion
  ResourceModel resources;
  SearchSpace search;
  std::uint32_t extents_per_table = 1;
  bool functional_check = true;
  bool record_traces = true;

  void validate() const;
  SearchProblem search_problem() const;
};

struct LatencySummary {
  Nanos p50 = 0;
  Nanos p95 = 0;
  Nanos p99 = 0;
  Nanos max = 0;
  double mean = 0;
};

// Nearest-rank percentiles; all zero for an empty sample.
LatencySummary summarize_latencies(std::vector<Nanos> latencies);

struct Metrics {
  static constexpr int kSchemaVersion = 1;
  std::string mode;
  std::string model;
  std::uint64_t seed = 0;
  std::uint32_t batch = 0;
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t in_flight = 0;
  Nanos horizon_ns = 0;
  double throughput_qps = 0;
  LatencySummary latency;
  std::vector<double> channel_utilization;
  std::uint64_t events = 0;
  std::uint64_t ev_requests = 0;
  std::uint64_t page_reads = 0;
  std::uint64_t dram_hits = 0;
  std::uint64_t dram_misses = 0;
  double miss_rate = 0;
  double analytic_miss_rate = 0;
  bool functional_checked = false;
  std::uint64_t functional_mismatches = 0;  // scores not bit-identical
  double max_relative_error = 0;
  std::optional<KernelAssignment> kernels;
  std::optional<Resources> resources;
};

struct TraceRow {
  std::uint64_t query_id = 0;
  std::string stage;
  Nanos start = 0;
  Nanos end = 0;
};

// Per-unit MLP schedule of the first device batch.
struct ScheduleRow {
  std::string layer;
  std::uint32_t output_group = 0;
  Nanos start = 0;
  Nanos end = 0;
};

struct RunResult {
  Metrics metrics;
  std::vector<TraceRow> traces;
  std::vector<ScheduleRow> schedule;
  std::vector<float> scores;  // per completed query, in query order
  std::optional<SearchOutcome> search;
};

// Seed drives the workload and the SsdS resident set; weights come from
// scenario.weight_seed. Throws InfeasibleError when kernel search fails.
RunResult run(const Scenario& scenario, std::uint64_t seed);
RunResult run(const Scenario& scenario);
RunResult run(const Scenario& scenario, std::uint64_t seed, const RecModel& model);

// SsdS resident rows: floor(dram_fraction * rows) per table. Zipf keeps the
// lowest (most frequent) indices, Uniform a seeded random subset.
std::vector<std::vector<bool>> resident_set(const ModelSpec& model, double dram_fraction,
                                            IndexDistribution distribution, std::uint64_t seed);
// Expected miss probability per lookup for the resident-set policy.
double analytic_miss_rate(const ModelSpec& model, double dram_fraction,
                          const WorkloadParams& workload);

// Host MLP time for `batch` queries: per layer, layer overhead plus MACs.
Nanos host_mlp_ns(const ModelSpec& model, const TimingParams& timing, std::uint32_t batch);

struct ComparisonRow {
  std::string label;
  std::string mode;
  double throughput_qps = 0;
  Nanos p50 = 0;
  Nanos p99 = 0;
  double throughput_ratio = 0;  // vs the first row
  double p50_reduction_pct = 0;
  double p99_reduction_pct = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
};

// Throws ConfigError unless every scenario shares the first one's model,
// weights and workload seed.
void check_comparable(const std::vector<Scenario>& scenarios);
Comparison compare(const std::vector<std::string>& labels, const std::vector<RunResult>& results);
Comparison compare(const std::vector<Scenario>& scenarios, const std::vector<std::string>& labels);

}  // namespace rmssd
