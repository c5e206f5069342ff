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

#include "rmssd/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "rmssd/mlp_engine.hpp"

namespace rmssd {

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::RmSsd: return "rmssd";
    case Mode::EmbVectorSum: return "emb_vectorsum";
    case Mode::SsdS: return "ssd_s";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  if (name == "rmssd") return Mode::RmSsd;
  if (name == "emb_vectorsum") return Mode::EmbVectorSum;
  if (name == "ssd_s") return Mode::SsdS;
  throw ConfigError("unknown mode '" + name + "' (expected rmssd, emb_vectorsum or ssd_s)");
}

void Scenario::validate() const {
  model.validate();
  geometry.validate();
  timing.validate();
  WorkloadParams wp = workload;
  wp.count = std::max<std::uint64_t>(wp.count, 1);  // zero queries is a valid empty run
  wp.validate();
  resources.validate();
  search.validate();
  if (!(dram_fraction > 0.0 && dram_fraction <= 1.0))
    throw ConfigError("scenario: dram_fraction must be in (0, 1]");
  if (batch < 1) throw ConfigError("scenario: batch must be >= 1");
  if (horizon_ns < 0) throw ConfigError("scenario: horizon_ns must be >= 0");
  if (extents_per_table < 1) throw ConfigError("layout: extents_per_table must be >= 1");
  if (!table_files.empty() && table_files.size() != model.num_tables())
    throw ConfigError("model: table_files must list one file per table");
  if (kernels) kernels->validate(model);
  layout_tables(model, geometry, extents_per_table);
}

SearchProblem Scenario::search_problem() const {
  SearchProblem p;
  p.model = model;
  p.geometry = geometry;
  p.timing = timing;
  p.resources = resources;
  p.profile = workload;
  p.space = search;
  p.extents_per_table = extents_per_table;
  return p;
}

LatencySummary summarize_latencies(std::vector<Nanos> latencies) {
  LatencySummary s;
  if (latencies.empty()) return s;
  std::sort(latencies.begin(), latencies.end());
  const auto rank = [&](double pct) {
    const auto n = static_cast<double>(latencies.size());
    const auto k = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    return latencies[std::max<std::size_t>(k, 1) - 1];
  };
  s.p50 = rank(50);
  s.p95 = rank(95);
  s.p99 = rank(99);
  s.max = latencies.back();
  double sum = 0;
  for (auto v : latencies) sum += static_cast<double>(v);
  s.mean = sum / static_cast<double>(latencies.size());
  return s;
}

std::vector<std::vector<bool>> resident_set(const ModelSpec& model, double dram_fraction,
                                            IndexDistribution distribution, std::uint64_t seed) {
  std::vector<std::vector<bool>> resident;
  Rng rng(seed ^ 0x5245534944454e54ULL);
  for (const auto& t : model.tables) {
    const auto keep = static_cast<std::uint64_t>(std::floor(dram_fraction * static_cast<double>(t.rows)));
    std::vector<bool> r(t.rows, false);
    if (distribution == IndexDistribution::Zipf) {
      std::fill(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(keep), true);
    } else {
      std::vector<std::uint64_t> perm(t.rows);
      for (std::uint64_t i = 0; i < t.rows; ++i) perm[i] = i;
      for (std::uint64_t i = 0; i < keep; ++i) {
        std::swap(perm[i], perm[i + rng.below(t.rows - i)]);
        r[perm[i]] = true;
      }
    }
    resident.push_back(std::move(r));
  }
  return resident;
}

double analytic_miss_rate(const ModelSpec& model, double dram_fraction,
                          const WorkloadParams& workload) {
  double total = 0;
  for (const auto& t : model.tables) {
    const auto keep = static_cast<std::uint64_t>(std::floor(dram_fraction * static_cast<double>(t.rows)));
    if (workload.distribution == IndexDistribution::Zipf)
      total += 1.0 - ZipfSampler(t.rows, workload.zipf_s).cdf(keep);
    else
      total += 1.0 - static_cast<double>(keep) / static_cast<double>(t.rows);
  }
  return total / static_cast<double>(model.num_tables());
}

Nanos host_mlp_ns(const ModelSpec& model, const TimingParams& timing, std::uint32_t batch) {
  double ns = 0;
  auto add = [&](const std::vector<std::uint32_t>& dims) {
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
      ns += timing.host_mlp_layer_ns +
            static_cast<double>(dims[i]) * dims[i + 1] * timing.host_mlp_ns_per_mac;
  };
  add(model.bottom_mlp_dims);
  add(model.top_mlp_dims);
  return round_ns(ns * batch);
}

namespace {

struct Collector {
  Nanos horizon_cap;
  std::vector<Nanos> channel_busy;
  std::vector<Nanos> latencies;
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  Nanos last_done = 0;

  void busy(std::uint32_t channel, Nanos start, Nanos end) {
    end = std::min(end, horizon_cap);
    if (end > start) channel_busy[channel] += end - start;
  }
  void finish(Nanos submit, Nanos done) {
    ++issued;
    if (done <= horizon_cap) {
      ++completed;
      latencies.push_back(done - submit);
      last_done = std::max(last_done, done);
    }
  }
};

struct Scorer {
  bool enabled;
  std::vector<float> scores;
  std::uint64_t mismatches = 0;
  double max_rel = 0;

  void check(const RecModel& model, const Query& q, float score) {
    if (!enabled) return;
    const float ref = reference_inference(model, q);
    if (std::bit_cast<std::uint32_t>(ref) != std::bit_cast<std::uint32_t>(score)) ++mismatches;
    const double denom = std::max(std::fabs(static_cast<double>(ref)), 1e-30);
    max_rel = std::max(max_rel, std::fabs(static_cast<double>(score) - ref) / denom);
  }
};

std::uint64_t command_bytes(const ModelSpec& model, std::span<const Query> batch) {
  std::uint64_t bytes = 0;
  for (const auto& q : batch) {
    for (const auto& list : q.indices) bytes += list.size() * 4;
    bytes += std::uint64_t{model.dense_dim} * 4;
  }
  return bytes;
}

std::vector<std::string> chain_layer_names(const ModelSpec& model, bool bottom) {
  std::vector<std::string> names;
  if (bottom) {
    for (std::size_t i = 0; i + 1 < model.bottom_mlp_dims.size(); ++i)
      names.push_back("bottom" + std::to_string(i));
    names.push_back("l0_dense");
  } else {
    names.push_back("l0_emb");
    for (std::size_t j = 1; j + 1 < model.top_mlp_dims.size(); ++j)
      names.push_back("top" + std::to_string(j));
  }
  return names;
}

void append_schedule(std::vector<ScheduleRow>& rows, const PipelineSchedule& s,
                     const std::vector<std::string>& names, Nanos origin, const TimingParams& timing) {
  for (const auto& u : s.units)
    rows.push_back(ScheduleRow{names[u.layer], u.unit, origin + timing.cycles_to_ns(u.start),
                               origin + timing.cycles_to_ns(u.end)});
}

// Normative functional path of the device: bottom MLP, pooled vectors from
// the lookup engine, the decomposed first top layer, then the rest.
float device_score(const RecModel& model, const DecomposedLayer& l0, const Query& q,
                   std::span<const float> pooled) {
  const auto bot = mlp_forward(model.bottom, q.dense);
  auto x = decomposed_forward(l0, bot, pooled, SplitOrder::Sequential);
  if (model.top.size() > 1)
    x = mlp_forward(std::span<const DenseLayer>(model.top).subspan(1), x);
  return x.front();
}

float host_score(const RecModel& model, const Query& q, std::span<const float> pooled) {
  auto x = mlp_forward(model.bottom, q.dense);
  x.insert(x.end(), pooled.begin(), pooled.end());
  return mlp_forward(model.top, x).front();
}

struct DeviceKernels {
  KernelAssignment kernels;
  std::uint32_t batch = 1;
};

void run_device(const Scenario& sc, const RecModel& model, const std::vector<Query>& queries,
                const DeviceKernels& dk, Collector& col, Scorer& scorer, RunResult& out) {
  const bool rmssd = sc.mode == Mode::RmSsd;
  const auto& spec = model.spec;
  const TableLayout layout = layout_tables(spec, sc.geometry, sc.extents_per_table);
  const std::uint32_t kc_e = rmssd ? dk.kernels.ev_sum.kc : spec.ev_dim();
  const auto bot = bottom_chain(spec, sc.resources, sc.timing, dk.batch);
  const auto top = top_chain(spec, sc.resources, sc.timing, dk.batch);
  const auto bot_kernels = dk.kernels.bottom_chain();
  std::map<std::uint32_t, std::pair<Nanos, Nanos>> chain_times;
  auto mlp_times = [&](std::uint32_t b) {
    auto it = chain_times.find(b);
    if (it == chain_times.end())
      it = chain_times
               .emplace(b, std::make_pair(chain_time_ns(bot, bot_kernels, b, sc.timing),
                                          chain_time_ns(top, dk.kernels.top, b, sc.timing)))
               .first;
    return it->second;
  };
  std::optional<DecomposedLayer> l0;
  if (rmssd && scorer.enabled)
    l0 = decompose_l0(model.top.front(), spec.bottom_output_width(), spec.embedding_width());
  const std::span<const EmbeddingTable> tables =
      scorer.enabled ? std::span<const EmbeddingTable>(model.tables) : std::span<const EmbeddingTable>();

  Nanos submit = 0, bot_free = 0, top_free = 0, host_free = 0;
  for (std::size_t first = 0; first < queries.size(); first += dk.batch) {
    if (submit >= col.horizon_cap) break;
    const std::size_t n = std::min<std::size_t>(dk.batch, queries.size() - first);
    const auto b = static_cast<std::uint32_t>(n);
    const std::span<const Query> batch(queries.data() + first, n);
    const Nanos cmd_end = submit + sc.timing.host_io_overhead_ns() +
                          sc.timing.host_transfer_ns(command_bytes(spec, batch));
    const LookupResult lk =
        simulate_lookup(spec, tables, batch, sc.geometry, sc.timing, layout.map, kc_e, cmd_end);
    out.metrics.ev_requests += lk.ev_requests;
    out.metrics.page_reads += lk.page_reads;
    out.metrics.events += lk.flash.events;
    for (std::size_t k = 0; k < lk.page_ops.size(); ++k)
      col.busy(lk.page_ops[k].channel, lk.flash.ops[k].sense_start, lk.flash.ops[k].xfer_end);

    Nanos done = 0;
    std::vector<std::pair<std::string, std::pair<Nanos, Nanos>>> stages;
    if (rmssd) {
      const auto [t_bot, t_top] = mlp_times(b);
      const Nanos bot_start = std::max(cmd_end, bot_free);
      const Nanos bot_end = bot_start + t_bot;
      bot_free = bot_end;
      const Nanos top_start = std::max({lk.end, bot_end, top_free});
      const Nanos top_end = top_start + t_top;
      top_free = top_end;
      done = top_end + sc.timing.host_transfer_ns(std::uint64_t{b} * 4);
      stages = {{"bottom", {bot_start, bot_end}}, {"top", {top_start, top_end}},
                {"result", {top_end, done}}};
      if (first == 0) {
        append_schedule(out.schedule, pipeline_schedule(bot, bot_kernels, b),
                        chain_layer_names(spec, true), bot_start, sc.timing);
        append_schedule(out.schedule, pipeline_schedule(top, dk.kernels.top, b),
                        chain_layer_names(spec, false), top_start, sc.timing);
      }
    } else {
      const Nanos xfer_end =
          lk.end + sc.timing.host_transfer_ns(std::uint64_t{b} * spec.embedding_width() * 4);
      const Nanos host_start = std::max(xfer_end, host_free);
      done = host_start + host_mlp_ns(spec, sc.timing, b);
      host_free = done;
      stages = {{"xfer", {lk.end, xfer_end}}, {"host_mlp", {host_start, done}}};
    }
    out.metrics.events += 2 + stages.size();

    for (std::size_t q = 0; q < n; ++q) {
      const std::uint64_t id = first + q;
      col.finish(submit, done);
      if (sc.record_traces) {
        out.traces.push_back(TraceRow{id, "cmd", submit, cmd_end});
        out.traces.push_back(TraceRow{id, "emb", cmd_end, lk.query_done[q]});
        for (const auto& [name, span] : stages)
          out.traces.push_back(TraceRow{id, name, span.first, span.second});
      }
      if (scorer.enabled && done <= col.horizon_cap) {
        const float s = rmssd ? device_score(model, *l0, batch[q], lk.query_vectors[q])
                              : host_score(model, batch[q], lk.query_vectors[q]);
        scorer.scores.push_back(s);
        scorer.check(model, batch[q], s);
      }
    }
    submit = lk.end;
  }
}

void run_ssd_s(const Scenario& sc, const RecModel& model, const std::vector<Query>& queries,
               std::uint64_t seed, Collector& col, Scorer& scorer, RunResult& out) {
  const auto& spec = model.spec;
  const auto& geo = sc.geometry;
  const Ftl ftl(geo);
  const TableLayout layout = layout_tables(spec, geo, sc.extents_per_table);
  const auto resident = resident_set(spec, sc.dram_fraction, sc.workload.distribution, seed);
  const Nanos mlp = host_mlp_ns(spec, sc.timing, 1);
  // On an idle array a block read depends only on the dies it touches.
  std::map<std::vector<std::pair<std::uint32_t, std::uint32_t>>, BlockReadResult> memo;
  std::vector<PhysAddr> pages;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> key;

  Nanos t = 0;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    if (t >= col.horizon_cap) break;
    const Query& q = queries[qi];
    validate_query(spec, q);
    const Nanos submit = t;
    for (std::size_t tb = 0; tb < spec.num_tables(); ++tb) {
      const std::uint32_t ev_bytes = spec.tables[tb].ev_bytes();
      for (auto idx : q.indices[tb]) {
        ++out.metrics.ev_requests;
        if (resident[tb][idx]) {
          ++out.metrics.dram_hits;
          t += sc.timing.dram_hit();
          continue;
        }
        ++out.metrics.dram_misses;
        const EvLocation loc = layout.map.translate_index(tb, idx);
        const std::uint64_t lba = loc.lba + loc.offset / geo.lba_size;
        const std::uint64_t head = loc.offset % geo.lba_size;
        const std::uint64_t len = ceil_div(head + ev_bytes, geo.lba_size) * geo.lba_size;
        pages.clear();
        key.clear();
        const std::uint64_t first_byte = lba * geo.lba_size;
        for (std::uint64_t p = first_byte / geo.page_size; p <= (first_byte + len - 1) / geo.page_size; ++p) {
          pages.push_back(ftl.translate(p * geo.lbas_per_page()));
          key.emplace_back(pages.back().channel, pages.back().die);
        }
        auto it = memo.find(key);
        if (it == memo.end()) it = memo.emplace(key, host_block_read(ftl, sc.timing, lba, len)).first;
        const BlockReadResult& br = it->second;
        out.metrics.page_reads += pages.size();
        out.metrics.events += br.flash.events;
        for (std::size_t k = 0; k < pages.size(); ++k)
          col.busy(pages[k].channel, t + br.flash.ops[k].sense_start, t + br.flash.ops[k].xfer_end);
        t += br.duration;
      }
    }
    const Nanos lookups_end = t;
    t += mlp;
    out.metrics.events += q.indices.size() + 1;
    col.finish(submit, t);
    if (sc.record_traces) {
      out.traces.push_back(TraceRow{qi, "lookup", submit, lookups_end});
      out.traces.push_back(TraceRow{qi, "host_mlp", lookups_end, t});
    }
    if (scorer.enabled && t <= col.horizon_cap) {
      // Rows come from host DRAM or the block path unchanged.
      std::vector<float> pooled;
      for (std::size_t tb = 0; tb < spec.num_tables(); ++tb) {
        const auto v = ev_lookup_sum(model.tables[tb], q.indices[tb], tb);
        pooled.insert(pooled.end(), v.begin(), v.end());
      }
      const float s = host_score(model, q, pooled);
      scorer.scores.push_back(s);
      scorer.check(model, q, s);
    }
  }
  const std::uint64_t lookups = out.metrics.dram_hits + out.metrics.dram_misses;
  out.metrics.miss_rate = lookups ? static_cast<double>(out.metrics.dram_misses) / lookups : 0.0;
  out.metrics.analytic_miss_rate = analytic_miss_rate(spec, sc.dram_fraction, sc.workload);
}

RecModel load_model(const Scenario& sc) {
  RecModel m = build_model(sc.model, sc.weight_seed);
  for (std::size_t t = 0; t < sc.table_files.size(); ++t)
    m.tables[t] = read_table_file(sc.table_files[t], sc.model.tables[t]);
  return m;
}

}  // namespace

RunResult run(const Scenario& scenario, std::uint64_t seed, const RecModel& model) {
  scenario.validate();
  if (!(model.spec == scenario.model)) throw ConfigError("run: model does not match scenario");
  RunResult out;
  Metrics& m = out.metrics;
  m.mode = mode_name(scenario.mode);
  m.model = scenario.model.name;
  m.seed = seed;

  WorkloadParams wp = scenario.workload;
  wp.seed = seed;
  DeviceKernels dk;
  if (scenario.mode == Mode::RmSsd) {
    if (scenario.kernels) {
      dk.kernels = *scenario.kernels;
      dk.batch = scenario.batch;
    } else {
      SearchProblem problem = scenario.search_problem();
      problem.profile = wp;
      out.search = search(problem);
      if (!out.search->feasible)
        throw InfeasibleError("kernel search infeasible: " + out.search->binding);
      dk.kernels = out.search->assignment;
      dk.batch = out.search->batch;
    }
    m.kernels = dk.kernels;
    m.resources = resource_usage(scenario.model, dk.kernels, scenario.resources);
    m.batch = dk.batch;
  } else if (scenario.mode == Mode::EmbVectorSum) {
    dk.batch = scenario.batch;
    m.batch = dk.batch;
  } else {
    m.batch = 1;
  }

  const std::vector<Query> queries =
      wp.count > 0 ? generate_workload(scenario.model, wp) : std::vector<Query>{};
  Collector col;
  col.horizon_cap = scenario.horizon_ns > 0 ? scenario.horizon_ns : std::numeric_limits<Nanos>::max();
  col.channel_busy.assign(scenario.geometry.channels, 0);
  Scorer scorer{scenario.functional_check, {}, 0, 0.0};

  if (scenario.mode == Mode::SsdS)
    run_ssd_s(scenario, model, queries, seed, col, scorer, out);
  else
    run_device(scenario, model, queries, dk, col, scorer, out);

  m.issued = col.issued;
  m.completed = col.completed;
  m.in_flight = col.issued - col.completed;
  m.horizon_ns = scenario.horizon_ns > 0 ? scenario.horizon_ns : col.last_done;
  m.throughput_qps = m.horizon_ns > 0 ? static_cast<double>(m.completed) * 1e9 / static_cast<double>(m.horizon_ns) : 0.0;
  m.latency = summarize_latencies(std::move(col.latencies));
  m.channel_utilization.assign(scenario.geometry.channels, 0.0);
  if (m.horizon_ns > 0)
    for (std::uint32_t c = 0; c < scenario.geometry.channels; ++c)
      m.channel_utilization[c] = static_cast<double>(col.channel_busy[c]) /
                                 (static_cast<double>(scenario.geometry.dies_per_channel) *
                                  static_cast<double>(m.horizon_ns));
  m.functional_checked = scorer.enabled;
  m.functional_mismatches = scorer.mismatches;
  m.max_relative_error = scorer.max_rel;
  out.scores = std::move(scorer.scores);
  return out;
}

RunResult run(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  return run(scenario, seed, load_model(scenario));
}

RunResult run(const Scenario& scenario) { return run(scenario, scenario.workload.seed); }

void check_comparable(const std::vector<Scenario>& scenarios) {
  if (scenarios.size() < 2) throw ConfigError("compare: need at least two scenarios");
  const Scenario& base = scenarios.front();
  for (std::size_t i = 1; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    if (!(s.model == base.model) || s.weight_seed != base.weight_seed || s.table_files != base.table_files)
      throw ConfigError("compare: scenario " + std::to_string(i) + " uses a different model");
    if (s.workload.seed != base.workload.seed)
      throw ConfigError("compare: scenario " + std::to_string(i) + " uses a different workload seed");
  }
}

Comparison compare(const std::vector<std::string>& labels, const std::vector<RunResult>& results) {
  if (results.size() < 2 || labels.size() != results.size())
    throw ConfigError("compare: need at least two labelled results");
  Comparison c;
  const Metrics& base = results.front().metrics;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Metrics& m = results[i].metrics;
    if (m.model != base.model || m.seed != base.seed)
      throw ConfigError("compare: result " + std::to_string(i) + " has a different model or seed");
    ComparisonRow r;
    r.label = labels[i];
    r.mode = m.mode;
    r.throughput_qps = m.throughput_qps;
    r.p50 = m.latency.p50;
    r.p99 = m.latency.p99;
    r.throughput_ratio = base.throughput_qps > 0 ? m.throughput_qps / base.throughput_qps : 0.0;
    auto reduction = [](Nanos b, Nanos x) {
      return b > 0 ? 100.0 * static_cast<double>(b - x) / static_cast<double>(b) : 0.0;
    };
    r.p50_reduction_pct = reduction(base.latency.p50, m.latency.p50);
    r.p99_reduction_pct = reduction(base.latency.p99, m.latency.p99);
    c.rows.push_back(r);
  }
  return c;
}

Comparison compare(const std::vector<Scenario>& scenarios, const std::vector<std::string>& labels) {
  check_comparable(scenarios);
  std::vector<RunResult> results;
  for (const auto& s : scenarios) results.push_back(run(s));
  return compare(labels, results);
}

}  // namespace rmssd
