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

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>
#include <map>
#include <set>

#include "oracles.hpp"
#include "rmssd/ev_engine.hpp"
#include "rmssd/workload.hpp"

namespace rmssd {
namespace {

ModelSpec one_table(std::uint64_t rows, std::uint32_t dim, std::size_t tables = 1) {
  ModelSpec m;
  m.name = "ev";
  m.dense_dim = 1;
  m.bottom_mlp_dims = {1, 1};
  m.tables.assign(tables, TableSpec{rows, dim});
  m.top_mlp_dims = {1 + m.embedding_width(), 1};
  return m;
}

TEST(ExtentMap, TranslatesWorkedExample) {
  const SsdGeometry g;
  const TableSpec t{1000, 16};
  const std::vector<FileExtent> file{{1000, 128}};
  const ExtentMap map({build_extent_map(t, file, g)});
  EXPECT_EQ(map.table(0).rows_per_page, 64u);
  EXPECT_EQ(map.translate_index(0, 100), (EvLocation{1008, 2304}));
  EXPECT_EQ(map.translate_index(0, 0), (EvLocation{1000, 0}));
}

TEST(ExtentMap, FragmentedFileMatchesLinearScan) {
  const SsdGeometry g;
  const TableSpec t{1000, 16};  // 16 pages
  const std::vector<FileExtent> file{{800, 40}, {80, 24}, {4000, 64}};
  const ExtentMap map({build_extent_map(t, file, g)});
  ASSERT_EQ(map.table(0).extents.size(), 3u);
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t idx = rng.below(t.rows);
    ASSERT_EQ(map.translate_index(0, idx), oracle::linear_scan_translate(t, file, g, idx)) << idx;
  }
  for (std::uint64_t idx = 0; idx < t.rows; ++idx)
    ASSERT_EQ(map.translate_index(0, idx), oracle::linear_scan_translate(t, file, g, idx)) << idx;
  // Rows 960..999 live in the final extent.
  const EvLocation last = map.translate_index(0, 999);
  EXPECT_GE(last.lba, 4000u);
  EXPECT_LT(last.lba, 4064u);
  EXPECT_THROW(map.translate_index(0, 1000), RangeError);
  EXPECT_THROW(map.translate_index(1, 0), RangeError);
}

TEST(ExtentMap, RejectsMisalignedOrShortFiles) {
  const SsdGeometry g;
  const TableSpec t{1000, 16};
  const std::vector<FileExtent> misaligned{{4, 128}};
  const std::vector<FileExtent> short_file{{0, 64}};
  EXPECT_THROW(build_extent_map(t, misaligned, g), ConfigError);
  EXPECT_THROW(build_extent_map(t, short_file, g), ConfigError);
}

TEST(LayoutTables, ReversedFragmentsStillTranslate) {
  const SsdGeometry g;
  const ModelSpec m = one_table(3000, 16, 2);
  const TableLayout layout = layout_tables(m, g, 4);
  for (std::size_t t = 0; t < 2; ++t) {
    ASSERT_EQ(layout.files[t].size(), 4u);
    EXPECT_GT(layout.files[t][0].start_lba, layout.files[t][3].start_lba);
    for (std::uint64_t idx = 0; idx < 3000; idx += 7)
      ASSERT_EQ(layout.map.translate_index(t, idx),
                oracle::linear_scan_translate(m.tables[t], layout.files[t], g, idx));
  }
}

TEST(PackTableImage, PadsPageTails) {
  const TableSpec t{5, 3};  // 12-byte rows, 2 per 32-byte page
  std::vector<std::byte> flat(60);
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = static_cast<std::byte>(i + 1);
  const auto image = pack_table_image(flat, t, 32);
  ASSERT_EQ(image.size(), 96u);
  EXPECT_EQ(std::memcmp(image.data(), flat.data(), 24), 0);
  for (std::size_t b = 24; b < 32; ++b) EXPECT_EQ(image[b], std::byte{0});
  EXPECT_EQ(std::memcmp(image.data() + 64, flat.data() + 48, 12), 0);
  for (std::size_t b = 76; b < 96; ++b) EXPECT_EQ(image[b], std::byte{0});
}

EvRequest req_at(const Ftl& ftl, std::uint64_t lba, std::uint32_t offset) {
  EvRequest r;
  r.target = ftl.translate(lba);
  r.target.offset = offset;
  return r;
}

TEST(Dispatch, SamePageCoalesces) {
  const SsdGeometry g;
  const Ftl ftl(g);
  const std::vector<EvRequest> reqs{req_at(ftl, 16, 0), req_at(ftl, 16, 640)};
  const DispatchPlan plan = dispatch(reqs, g);
  ASSERT_EQ(plan.reads.size(), 1u);
  EXPECT_EQ(plan.reads[0].requests, (std::vector<std::size_t>{0, 1}));
}

TEST(Dispatch, DistinctChannelsStartTogether) {
  const SsdGeometry g;
  const ModelSpec m = one_table(64 * 8, 16);
  const TableLayout layout = layout_tables(m, g);
  Query q;
  q.dense = {0.5f};
  q.indices.resize(1);
  for (std::uint64_t p = 0; p < 8; ++p) q.indices[0].push_back(p * 64);
  const TimingParams t;
  const auto lk = simulate_lookup(m, {}, std::span(&q, 1), g, t, layout.map, 16, 0);
  ASSERT_EQ(lk.page_reads, 8u);
  std::set<std::uint32_t> channels;
  for (std::size_t i = 0; i < lk.flash.ops.size(); ++i) {
    EXPECT_EQ(lk.flash.ops[i].sense_start, 0);
    channels.insert(lk.page_ops[i].channel);
  }
  EXPECT_EQ(channels.size(), 8u);
}

TEST(Dispatch, UniformBatchMatchesCountingAndEventOracles) {
  const SsdGeometry g;
  const Ftl ftl(g);
  const TimingParams t;
  Rng rng(100);
  std::vector<EvRequest> reqs(100);
  std::map<std::uint32_t, std::set<std::uint64_t>> pages_per_die;
  for (auto& r : reqs) {
    r = req_at(ftl, rng.below(4096) * 8, 0);
    pages_per_die[r.target.channel * g.dies_per_channel + r.target.die].insert(r.target.page);
  }
  const DispatchPlan plan = dispatch(reqs, g);
  std::size_t max_q = 0;
  for (std::uint32_t d = 0; d < g.dies(); ++d) {
    EXPECT_EQ(plan.die_queues[d].size(), pages_per_die[d].size()) << d;
    max_q = std::max(max_q, plan.die_queues[d].size());
  }
  const FlashRun run = run_flash(g, t, plan.page_ops);
  EXPECT_EQ(run.makespan, oracle::flash_makespan(g, t, plan.page_ops));
  EXPECT_GE(run.makespan, static_cast<Nanos>(max_q) * page_read_ns(t, g));
}

TEST(EvSumEngine, ConcatenatesTables) {
  const std::vector<float> a{1, 2}, b{3, 4};
  const std::vector<std::vector<FetchedEv>> per{{FetchedEv{a, 0}}, {FetchedEv{b, 0}}};
  EXPECT_EQ(ev_sum_engine(per, 5).concatenated, (std::vector<float>{1, 2, 3, 4}));
}

TEST(EvSumEngine, SingleEvPassesThroughAfterOneInterval) {
  const std::vector<float> a{7, 8, 9};
  const std::vector<std::vector<FetchedEv>> per{{FetchedEv{a, 1234}}};
  const auto r = ev_sum_engine(per, 40);
  EXPECT_EQ(r.concatenated, a);
  EXPECT_EQ(r.completion, 1234 + 40);
}

TEST(EvSumEngine, SlowAdderSerializes) {
  std::vector<float> v(16, 1.0f);
  std::vector<std::vector<FetchedEv>> per(1);
  for (int p = 0; p < 16; ++p) per[0].push_back(FetchedEv{v, 1000 + 10 * p});
  const Nanos interval = 500;
  const auto r = ev_sum_engine(per, interval);
  // Discrete schedule: each add starts when the previous one ends.
  Nanos t = 0;
  for (int p = 0; p < 16; ++p) t = std::max(t, Nanos{1000 + 10 * p}) + interval;
  EXPECT_EQ(r.completion, t);
  EXPECT_EQ(r.completion, 1000 + 16 * interval);
  EXPECT_EQ(r.concatenated, std::vector<float>(16, 16.0f));
}

TEST(EvAddInterval, CeilOfWidthOverKernel) {
  const TimingParams t;  // 200 MHz: 5 ns per cycle
  EXPECT_EQ(ev_add_interval(16, 16, t), 5);
  EXPECT_EQ(ev_add_interval(16, 1, t), 80);
  EXPECT_EQ(ev_add_interval(16, 3, t), 30);
  EXPECT_THROW(ev_add_interval(16, 0, t), RangeError);
  EXPECT_THROW(ev_add_interval(16, 32, t), RangeError);
}

TEST(SimulateLookup, SingleIndexColdFlash) {
  const SsdGeometry g;
  const TimingParams t;
  const ModelSpec m = one_table(100, 16);
  const TableLayout layout = layout_tables(m, g);
  Query q;
  q.dense = {0.0f};
  q.indices = {{42}};
  const auto lk = simulate_lookup(m, {}, std::span(&q, 1), g, t, layout.map, 4, 777);
  EXPECT_EQ(lk.t_emb, page_read_ns(t, g) + ev_add_interval(16, 4, t));
  EXPECT_EQ(lk.query_done[0], lk.end);
  EXPECT_EQ(lk.start, 777);
}

TEST(SimulateLookup, IdenticalQueriesIdenticalLatency) {
  const SsdGeometry g;
  const TimingParams t;
  const ModelSpec m = preset_model("rmc3-mini");
  const TableLayout layout = layout_tables(m, g);
  WorkloadParams wp;
  wp.count = 1;
  const auto q = generate_workload(m, wp);
  const auto a = simulate_lookup(m, {}, q, g, t, layout.map, 16, 0);
  const auto b = simulate_lookup(m, {}, q, g, t, layout.map, 16, 0);
  EXPECT_EQ(a.t_emb, b.t_emb);
  EXPECT_EQ(a.query_done, b.query_done);
}

TEST(SimulateLookup, BatchOf64MatchesReplayOracle) {
  const SsdGeometry g;
  const TimingParams t;
  const ModelSpec m = preset_model("rmc3-mini");
  const RecModel model = build_model(m, 1);
  const TableLayout layout = layout_tables(m, g);
  WorkloadParams wp;
  wp.count = 64;
  wp.seed = 21;
  const auto qs = generate_workload(m, wp);
  for (std::uint32_t kc : {1u, 4u, 16u}) {
    const auto lk = simulate_lookup(m, model.tables, qs, g, t, layout.map, kc, 1000);
    const auto want = oracle::replay_lookup(m, qs, g, t, layout.map, kc, 1000);
    EXPECT_EQ(lk.end, want.end) << kc;
    EXPECT_EQ(lk.query_done, want.query_done) << kc;
    EXPECT_EQ(lk.page_reads, want.page_reads) << kc;
    EXPECT_EQ(lk.ev_requests, 64u * 8 * 20);
    // Functional transparency against the reference lookup.
    for (std::size_t q = 0; q < qs.size(); ++q)
      for (std::size_t tb = 0; tb < m.num_tables(); ++tb) {
        const auto ref = ev_lookup_sum(model.tables[tb], qs[q].indices[tb]);
        for (std::uint32_t d = 0; d < 16; ++d)
          ASSERT_EQ(std::bit_cast<std::uint32_t>(lk.query_vectors[q][tb * 16 + d]),
                    std::bit_cast<std::uint32_t>(ref[d]));
      }
  }
}

TEST(SimulateLookup, WiderAdderIsNeverSlower) {
  const SsdGeometry g;
  const TimingParams t;
  const ModelSpec m = preset_model("rmc3-mini");
  const TableLayout layout = layout_tables(m, g);
  WorkloadParams wp;
  wp.count = 8;
  const auto qs = generate_workload(m, wp);
  Nanos prev = std::numeric_limits<Nanos>::max();
  for (std::uint32_t kc : {1u, 2u, 4u, 8u, 16u}) {
    const Nanos te = simulate_lookup(m, {}, qs, g, t, layout.map, kc, 0).t_emb;
    EXPECT_LE(te, prev) << kc;
    prev = te;
  }
}

}  // namespace
}  // namespace rmssd
