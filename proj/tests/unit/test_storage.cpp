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

#include "oracles.hpp"
#include "rmssd/event_queue.hpp"
#include "rmssd/storage.hpp"

namespace rmssd {
namespace {

SsdGeometry geo(std::uint32_t ch, std::uint32_t dies) {
  SsdGeometry g;
  g.channels = ch;
  g.dies_per_channel = dies;
  return g;
}

TEST(Ftl, StripesPagesAcrossChannelsThenDies) {
  const Ftl ftl(geo(4, 2));
  EXPECT_EQ(ftl.translate(0), (PhysAddr{0, 0, 0, 0}));
  const PhysAddr p1 = ftl.translate(8);
  EXPECT_EQ(p1.channel, 1u);
  EXPECT_EQ(p1.die, 0u);
  const PhysAddr p5 = ftl.translate(40);
  EXPECT_EQ(p5.channel, 1u);
  EXPECT_EQ(p5.die, 1u);
  // Page 8 wraps to the second page of die (0, 0).
  EXPECT_EQ(ftl.translate(64), (PhysAddr{0, 0, 1, 0}));
  // LBAs inside a page share it and carry their byte offset.
  EXPECT_EQ(ftl.translate(3), (PhysAddr{0, 0, 0, 1536}));
}

TEST(Ftl, RejectsOutOfRange) {
  const SsdGeometry g = geo(2, 2);
  const Ftl ftl(g);
  EXPECT_NO_THROW(ftl.translate(g.total_lbas() - 1));
  EXPECT_THROW(ftl.translate(g.total_lbas()), RangeError);
}

TEST(Geometry, ValidationRejectsInconsistentSizes) {
  SsdGeometry g;
  g.page_size = 1000;
  EXPECT_THROW(g.validate(), ConfigError);
  g = SsdGeometry{};
  g.channels = 0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = SsdGeometry{};
  g.lba_size = 8192;
  EXPECT_THROW(g.validate(), ConfigError);
  TimingParams t;
  t.page_read_us = -1;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TimingParams{};
  t.fc_clock_mhz = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(PageReadTime, SenseplusTransfer) {
  const SsdGeometry g;
  TimingParams t;
  EXPECT_DOUBLE_EQ(page_read_time(t, g), 51.6384);
  t.channel_transfer_ns_per_byte = 0;
  EXPECT_DOUBLE_EQ(page_read_time(t, g), 50.0);
  EXPECT_EQ(page_read_ns(t, g), 50000);
}

TEST(HostBlockRead, SinglePage) {
  const SsdGeometry g;
  const TimingParams t;
  const Ftl ftl(g);
  const auto r = host_block_read(ftl, t, 16, 100);
  EXPECT_EQ(r.duration, page_read_ns(t, g) + t.host_transfer_ns(100) + t.host_io_overhead_ns());
  EXPECT_EQ(r.flash.ops.size(), 1u);
}

TEST(HostBlockRead, TwoChannelsOverlap) {
  const SsdGeometry g;
  const TimingParams t;
  const Ftl ftl(g);
  // Bytes 3584..4295 straddle pages 0 and 1, on channels 0 and 1.
  const auto r = host_block_read(ftl, t, 7, 712);
  ASSERT_EQ(r.flash.ops.size(), 2u);
  EXPECT_EQ(r.flash.makespan, page_read_ns(t, g));
  EXPECT_EQ(r.duration, page_read_ns(t, g) + t.host_transfer_ns(712) + t.host_io_overhead_ns());
}

TEST(HostBlockRead, TenPagesSerializePerChannel) {
  const SsdGeometry g = geo(4, 1);
  const TimingParams t;
  const Ftl ftl(g);
  const auto r = host_block_read(ftl, t, 0, 10 * 4096);
  ASSERT_EQ(r.flash.ops.size(), 10u);
  // Channels 0 and 1 hold ceil(10 / 4) = 3 pages on a single die each.
  const Nanos per_page = t.sense_ns() + t.channel_transfer_ns(4096);
  EXPECT_EQ(r.flash.makespan, 3 * per_page);
  std::vector<PageOp> ops;
  for (std::uint64_t p = 0; p < 10; ++p) {
    const PhysAddr a = ftl.translate(p * 8);
    ops.push_back(PageOp{a.channel, a.die, a.page, IoClass::Block, 0});
  }
  EXPECT_EQ(r.flash.makespan, oracle::flash_makespan(g, t, ops));
}

TEST(HostBlockRead, MonotoneInEveryLatencyParameter) {
  const SsdGeometry g;
  const Ftl ftl(g);
  const TimingParams base;
  const Nanos d0 = host_block_read(ftl, base, 5, 9000).duration;
  for (int which = 0; which < 4; ++which) {
    TimingParams t = base;
    if (which == 0) t.page_read_us *= 2;
    if (which == 1) t.channel_transfer_ns_per_byte *= 2;
    if (which == 2) t.host_interface_ns_per_byte *= 2;
    if (which == 3) t.host_block_io_overhead_us *= 2;
    EXPECT_GT(host_block_read(ftl, t, 5, 9000).duration, d0) << which;
  }
}

TEST(RunFlash, DiesOnOneChannelOverlapSensing) {
  const SsdGeometry g = geo(1, 2);
  const TimingParams t;
  const std::vector<PageOp> ops{{0, 0, 0, IoClass::Ev, 0}, {0, 1, 0, IoClass::Ev, 0}};
  const FlashRun r = run_flash(g, t, ops);
  const Nanos x = t.channel_transfer_ns(g.page_size);
  EXPECT_EQ(r.ops[0].sense_end, t.sense_ns());
  EXPECT_EQ(r.ops[1].sense_end, t.sense_ns());
  EXPECT_EQ(r.ops[0].xfer_end, t.sense_ns() + x);
  EXPECT_EQ(r.ops[1].xfer_start, t.sense_ns() + x);
  EXPECT_EQ(r.makespan, t.sense_ns() + 2 * x);
}

TEST(RunFlash, EvReadsWinTheDie) {
  const SsdGeometry g = geo(1, 1);
  const TimingParams t;
  const std::vector<PageOp> ops{{0, 0, 0, IoClass::Block, 0}, {0, 0, 1, IoClass::Ev, 0}};
  const FlashRun r = run_flash(g, t, ops);
  EXPECT_EQ(r.ops[1].sense_start, 0);
  EXPECT_EQ(r.ops[0].sense_start, r.ops[1].xfer_end);
}

TEST(RunFlash, EvTransfersWinTheChannel) {
  const SsdGeometry g = geo(1, 2);
  const TimingParams t;
  const std::vector<PageOp> ops{{0, 0, 0, IoClass::Block, 0}, {0, 1, 0, IoClass::Ev, 0}};
  const FlashRun r = run_flash(g, t, ops);
  EXPECT_EQ(r.ops[1].xfer_start, t.sense_ns());
  EXPECT_EQ(r.ops[0].xfer_start, r.ops[1].xfer_end);
}

TEST(RunFlash, PriorityIsNonPreemptive) {
  const SsdGeometry g = geo(1, 1);
  const TimingParams t;
  const std::vector<PageOp> ops{{0, 0, 0, IoClass::Block, 0}, {0, 0, 1, IoClass::Ev, 10}};
  const FlashRun r = run_flash(g, t, ops);
  EXPECT_EQ(r.ops[0].sense_start, 0);
  EXPECT_EQ(r.ops[1].sense_start, r.ops[0].xfer_end);
}

TEST(RunFlash, EmptyInput) {
  const FlashRun r = run_flash(SsdGeometry{}, TimingParams{}, {});
  EXPECT_EQ(r.makespan, 0);
  EXPECT_TRUE(r.ops.empty());
}

TEST(RunFlash, MatchesTimeSteppedOracleOnRandomTraces) {
  const SsdGeometry g = geo(4, 2);
  const TimingParams t;
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PageOp> ops(100);
    for (auto& op : ops) {
      op.channel = static_cast<std::uint32_t>(rng.below(4));
      op.die = static_cast<std::uint32_t>(rng.below(2));
      op.page = rng.below(100);
      op.io_class = rng.below(3) == 0 ? IoClass::Block : IoClass::Ev;
      op.release = static_cast<Nanos>(rng.below(200000));
    }
    const FlashRun r = run_flash(g, t, ops);
    const auto want = oracle::flash_timeline(g, t, ops);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      ASSERT_EQ(r.ops[i].sense_start, want[i].sense_start) << trial << ":" << i;
      ASSERT_EQ(r.ops[i].xfer_end, want[i].xfer_end) << trial << ":" << i;
    }
  }
}

TEST(EventQueue, SameInstantPopsInInsertionOrder) {
  EventQueue<int> q;
  q.push(5, 1);
  q.push(3, 2);
  q.push(5, 3);
  q.push(3, 4);
  std::vector<int> order;
  while (!q.empty()) order.push_back(q.pop().payload);
  EXPECT_EQ(order, (std::vector<int>{2, 4, 1, 3}));
  EXPECT_EQ(q.now(), 5);
  EXPECT_THROW(q.push(4, 0), std::logic_error);
}

}  // namespace
}  // namespace rmssd
