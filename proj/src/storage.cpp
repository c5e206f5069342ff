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

#include "rmssd/storage.hpp"

#include <deque>
#include <set>
#include <tuple>

#include "rmssd/event_queue.hpp"

namespace rmssd {

void SsdGeometry::validate() const {
  if (channels < 1 || dies_per_channel < 1 || page_size < 1 || lba_size < 1 ||
      pages_per_block < 1 || blocks_per_die < 1)
    throw ConfigError("geometry: all fields must be >= 1");
  if (page_size % lba_size != 0)
    throw ConfigError("geometry: page_size " + std::to_string(page_size) +
                      " is not a multiple of lba_size " + std::to_string(lba_size));
}

void TimingParams::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"page_read_us", page_read_us},
      {"channel_transfer_ns_per_byte", channel_transfer_ns_per_byte},
      {"dram_hit_ns", dram_hit_ns},
      {"host_interface_ns_per_byte", host_interface_ns_per_byte},
      {"fc_clock_mhz", fc_clock_mhz},
      {"host_block_io_overhead_us", host_block_io_overhead_us},
      {"host_mlp_ns_per_mac", host_mlp_ns_per_mac},
      {"host_mlp_layer_ns", host_mlp_layer_ns},
  };
  for (const auto& [name, v] : fields)
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string("timing: ") + name + " must be finite and > 0");
}

Ftl::Ftl(const SsdGeometry& geometry) : geometry_(geometry) { geometry_.validate(); }

std::uint64_t Ftl::physical_page(std::uint64_t lba) const {
  if (lba >= geometry_.total_lbas())
    throw RangeError("lba " + std::to_string(lba) + " outside provisioned range [0, " +
                     std::to_string(geometry_.total_lbas()) + ")");
  return lba * geometry_.lba_size / geometry_.page_size;
}

PhysAddr Ftl::translate(std::uint64_t lba) const {
  const std::uint64_t p = physical_page(lba);
  PhysAddr a;
  a.channel = static_cast<std::uint32_t>(p % geometry_.channels);
  a.die = static_cast<std::uint32_t>((p / geometry_.channels) % geometry_.dies_per_channel);
  a.page = p / geometry_.dies();
  a.offset = static_cast<std::uint32_t>((lba * geometry_.lba_size) % geometry_.page_size);
  return a;
}

std::uint64_t Ftl::global_page(const PhysAddr& a) const {
  return a.page * geometry_.dies() + std::uint64_t{a.die} * geometry_.channels + a.channel;
}

double page_read_time(const TimingParams& timing, const SsdGeometry& geometry) {
  return timing.page_read_us +
         static_cast<double>(geometry.page_size) * timing.channel_transfer_ns_per_byte / 1000.0;
}

Nanos page_read_ns(const TimingParams& timing, const SsdGeometry& geometry) {
  return timing.sense_ns() + timing.channel_transfer_ns(geometry.page_size);
}

namespace {

enum class FlashEventKind { Release, SenseDone, XferDone };

struct FlashEvent {
  FlashEventKind kind = FlashEventKind::Release;
  std::size_t op = 0;
};

}  // namespace

FlashRun run_flash(const SsdGeometry& geometry, const TimingParams& timing,
                   std::span<const PageOp> ops) {
  const std::uint32_t dies = geometry.dies();
  const Nanos sense = timing.sense_ns();
  const Nanos xfer = timing.channel_transfer_ns(geometry.page_size);

  FlashRun run;
  run.ops.resize(ops.size());
  run.die_busy.assign(dies, 0);

  auto die_id = [&](const PageOp& op) { return op.channel * geometry.dies_per_channel + op.die; };

  // Released, not yet started: [die][class].
  std::vector<std::deque<std::size_t>> ev_fifo(dies), block_fifo(dies);
  std::vector<bool> die_busy(dies, false), channel_busy(geometry.channels, false);
  // Transfer candidates: (class, sense_end, op index).
  using Waiting = std::tuple<int, Nanos, std::size_t>;
  std::vector<std::set<Waiting>> waiting(geometry.channels);

  EventQueue<FlashEvent> queue;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].channel >= geometry.channels || ops[i].die >= geometry.dies_per_channel)
      throw RangeError("page op targets a channel/die outside the geometry");
    queue.push(ops[i].release, {FlashEventKind::Release, i});
  }

  std::vector<std::uint32_t> dirty_dies;
  std::vector<std::uint32_t> dirty_channels;
  while (!queue.empty()) {
    const Nanos now = queue.next_time();
    dirty_dies.clear();
    dirty_channels.clear();
    while (!queue.empty() && queue.next_time() == now) {
      const auto ev = queue.pop();
      const std::size_t i = ev.payload.op;
      const PageOp& op = ops[i];
      switch (ev.payload.kind) {
        case FlashEventKind::Release:
          (op.io_class == IoClass::Ev ? ev_fifo : block_fifo)[die_id(op)].push_back(i);
          dirty_dies.push_back(die_id(op));
          break;
        case FlashEventKind::SenseDone:
          waiting[op.channel].emplace(op.io_class == IoClass::Ev ? 0 : 1, now, i);
          dirty_channels.push_back(op.channel);
          break;
        case FlashEventKind::XferDone:
          channel_busy[op.channel] = false;
          die_busy[die_id(op)] = false;
          run.die_busy[die_id(op)] += now - run.ops[i].sense_start;
          run.makespan = std::max(run.makespan, now);
          dirty_channels.push_back(op.channel);
          dirty_dies.push_back(die_id(op));
          break;
      }
    }
    std::sort(dirty_dies.begin(), dirty_dies.end());
    for (auto d : dirty_dies) {
      if (die_busy[d]) continue;
      auto& fifo = !ev_fifo[d].empty() ? ev_fifo[d] : block_fifo[d];
      if (fifo.empty()) continue;
      const std::size_t i = fifo.front();
      fifo.pop_front();
      die_busy[d] = true;
      run.ops[i].sense_start = now;
      run.ops[i].sense_end = now + sense;
      queue.push(now + sense, {FlashEventKind::SenseDone, i});
    }
    std::sort(dirty_channels.begin(), dirty_channels.end());
    for (auto c : dirty_channels) {
      if (channel_busy[c] || waiting[c].empty()) continue;
      const std::size_t i = std::get<2>(*waiting[c].begin());
      waiting[c].erase(waiting[c].begin());
      channel_busy[c] = true;
      run.ops[i].xfer_start = now;
      run.ops[i].xfer_end = now + xfer;
      queue.push(now + xfer, {FlashEventKind::XferDone, i});
    }
  }
  run.events = queue.processed();
  return run;
}

BlockReadResult host_block_read(const Ftl& ftl, const TimingParams& timing, std::uint64_t lba,
                                std::uint64_t len) {
  if (len < 1) throw RangeError("host_block_read: len must be >= 1");
  const auto& geo = ftl.geometry();
  const std::uint64_t first_byte = lba * geo.lba_size;
  const std::uint64_t last_byte = first_byte + len - 1;
  const std::uint64_t last_lba = last_byte / geo.lba_size;
  ftl.physical_page(lba);
  ftl.physical_page(last_lba);

  std::vector<PageOp> ops;
  for (std::uint64_t p = first_byte / geo.page_size; p <= last_byte / geo.page_size; ++p) {
    const PhysAddr a = ftl.translate(p * geo.lbas_per_page());
    ops.push_back(PageOp{a.channel, a.die, a.page, IoClass::Block, 0});
  }
  BlockReadResult r;
  r.flash = run_flash(geo, timing, ops);
  r.duration = r.flash.makespan + timing.host_transfer_ns(len) + timing.host_io_overhead_ns();
  return r;
}

}  // namespace rmssd
