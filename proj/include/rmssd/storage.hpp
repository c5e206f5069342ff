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

// SSD geometry, timing and the static round-robin FTL, plus the flash array
// scheduler shared by the embedding engine and the host block-I/O path.
//
// Flash model: each die holds one outstanding page read (single plane). A
// read senses for page_read_us on its die, then waits for its channel and
// transfers page_size bytes; the die stays busy until the transfer ends.
// Dies on one channel overlap sensing, transfers on a channel serialize.

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "rmssd/common.hpp"

namespace rmssd {

struct SsdGeometry {
  std::uint32_t channels = 8;
  std::uint32_t dies_per_channel = 4;
  std::uint32_t page_size = 4096;
  std::uint32_t lba_size = 512;
  std::uint32_t pages_per_block = 256;
  std::uint32_t blocks_per_die = 1024;

  void validate() const;
  std::uint32_t dies() const { return channels * dies_per_channel; }
  std::uint32_t lbas_per_page() const { return page_size / lba_size; }
  std::uint64_t total_pages() const {
    return std::uint64_t{dies()} * blocks_per_die * pages_per_block;
  }
  std::uint64_t total_lbas() const { return total_pages() * lbas_per_page(); }
  bool operator==(const SsdGeometry&) const = default;
};

struct TimingParams {
  double page_read_us = 50.0;
  double channel_transfer_ns_per_byte = 0.4;
  double dram_hit_ns = 100.0;
  double host_interface_ns_per_byte = 0.25;
  double fc_clock_mhz = 200.0;
  double host_block_io_overhead_us = 10.0;
  // Host-side MLP cost (EMB-VectorSum and SSD-S modes).
  double host_mlp_ns_per_mac = 0.25;
  double host_mlp_layer_ns = 500.0;

  void validate() const;

  Nanos sense_ns() const { return round_ns(page_read_us * 1000.0); }
  Nanos channel_transfer_ns(std::uint64_t bytes) const {
    return round_ns(static_cast<double>(bytes) * channel_transfer_ns_per_byte);
  }
  Nanos host_transfer_ns(std::uint64_t bytes) const {
    return round_ns(static_cast<double>(bytes) * host_interface_ns_per_byte);
  }
  Nanos host_io_overhead_ns() const { return round_ns(host_block_io_overhead_us * 1000.0); }
  Nanos dram_hit() const { return round_ns(dram_hit_ns); }
  Nanos cycles_to_ns(std::uint64_t cycles) const {
    return round_ns(static_cast<double>(cycles) * 1000.0 / fc_clock_mhz);
  }
  bool operator==(const TimingParams&) const = default;
};

struct PhysAddr {
  std::uint32_t channel = 0;
  std::uint32_t die = 0;
  std::uint64_t page = 0;    // page index within the die
  std::uint32_t offset = 0;  // byte offset within the page
  auto operator<=>(const PhysAddr&) const = default;
};

class Ftl {
 public:
  explicit Ftl(const SsdGeometry& geometry);

  // Round-robin page striping: p = lba * lba_size / page_size,
  // channel = p mod channels, die = (p / channels) mod dies_per_channel.
  PhysAddr translate(std::uint64_t lba) const;

  std::uint64_t physical_page(std::uint64_t lba) const;
  // Global page number of a physical location; inverse of the striping.
  std::uint64_t global_page(const PhysAddr& addr) const;
  const SsdGeometry& geometry() const { return geometry_; }

 private:
  SsdGeometry geometry_;
};

// Flash array sensing plus one page over the channel, in microseconds.
double page_read_time(const TimingParams& timing, const SsdGeometry& geometry);
Nanos page_read_ns(const TimingParams& timing, const SsdGeometry& geometry);

enum class IoClass { Ev, Block };

struct PageOp {
  std::uint32_t channel = 0;
  std::uint32_t die = 0;
  std::uint64_t page = 0;
  IoClass io_class = IoClass::Ev;
  Nanos release = 0;
};

struct PageOpTiming {
  Nanos sense_start = 0;
  Nanos sense_end = 0;
  Nanos xfer_start = 0;
  Nanos xfer_end = 0;
};

struct FlashRun {
  std::vector<PageOpTiming> ops;  // parallel to the input ops
  Nanos makespan = 0;             // latest xfer_end (0 if no ops)
  std::vector<Nanos> die_busy;    // per die: sense start to xfer end, summed
  std::uint64_t events = 0;
};

// Discrete-event execution of page reads. Per-die queues follow input
// (first-arrival) order; a die picks its first released EV op, else its first
// released block op. A free channel grants EV transfers before block
// transfers, then earliest sense completion, then input order. Priority is
// non-preemptive. All events at one timestamp are applied before any
// arbitration at that timestamp.
FlashRun run_flash(const SsdGeometry& geometry, const TimingParams& timing,
                   std::span<const PageOp> ops);

struct BlockReadResult {
  Nanos duration = 0;
  FlashRun flash;
};

// Host block-I/O path: FTL translate, page reads of every page touched by
// [lba * lba_size, lba * lba_size + len), host interface transfer of len
// bytes and the fixed software stack overhead.
BlockReadResult host_block_read(const Ftl& ftl, const TimingParams& timing,
                                std::uint64_t lba, std::uint64_t len);

}  // namespace rmssd
