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

// In-storage embedding lookup engine: index -> LBA translation over file
// extents, page-coalescing dispatch to the flash dies, and the EV-sum adder.

#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "rmssd/recmodel.hpp"
#include "rmssd/storage.hpp"

namespace rmssd {

// A physically contiguous run of the table file, in LBAs.
struct FileExtent {
  std::uint64_t start_lba = 0;
  std::uint64_t lba_count = 0;
};

struct Extent {
  std::uint64_t index_start = 0;
  std::uint64_t index_count = 0;
  std::uint64_t start_lba = 0;
};

struct EvLocation {
  std::uint64_t lba = 0;     // first LBA of the page holding the EV
  std::uint32_t offset = 0;  // byte offset of the EV inside that page
  bool operator==(const EvLocation&) const = default;
};

// Translator state for one table. Rows are packed floor(page_size / ev_bytes)
// per page and padded to the page boundary, so no EV straddles a page.
struct TableExtents {
  TableSpec spec;
  std::uint32_t ev_bytes = 0;
  std::uint32_t rows_per_page = 0;
  std::uint32_t lbas_per_page = 0;
  std::vector<Extent> extents;  // sorted by index_start, covering [0, rows)
};

// Extents must start and end on page boundaries.
TableExtents build_extent_map(const TableSpec& table, std::span<const FileExtent> file_extents,
                              const SsdGeometry& geometry);

class ExtentMap {
 public:
  ExtentMap() = default;
  explicit ExtentMap(std::vector<TableExtents> tables) : tables_(std::move(tables)) {}

  EvLocation translate_index(std::size_t table_id, std::uint64_t index) const;

  std::size_t num_tables() const { return tables_.size(); }
  const TableExtents& table(std::size_t t) const { return tables_.at(t); }

 private:
  std::vector<TableExtents> tables_;
};

struct TableLayout {
  std::vector<std::vector<FileExtent>> files;  // per table
  ExtentMap map;
};

// Allocates one file per table from LBA 0 upward. With extents_per_table > 1
// each file is split into that many page-aligned fragments separated by gaps,
// fragments stored in reverse order to exercise non-monotone extent lists.
TableLayout layout_tables(const ModelSpec& model, const SsdGeometry& geometry,
                          std::uint32_t extents_per_table = 1);

// Device image of a flat table file: rows packed per page, page tails zeroed.
std::vector<std::byte> pack_table_image(std::span<const std::byte> flat_file, const TableSpec& table,
                                        std::uint32_t page_size);

struct EvRequest {
  std::uint32_t query = 0;
  std::uint32_t table_id = 0;
  std::uint32_t position = 0;  // index position inside the query's table list
  std::uint64_t index = 0;
  PhysAddr target;
  Nanos issue = 0;
};

struct PageRead {
  PhysAddr page;                      // offset unused
  std::vector<std::size_t> requests;  // indices into the dispatched batch
  Nanos release = 0;                  // earliest issue among its requests
};

// Pending page reads keyed by physical page; each page appears once.
class PathBuffer {
 public:
  explicit PathBuffer(const SsdGeometry& geometry) : geometry_(geometry) {}

  // Returns true if the request opened a new page read.
  bool log(std::size_t request_id, const EvRequest& request);

  const std::vector<PageRead>& reads() const { return reads_; }
  // Per (channel * dies_per_channel + die): read ids in first-arrival order.
  const std::vector<std::vector<std::size_t>>& die_queues() const { return die_queues_; }
  void clear();

 private:
  SsdGeometry geometry_;
  std::vector<PageRead> reads_;
  std::unordered_map<std::uint64_t, std::size_t> by_page_;
  std::vector<std::vector<std::size_t>> die_queues_;
};

struct DispatchPlan {
  std::vector<PageRead> reads;
  std::vector<std::vector<std::size_t>> die_queues;
  std::vector<PageOp> page_ops;  // parallel to reads, EV class
};

// Coalesces requests by physical page; the coalescing window is the batch.
DispatchPlan dispatch(std::span<const EvRequest> batch, const SsdGeometry& geometry);

// Adder interval for one EV: ceil(ev_dim / kc_e) FC-clock cycles.
Nanos ev_add_interval(std::uint32_t ev_dim, std::uint32_t kc_e, const TimingParams& timing);

struct FetchedEv {
  std::span<const float> values;
  Nanos arrival = 0;
};

struct EvSumResult {
  std::vector<float> concatenated;  // ev_dim * num tables
  Nanos completion = 0;
};

// One adder consumes EVs in arrival order (ties by table, then position),
// one EV per interval; the functional sum per table folds in position order,
// matching ev_lookup_sum bit for bit.
EvSumResult ev_sum_engine(const std::vector<std::vector<FetchedEv>>& per_table,
                          Nanos add_interval);

struct LookupResult {
  Nanos start = 0;
  Nanos end = 0;   // completion of the last EV sum
  Nanos t_emb = 0; // end - start
  std::vector<Nanos> query_done;
  std::vector<std::vector<float>> query_vectors;  // empty when tables not given
  std::vector<PageOp> page_ops;  // parallel to flash.ops
  FlashRun flash;
  std::uint64_t ev_requests = 0;
  std::uint64_t page_reads = 0;
};

// translate -> dispatch -> flash -> EV sum for one batch starting at `start`
// with an idle flash array. Pass an empty `tables` span for timing only.
LookupResult simulate_lookup(const ModelSpec& model, std::span<const EmbeddingTable> tables,
                             std::span<const Query> batch, const SsdGeometry& geometry,
                             const TimingParams& timing, const ExtentMap& map,
                             std::uint32_t kc_e, Nanos start);

}  // namespace rmssd
