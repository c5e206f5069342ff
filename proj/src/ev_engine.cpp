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

#include "rmssd/ev_engine.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <tuple>

namespace rmssd {

TableExtents build_extent_map(const TableSpec& table, std::span<const FileExtent> file_extents,
                              const SsdGeometry& geometry) {
  geometry.validate();
  TableExtents te;
  te.spec = table;
  te.ev_bytes = table.ev_bytes();
  if (te.ev_bytes > geometry.page_size)
    throw ConfigError("ev_bytes " + std::to_string(te.ev_bytes) + " exceeds page_size " +
                      std::to_string(geometry.page_size));
  te.rows_per_page = geometry.page_size / te.ev_bytes;
  te.lbas_per_page = geometry.lbas_per_page();

  std::uint64_t file_page = 0;
  std::uint64_t covered = 0;
  for (const auto& fe : file_extents) {
    if (covered >= table.rows) break;
    if (fe.lba_count == 0 || fe.start_lba % te.lbas_per_page != 0 ||
        fe.lba_count % te.lbas_per_page != 0)
      throw ConfigError("file extent at lba " + std::to_string(fe.start_lba) + " (+" +
                        std::to_string(fe.lba_count) + ") is not page aligned");
    const std::uint64_t pages = fe.lba_count / te.lbas_per_page;
    Extent e;
    e.index_start = file_page * te.rows_per_page;
    e.index_count = std::min(pages * te.rows_per_page, table.rows - e.index_start);
    e.start_lba = fe.start_lba;
    te.extents.push_back(e);
    covered = e.index_start + e.index_count;
    file_page += pages;
  }
  if (covered < table.rows)
    throw ConfigError("file extents hold " + std::to_string(covered) + " of " +
                      std::to_string(table.rows) + " rows");
  return te;
}

EvLocation ExtentMap::translate_index(std::size_t table_id, std::uint64_t index) const {
  if (table_id >= tables_.size())
    throw RangeError("table id " + std::to_string(table_id) + " not in extent map");
  const TableExtents& te = tables_[table_id];
  if (index >= te.spec.rows)
    throw RangeError("table " + std::to_string(table_id) + ": index " + std::to_string(index) +
                     " out of range (rows " + std::to_string(te.spec.rows) + ")");
  auto it = std::upper_bound(te.extents.begin(), te.extents.end(), index,
                             [](std::uint64_t v, const Extent& e) { return v < e.index_start; });
  const Extent& e = *std::prev(it);
  const std::uint64_t rel = index - e.index_start;
  EvLocation loc;
  loc.lba = e.start_lba + (rel / te.rows_per_page) * te.lbas_per_page;
  loc.offset = static_cast<std::uint32_t>((rel % te.rows_per_page) * te.ev_bytes);
  return loc;
}

TableLayout layout_tables(const ModelSpec& model, const SsdGeometry& geometry,
                          std::uint32_t extents_per_table) {
  model.validate();
  geometry.validate();
  if (extents_per_table < 1) throw ConfigError("layout: extents_per_table must be >= 1");
  const std::uint64_t lpp = geometry.lbas_per_page();
  TableLayout layout;
  std::vector<TableExtents> maps;
  std::uint64_t cursor = 0;  // in pages
  for (const auto& t : model.tables) {
    if (t.ev_bytes() > geometry.page_size)
      throw ConfigError("ev_bytes " + std::to_string(t.ev_bytes()) + " exceeds page_size");
    const std::uint64_t rpp = geometry.page_size / t.ev_bytes();
    const std::uint64_t pages = ceil_div(t.rows, rpp);
    const std::uint64_t n = std::min<std::uint64_t>(extents_per_table, pages);
    std::vector<std::uint64_t> sizes(n, pages / n);
    for (std::uint64_t j = 0; j < pages % n; ++j) ++sizes[j];
    std::vector<FileExtent> file(n);
    for (std::uint64_t j = n; j-- > 0;) {
      file[j] = FileExtent{cursor * lpp, sizes[j] * lpp};
      cursor += sizes[j] + (n > 1 ? 1 : 0);
    }
    maps.push_back(build_extent_map(t, file, geometry));
    layout.files.push_back(std::move(file));
  }
  if (cursor > geometry.total_pages())
    throw ConfigError("tables need " + std::to_string(cursor) + " pages; device has " +
                      std::to_string(geometry.total_pages()));
  layout.map = ExtentMap(std::move(maps));
  return layout;
}

std::vector<std::byte> pack_table_image(std::span<const std::byte> flat_file, const TableSpec& table,
                                        std::uint32_t page_size) {
  const std::uint64_t ev_bytes = table.ev_bytes();
  if (ev_bytes > page_size) throw ConfigError("ev_bytes exceeds page_size");
  if (flat_file.size() != table.rows * ev_bytes)
    throw ShapeError("flat table file: expected " + std::to_string(table.rows * ev_bytes) +
                     " bytes, got " + std::to_string(flat_file.size()));
  const std::uint64_t rpp = page_size / ev_bytes;
  std::vector<std::byte> image(ceil_div(table.rows, rpp) * page_size, std::byte{0});
  for (std::uint64_t r = 0; r < table.rows; ++r)
    std::memcpy(image.data() + (r / rpp) * page_size + (r % rpp) * ev_bytes,
                flat_file.data() + r * ev_bytes, ev_bytes);
  return image;
}

bool PathBuffer::log(std::size_t request_id, const EvRequest& request) {
  if (die_queues_.empty()) die_queues_.resize(geometry_.dies());
  PhysAddr page = request.target;
  page.offset = 0;
  const std::uint64_t key =
      page.page * geometry_.dies() + std::uint64_t{page.die} * geometry_.channels + page.channel;
  auto [it, inserted] = by_page_.try_emplace(key, reads_.size());
  if (inserted) {
    reads_.push_back(PageRead{page, {}, request.issue});
    die_queues_[page.channel * geometry_.dies_per_channel + page.die].push_back(it->second);
  }
  PageRead& read = reads_[it->second];
  read.requests.push_back(request_id);
  read.release = std::min(read.release, request.issue);
  return inserted;
}

void PathBuffer::clear() {
  reads_.clear();
  by_page_.clear();
  die_queues_.assign(geometry_.dies(), {});
}

DispatchPlan dispatch(std::span<const EvRequest> batch, const SsdGeometry& geometry) {
  PathBuffer path(geometry);
  path.clear();
  for (std::size_t i = 0; i < batch.size(); ++i) path.log(i, batch[i]);
  DispatchPlan plan;
  plan.reads = path.reads();
  plan.die_queues = path.die_queues();
  plan.page_ops.reserve(plan.reads.size());
  for (const auto& r : plan.reads)
    plan.page_ops.push_back(PageOp{r.page.channel, r.page.die, r.page.page, IoClass::Ev, r.release});
  return plan;
}

Nanos ev_add_interval(std::uint32_t ev_dim, std::uint32_t kc_e, const TimingParams& timing) {
  if (kc_e < 1 || kc_e > ev_dim)
    throw RangeError("EV-sum kernel width " + std::to_string(kc_e) + " outside [1, " +
                     std::to_string(ev_dim) + "]");
  return timing.cycles_to_ns(ceil_div(ev_dim, kc_e));
}

EvSumResult ev_sum_engine(const std::vector<std::vector<FetchedEv>>& per_table, Nanos add_interval) {
  EvSumResult result;
  std::vector<std::tuple<Nanos, std::size_t, std::size_t>> order;
  for (std::size_t t = 0; t < per_table.size(); ++t) {
    const auto& evs = per_table[t];
    if (evs.empty()) throw ConfigError("ev_sum_engine: table " + std::to_string(t) + " fetched no EVs");
    std::vector<float> acc(evs[0].values.begin(), evs[0].values.end());
    for (std::size_t p = 1; p < evs.size(); ++p) {
      if (evs[p].values.size() != acc.size()) throw ShapeError("ev_sum_engine: EV width mismatch");
      for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += evs[p].values[d];
    }
    result.concatenated.insert(result.concatenated.end(), acc.begin(), acc.end());
    for (std::size_t p = 0; p < evs.size(); ++p) order.emplace_back(evs[p].arrival, t, p);
  }
  std::sort(order.begin(), order.end());
  Nanos adder = 0;
  for (const auto& [arrival, t, p] : order) adder = std::max(adder, arrival) + add_interval;
  result.completion = adder;
  return result;
}

LookupResult simulate_lookup(const ModelSpec& model, std::span<const EmbeddingTable> tables,
                             std::span<const Query> batch, const SsdGeometry& geometry,
                             const TimingParams& timing, const ExtentMap& map,
                             std::uint32_t kc_e, Nanos start) {
  const Ftl ftl(geometry);
  const bool functional = !tables.empty();
  if (functional && tables.size() != model.num_tables())
    throw ShapeError("simulate_lookup: table count does not match model");
  if (map.num_tables() != model.num_tables())
    throw ShapeError("simulate_lookup: extent map does not match model");
  const Nanos interval = ev_add_interval(model.ev_dim(), kc_e, timing);

  LookupResult r;
  r.start = start;
  r.end = start;
  r.query_done.assign(batch.size(), start);

  std::vector<EvRequest> requests;
  for (std::size_t q = 0; q < batch.size(); ++q) {
    validate_query(model, batch[q]);
    for (std::size_t t = 0; t < model.num_tables(); ++t) {
      const auto& list = batch[q].indices[t];
      for (std::size_t p = 0; p < list.size(); ++p) {
        const EvLocation loc = map.translate_index(t, list[p]);
        EvRequest req;
        req.query = static_cast<std::uint32_t>(q);
        req.table_id = static_cast<std::uint32_t>(t);
        req.position = static_cast<std::uint32_t>(p);
        req.index = list[p];
        req.target = ftl.translate(loc.lba);
        req.target.offset = loc.offset;
        req.issue = start;
        requests.push_back(req);
      }
    }
  }
  r.ev_requests = requests.size();
  if (requests.empty()) return r;

  const DispatchPlan plan = dispatch(requests, geometry);
  r.page_reads = plan.reads.size();
  r.flash = run_flash(geometry, timing, plan.page_ops);
  r.page_ops = plan.page_ops;

  std::vector<Nanos> arrival(requests.size());
  for (std::size_t k = 0; k < plan.reads.size(); ++k)
    for (auto req : plan.reads[k].requests) arrival[req] = r.flash.ops[k].xfer_end;

  // Shared adder over the whole batch.
  std::vector<std::size_t> order(requests.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(arrival[a], requests[a].query, requests[a].table_id, requests[a].position) <
           std::tie(arrival[b], requests[b].query, requests[b].table_id, requests[b].position);
  });
  Nanos adder = start;
  for (auto i : order) {
    adder = std::max(adder, arrival[i]) + interval;
    r.query_done[requests[i].query] = std::max(r.query_done[requests[i].query], adder);
  }
  r.end = adder;
  r.t_emb = r.end - r.start;

  if (functional) {
    r.query_vectors.resize(batch.size());
    std::size_t cursor = 0;
    for (std::size_t q = 0; q < batch.size(); ++q) {
      std::vector<std::vector<FetchedEv>> fetched(model.num_tables());
      for (std::size_t t = 0; t < model.num_tables(); ++t)
        for (std::size_t p = 0; p < batch[q].indices[t].size(); ++p, ++cursor)
          fetched[t].push_back(FetchedEv{tables[t].row(requests[cursor].index), arrival[cursor]});
      r.query_vectors[q] = ev_sum_engine(fetched, interval).concatenated;
    }
  }
  return r;
}

}  // namespace rmssd
