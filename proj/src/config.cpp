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

#include "rmssd/config.hpp"

#include <fstream>
#include <set>

namespace rmssd {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!allowed.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

// Reads obj[key] into out if present, with a typed error message.
template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<std::int64_t>() >= 0))
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(where + "." + key + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(where + "." + key + ": expected a string");
    }
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

Kernel kernel_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
    throw ConfigError(where + ": expected [kr, kc]");
  return Kernel{j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>()};
}

json kernel_to_json(Kernel k) { return json::array({k.kr, k.kc}); }

std::string distribution_name(IndexDistribution d) {
  return d == IndexDistribution::Zipf ? "zipf" : "uniform";
}

}  // namespace

ModelSpec model_from_json(const json& j) {
  allow_keys(j, "model", {"preset", "name", "dense_dim", "bottom_mlp_dims", "top_mlp_dims", "tables",
                          "interaction", "weight_seed", "table_files"});
  ModelSpec m;
  if (j.contains("preset")) {
    for (const char* k : {"name", "dense_dim", "bottom_mlp_dims", "top_mlp_dims", "tables", "interaction"})
      if (j.contains(k)) throw ConfigError(std::string("model: '") + k + "' cannot be combined with 'preset'");
    std::string preset;
    read(j, "preset", "model", preset);
    return preset_model(preset);
  }
  for (const char* k : {"dense_dim", "bottom_mlp_dims", "top_mlp_dims", "tables"})
    if (!j.contains(k)) throw ConfigError(std::string("model: missing '") + k + "' (or give 'preset')");
  m.name = "custom";
  read(j, "name", "model", m.name);
  read(j, "dense_dim", "model", m.dense_dim);
  read(j, "bottom_mlp_dims", "model", m.bottom_mlp_dims);
  read(j, "top_mlp_dims", "model", m.top_mlp_dims);
  std::string interaction = "concat";
  read(j, "interaction", "model", interaction);
  if (interaction != "concat") throw ConfigError("model.interaction: only 'concat' is supported");
  if (!j["tables"].is_array()) throw ConfigError("model.tables: expected an array");
  for (const auto& t : j["tables"]) {
    allow_keys(t, "model.tables[]", {"rows", "ev_dim"});
    if (!t.contains("rows") || !t.contains("ev_dim"))
      throw ConfigError("model.tables[]: need 'rows' and 'ev_dim'");
    TableSpec ts;
    read(t, "rows", "model.tables[]", ts.rows);
    read(t, "ev_dim", "model.tables[]", ts.ev_dim);
    m.tables.push_back(ts);
  }
  m.validate();
  return m;
}

json model_to_json(const ModelSpec& m) {
  json tables = json::array();
  for (const auto& t : m.tables) tables.push_back({{"rows", t.rows}, {"ev_dim", t.ev_dim}});
  return {{"name", m.name},
          {"dense_dim", m.dense_dim},
          {"bottom_mlp_dims", m.bottom_mlp_dims},
          {"top_mlp_dims", m.top_mlp_dims},
          {"tables", tables},
          {"interaction", "concat"}};
}

KernelAssignment kernels_from_json(const json& j) {
  allow_keys(j, "scenario.kernels", {"bottom", "l0_dense", "top", "ev_sum"});
  for (const char* k : {"bottom", "l0_dense", "top", "ev_sum"})
    if (!j.contains(k)) throw ConfigError(std::string("scenario.kernels: missing '") + k + "'");
  KernelAssignment a;
  if (!j["bottom"].is_array() || !j["top"].is_array())
    throw ConfigError("scenario.kernels: 'bottom' and 'top' must be arrays of [kr, kc]");
  for (const auto& k : j["bottom"]) a.bottom.push_back(kernel_from_json(k, "scenario.kernels.bottom"));
  a.l0_dense = kernel_from_json(j["l0_dense"], "scenario.kernels.l0_dense");
  for (const auto& k : j["top"]) a.top.push_back(kernel_from_json(k, "scenario.kernels.top"));
  a.ev_sum = kernel_from_json(j["ev_sum"], "scenario.kernels.ev_sum");
  return a;
}

json kernels_to_json(const KernelAssignment& a) {
  json bottom = json::array(), top = json::array();
  for (auto k : a.bottom) bottom.push_back(kernel_to_json(k));
  for (auto k : a.top) top.push_back(kernel_to_json(k));
  return {{"bottom", bottom}, {"l0_dense", kernel_to_json(a.l0_dense)}, {"top", top},
          {"ev_sum", kernel_to_json(a.ev_sum)}};
}

Scenario scenario_from_json(const json& doc) {
  allow_keys(doc, "config", {"schema_version", "scenario", "model", "geometry", "timing", "workload",
                             "search", "resources", "layout"});
  int version = kConfigSchemaVersion;
  read(doc, "schema_version", "config", version);
  if (version != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(version));
  Scenario s;

  if (doc.contains("model")) {
    const json& j = doc["model"];
    s.model = model_from_json(j);
    read(j, "weight_seed", "model", s.weight_seed);
    read(j, "table_files", "model", s.table_files);
  }

  if (doc.contains("scenario")) {
    const json& j = doc["scenario"];
    allow_keys(j, "scenario", {"mode", "dram_fraction", "kernels", "batch", "horizon_ns",
                               "functional_check", "record_traces"});
    std::string mode = mode_name(s.mode);
    read(j, "mode", "scenario", mode);
    s.mode = parse_mode(mode);
    read(j, "dram_fraction", "scenario", s.dram_fraction);
    read(j, "batch", "scenario", s.batch);
    read(j, "horizon_ns", "scenario", s.horizon_ns);
    read(j, "functional_check", "scenario", s.functional_check);
    read(j, "record_traces", "scenario", s.record_traces);
    if (j.contains("kernels")) {
      if (j["kernels"].is_string()) {
        if (j["kernels"] != "auto") throw ConfigError("scenario.kernels: expected \"auto\" or an object");
      } else {
        s.kernels = kernels_from_json(j["kernels"]);
      }
    }
  }

  if (doc.contains("geometry")) {
    const json& j = doc["geometry"];
    allow_keys(j, "geometry", {"channels", "dies_per_channel", "page_size", "lba_size",
                               "pages_per_block", "blocks_per_die"});
    read(j, "channels", "geometry", s.geometry.channels);
    read(j, "dies_per_channel", "geometry", s.geometry.dies_per_channel);
    read(j, "page_size", "geometry", s.geometry.page_size);
    read(j, "lba_size", "geometry", s.geometry.lba_size);
    read(j, "pages_per_block", "geometry", s.geometry.pages_per_block);
    read(j, "blocks_per_die", "geometry", s.geometry.blocks_per_die);
  }

  if (doc.contains("timing")) {
    const json& j = doc["timing"];
    allow_keys(j, "timing", {"page_read_us", "channel_transfer_ns_per_byte", "dram_hit_ns",
                             "host_interface_ns_per_byte", "fc_clock_mhz", "host_block_io_overhead_us",
                             "host_mlp_ns_per_mac", "host_mlp_layer_ns"});
    auto& t = s.timing;
    read(j, "page_read_us", "timing", t.page_read_us);
    read(j, "channel_transfer_ns_per_byte", "timing", t.channel_transfer_ns_per_byte);
    read(j, "dram_hit_ns", "timing", t.dram_hit_ns);
    read(j, "host_interface_ns_per_byte", "timing", t.host_interface_ns_per_byte);
    read(j, "fc_clock_mhz", "timing", t.fc_clock_mhz);
    read(j, "host_block_io_overhead_us", "timing", t.host_block_io_overhead_us);
    read(j, "host_mlp_ns_per_mac", "timing", t.host_mlp_ns_per_mac);
    read(j, "host_mlp_layer_ns", "timing", t.host_mlp_layer_ns);
  }

  if (doc.contains("workload")) {
    const json& j = doc["workload"];
    allow_keys(j, "workload", {"distribution", "zipf_s", "pooling", "queries", "seed"});
    std::string dist = distribution_name(s.workload.distribution);
    read(j, "distribution", "workload", dist);
    if (dist == "uniform") s.workload.distribution = IndexDistribution::Uniform;
    else if (dist == "zipf") s.workload.distribution = IndexDistribution::Zipf;
    else throw ConfigError("workload.distribution: expected 'uniform' or 'zipf'");
    read(j, "zipf_s", "workload", s.workload.zipf_s);
    read(j, "pooling", "workload", s.workload.pooling);
    read(j, "queries", "workload", s.workload.count);
    read(j, "seed", "workload", s.workload.seed);
  }

  if (doc.contains("search")) {
    const json& j = doc["search"];
    allow_keys(j, "search", {"kernel_sizes", "initial_batch", "max_batch"});
    read(j, "kernel_sizes", "search", s.search.kernel_sizes);
    read(j, "initial_batch", "search", s.search.initial_batch);
    read(j, "max_batch", "search", s.search.max_batch);
  }

  if (doc.contains("resources")) {
    const json& j = doc["resources"];
    allow_keys(j, "resources", {"lut_per_mac", "ff_per_mac", "dsp_per_mac", "bram_bytes", "dram_bandwidth"});
    read(j, "lut_per_mac", "resources", s.resources.lut_per_mac);
    read(j, "ff_per_mac", "resources", s.resources.ff_per_mac);
    read(j, "dsp_per_mac", "resources", s.resources.dsp_per_mac);
    read(j, "bram_bytes", "resources", s.resources.bram_bytes);
    read(j, "dram_bandwidth", "resources", s.resources.dram_bandwidth);
  }

  if (doc.contains("layout")) {
    const json& j = doc["layout"];
    allow_keys(j, "layout", {"extents_per_table"});
    read(j, "extents_per_table", "layout", s.extents_per_table);
  }

  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json model = model_to_json(s.model);
  model["weight_seed"] = s.weight_seed;
  model["table_files"] = s.table_files;
  const auto& t = s.timing;
  const auto& g = s.geometry;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"scenario",
       {{"mode", mode_name(s.mode)},
        {"dram_fraction", s.dram_fraction},
        {"kernels", s.kernels ? kernels_to_json(*s.kernels) : json("auto")},
        {"batch", s.batch},
        {"horizon_ns", s.horizon_ns},
        {"functional_check", s.functional_check},
        {"record_traces", s.record_traces}}},
      {"model", model},
      {"geometry",
       {{"channels", g.channels},
        {"dies_per_channel", g.dies_per_channel},
        {"page_size", g.page_size},
        {"lba_size", g.lba_size},
        {"pages_per_block", g.pages_per_block},
        {"blocks_per_die", g.blocks_per_die}}},
      {"timing",
       {{"page_read_us", t.page_read_us},
        {"channel_transfer_ns_per_byte", t.channel_transfer_ns_per_byte},
        {"dram_hit_ns", t.dram_hit_ns},
        {"host_interface_ns_per_byte", t.host_interface_ns_per_byte},
        {"fc_clock_mhz", t.fc_clock_mhz},
        {"host_block_io_overhead_us", t.host_block_io_overhead_us},
        {"host_mlp_ns_per_mac", t.host_mlp_ns_per_mac},
        {"host_mlp_layer_ns", t.host_mlp_layer_ns}}},
      {"workload",
       {{"distribution", distribution_name(s.workload.distribution)},
        {"zipf_s", s.workload.zipf_s},
        {"pooling", s.workload.pooling},
        {"queries", s.workload.count},
        {"seed", s.workload.seed}}},
      {"search",
       {{"kernel_sizes", s.search.kernel_sizes},
        {"initial_batch", s.search.initial_batch},
        {"max_batch", s.search.max_batch}}},
      {"resources",
       {{"lut_per_mac", s.resources.lut_per_mac},
        {"ff_per_mac", s.resources.ff_per_mac},
        {"dsp_per_mac", s.resources.dsp_per_mac},
        {"bram_bytes", s.resources.bram_bytes},
        {"dram_bandwidth", s.resources.dram_bandwidth}}},
      {"layout", {{"extents_per_table", s.extents_per_table}}},
  };
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace rmssd
