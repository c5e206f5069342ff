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

#include "rmssd/recmodel.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rmssd {

namespace {

std::string dims_to_string(std::span<const std::uint32_t> dims) {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "->" : "") << dims[i];
  return os.str();
}

}  // namespace

void ModelSpec::validate() const {
  if (tables.empty()) throw ConfigError("model '" + name + "': no embedding tables");
  if (dense_dim < 1) throw ConfigError("model '" + name + "': dense_dim must be >= 1");
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (tables[t].rows < 1 || tables[t].ev_dim < 1)
      throw ConfigError("model '" + name + "': table " + std::to_string(t) +
                        " needs rows >= 1 and ev_dim >= 1");
    if (tables[t].ev_dim != tables.front().ev_dim)
      throw ConfigError("model '" + name + "': all tables must share ev_dim");
  }
  if (bottom_mlp_dims.size() < 2)
    throw ConfigError("model '" + name + "': bottom MLP needs at least one layer");
  if (top_mlp_dims.size() < 2)
    throw ConfigError("model '" + name + "': top MLP needs at least one layer");
  for (auto d : bottom_mlp_dims)
    if (d < 1) throw ConfigError("model '" + name + "': layer sizes must be >= 1");
  for (auto d : top_mlp_dims)
    if (d < 1) throw ConfigError("model '" + name + "': layer sizes must be >= 1");
  if (bottom_mlp_dims.front() != dense_dim)
    throw ConfigError("model '" + name + "': bottom MLP input " +
                      std::to_string(bottom_mlp_dims.front()) +
                      " != dense_dim " + std::to_string(dense_dim));
  const std::uint32_t want = bottom_output_width() + embedding_width();
  if (top_mlp_dims.front() != want)
    throw ConfigError("model '" + name + "': top MLP input width " +
                      std::to_string(top_mlp_dims.front()) + " != R_b + M*EV_dim = " +
                      std::to_string(want) + " (top " + dims_to_string(top_mlp_dims) + ")");
  if (top_mlp_dims.back() != 1)
    throw ConfigError("model '" + name + "': top MLP must end in a single score");
}

std::uint64_t ModelSpec::total_table_bytes() const {
  std::uint64_t total = 0;
  for (const auto& t : tables) total += t.rows * t.ev_bytes();
  return total;
}

EmbeddingTable::EmbeddingTable(TableSpec spec, std::vector<float> values)
    : spec_(spec), values_(std::move(values)) {
  if (spec_.rows < 1 || spec_.ev_dim < 1)
    throw ConfigError("embedding table needs rows >= 1 and ev_dim >= 1");
  if (values_.size() != spec_.rows * spec_.ev_dim)
    throw ShapeError("embedding table values: expected " +
                     std::to_string(spec_.rows * spec_.ev_dim) + " floats, got " +
                     std::to_string(values_.size()));
  for (float v : values_)
    if (!std::isfinite(v)) throw ConfigError("embedding table holds a non-finite value");
}

DenseLayer::DenseLayer(std::uint32_t in_, std::uint32_t out_, std::vector<float> weights_,
                       std::vector<float> bias_, Activation activation_)
    : in(in_), out(out_), weights(std::move(weights_)), bias(std::move(bias_)),
      activation(activation_) {
  if (in < 1 || out < 1) throw ShapeError("dense layer needs in >= 1 and out >= 1");
  if (weights.size() != static_cast<std::size_t>(in) * out)
    throw ShapeError("dense layer weights: expected " + std::to_string(out) + "x" +
                     std::to_string(in) + ", got " + std::to_string(weights.size()) +
                     " values");
  if (bias.size() != out)
    throw ShapeError("dense layer bias: expected " + std::to_string(out) + ", got " +
                     std::to_string(bias.size()));
}

std::vector<DenseLayer> random_layers(std::span<const std::uint32_t> dims,
                                      bool final_linear, Rng& rng) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::uint32_t in = dims[l];
    const std::uint32_t out = dims[l + 1];
    std::vector<float> w(static_cast<std::size_t>(in) * out);
    for (auto& x : w) x = rng.uniform(-0.5f, 0.5f);
    std::vector<float> b(out);
    for (auto& x : b) x = rng.uniform(-0.5f, 0.5f);
    const bool last = l + 2 == dims.size();
    layers.emplace_back(in, out, std::move(w), std::move(b),
                        (last && final_linear) ? Activation::Linear : Activation::Relu);
  }
  return layers;
}

RecModel build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  RecModel model;
  model.spec = spec;
  model.bottom = random_layers(spec.bottom_mlp_dims, false, rng);
  model.top = random_layers(spec.top_mlp_dims, true, rng);
  for (const auto& ts : spec.tables) {
    std::vector<float> values(ts.rows * ts.ev_dim);
    for (auto& v : values) v = rng.uniform(-0.5f, 0.5f);
    model.tables.emplace_back(ts, std::move(values));
  }
  return model;
}

std::vector<float> ev_lookup_sum(const EmbeddingTable& table,
                                 std::span<const std::uint64_t> indices,
                                 std::size_t table_id) {
  if (indices.empty())
    throw ConfigError("table " + std::to_string(table_id) + ": empty index list");
  for (auto idx : indices)
    if (idx >= table.spec().rows)
      throw RangeError("table " + std::to_string(table_id) + ": index " +
                       std::to_string(idx) + " out of range (rows " +
                       std::to_string(table.spec().rows) + ")");
  const auto first = table.row(indices[0]);
  std::vector<float> acc(first.begin(), first.end());
  for (std::size_t p = 1; p < indices.size(); ++p) {
    const auto r = table.row(indices[p]);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += r[d];
  }
  return acc;
}

std::vector<float> dense_forward(const DenseLayer& layer, std::span<const float> input) {
  if (input.size() != layer.in)
    throw ShapeError("dense layer input: expected " + std::to_string(layer.in) +
                     ", got " + std::to_string(input.size()));
  std::vector<float> out(layer.out);
  for (std::uint32_t o = 0; o < layer.out; ++o) {
    const float* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.in;
    float acc = 0.0f;
    for (std::uint32_t i = 0; i < layer.in; ++i) acc += w[i] * input[i];
    acc += layer.bias[o];
    out[o] = activate(acc, layer.activation);
  }
  return out;
}

std::vector<float> mlp_forward(std::span<const DenseLayer> layers,
                               std::span<const float> input) {
  if (layers.empty()) throw ShapeError("mlp_forward: no layers");
  std::vector<float> x(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (x.size() != layers[l].in)
      throw ShapeError("mlp layer " + std::to_string(l) + ": expected input width " +
                       std::to_string(layers[l].in) + ", got " + std::to_string(x.size()));
    x = dense_forward(layers[l], x);
  }
  return x;
}

void validate_query(const ModelSpec& spec, const Query& query) {
  if (query.indices.size() != spec.num_tables())
    throw ShapeError("query: expected index lists for " + std::to_string(spec.num_tables()) +
                     " tables, got " + std::to_string(query.indices.size()));
  for (std::size_t t = 0; t < spec.num_tables(); ++t) {
    if (query.indices[t].empty())
      throw ConfigError("query: table " + std::to_string(t) + " has no indices");
    for (auto idx : query.indices[t])
      if (idx >= spec.tables[t].rows)
        throw RangeError("table " + std::to_string(t) + ": index " + std::to_string(idx) +
                         " out of range (rows " + std::to_string(spec.tables[t].rows) + ")");
  }
  if (query.dense.size() != spec.dense_dim)
    throw ShapeError("query: expected " + std::to_string(spec.dense_dim) +
                     " dense features, got " + std::to_string(query.dense.size()));
  for (float v : query.dense)
    if (!std::isfinite(v)) throw ConfigError("query: non-finite dense feature");
}

float reference_inference(const RecModel& model, const Query& query) {
  validate_query(model.spec, query);
  std::vector<float> interaction = mlp_forward(model.bottom, query.dense);
  for (std::size_t t = 0; t < model.tables.size(); ++t) {
    const auto pooled = ev_lookup_sum(model.tables[t], query.indices[t], t);
    interaction.insert(interaction.end(), pooled.begin(), pooled.end());
  }
  return mlp_forward(model.top, interaction).front();
}

void write_table_file(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open table file for writing: " + path.string());
  std::vector<char> bytes;
  bytes.reserve(table.values().size() * 4);
  for (float v : table.values()) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ConfigError("short write to table file: " + path.string());
}

EmbeddingTable read_table_file(const std::filesystem::path& path, const TableSpec& spec) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open table file: " + path.string());
  const std::uint64_t want = spec.rows * spec.ev_dim * 4;
  const auto size = std::filesystem::file_size(path);
  if (size != want)
    throw ShapeError("table file " + path.string() + ": expected " + std::to_string(want) +
                     " bytes, got " + std::to_string(size));
  std::vector<unsigned char> bytes(size);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  std::vector<float> values(spec.rows * spec.ev_dim);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(u);
  }
  return EmbeddingTable(spec, std::move(values));
}

ModelSpec preset_model(const std::string& name) {
  ModelSpec m;
  m.name = name;
  if (name == "rmc3-mini") {
    m.dense_dim = 13;
    m.bottom_mlp_dims = {13, 64, 16};
    m.tables.assign(8, TableSpec{50000, 16});
    m.top_mlp_dims = {144, 64, 1};
  } else if (name == "ncf-mini") {
    m.dense_dim = 4;
    m.bottom_mlp_dims = {4, 16};
    m.tables.assign(2, TableSpec{50000, 32});
    m.top_mlp_dims = {80, 64, 32, 1};
  } else if (name == "wnd-mini") {
    m.dense_dim = 13;
    m.bottom_mlp_dims = {13, 32};
    m.tables.assign(6, TableSpec{20000, 8});
    m.top_mlp_dims = {80, 128, 64, 1};
  } else {
    throw ConfigError("unknown model preset '" + name + "'");
  }
  m.validate();
  return m;
}

std::vector<std::string> preset_names() { return {"rmc3-mini", "ncf-mini", "wnd-mini"}; }

}  // namespace rmssd
