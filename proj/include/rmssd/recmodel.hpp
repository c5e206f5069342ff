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

// Recommendation model structure and the functional reference inference
// path. Every simulated configuration is checked against reference_inference.
//
// Accumulation order is part of the contract: dot products sum in ascending
// input index starting from +0.0f, the bias is added once the dot product is
// complete, and embedding lookups fold rows left to right in index-position
// order. Identical inputs therefore give bit-identical scores.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rmssd/common.hpp"

namespace rmssd {

struct TableSpec {
  std::uint64_t rows = 1;
  std::uint32_t ev_dim = 1;

  std::uint32_t ev_bytes() const { return ev_dim * 4; }
  bool operator==(const TableSpec&) const = default;
};

enum class Interaction { Concatenation };

// Layer width lists include the input width: bottom_mlp_dims = {13, 64, 16}
// describes 13 -> 64 -> 16. The first top-MLP width must equal the bottom
// output width plus num_tables * ev_dim.
struct ModelSpec {
  std::string name;
  std::uint32_t dense_dim = 1;
  std::vector<std::uint32_t> bottom_mlp_dims;
  std::vector<std::uint32_t> top_mlp_dims;
  std::vector<TableSpec> tables;
  Interaction interaction = Interaction::Concatenation;

  // Throws ConfigError naming the broken invariant.
  void validate() const;

  std::size_t num_tables() const { return tables.size(); }
  std::uint32_t ev_dim() const { return tables.front().ev_dim; }
  std::uint32_t bottom_output_width() const { return bottom_mlp_dims.back(); }
  std::uint32_t embedding_width() const {
    return static_cast<std::uint32_t>(num_tables()) * ev_dim();
  }
  std::uint64_t total_table_bytes() const;

  bool operator==(const ModelSpec&) const = default;
};

class EmbeddingTable {
 public:
  EmbeddingTable(TableSpec spec, std::vector<float> values);

  const TableSpec& spec() const { return spec_; }
  std::span<const float> row(std::uint64_t index) const {
    return {values_.data() + index * spec_.ev_dim, spec_.ev_dim};
  }
  std::span<const float> values() const { return values_; }

 private:
  TableSpec spec_;
  std::vector<float> values_;
};

enum class Activation { Relu, Linear };

// Fully connected layer; weights are out x in, row-major.
struct DenseLayer {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  Activation activation = Activation::Relu;

  DenseLayer() = default;
  DenseLayer(std::uint32_t in, std::uint32_t out, std::vector<float> weights,
             std::vector<float> bias, Activation activation);

  float weight(std::uint32_t o, std::uint32_t i) const {
    return weights[static_cast<std::size_t>(o) * in + i];
  }
};

struct Query {
  std::vector<std::vector<std::uint64_t>> indices;  // one list per table
  std::vector<float> dense;
};

struct RecModel {
  ModelSpec spec;
  std::vector<DenseLayer> bottom;
  std::vector<DenseLayer> top;
  std::vector<EmbeddingTable> tables;
};

// Weights, biases and table values are drawn from a seeded uniform
// [-0.5, 0.5) stream in the order: bottom layers, top layers, tables.
RecModel build_model(const ModelSpec& spec, std::uint64_t seed);

// Hidden layers use ReLU; the final top layer is linear.
std::vector<DenseLayer> random_layers(std::span<const std::uint32_t> dims,
                                      bool final_linear, Rng& rng);

std::vector<float> ev_lookup_sum(const EmbeddingTable& table,
                                 std::span<const std::uint64_t> indices,
                                 std::size_t table_id = 0);

inline float activate(float v, Activation a) {
  return (a == Activation::Relu && !(v > 0.0f)) ? 0.0f : v;
}

std::vector<float> dense_forward(const DenseLayer& layer,
                                 std::span<const float> input);
std::vector<float> mlp_forward(std::span<const DenseLayer> layers,
                               std::span<const float> input);

void validate_query(const ModelSpec& spec, const Query& query);

float reference_inference(const RecModel& model, const Query& query);

// Flat table file: row-major FP32, little-endian, no header.
void write_table_file(const std::filesystem::path& path,
                      const EmbeddingTable& table);
EmbeddingTable read_table_file(const std::filesystem::path& path,
                               const TableSpec& spec);

// Desk-scale stand-in shapes. Only the rmc3-mini dimensions are specified;
// ncf-mini and wnd-mini are local stand-ins with no published layer sizes.
ModelSpec preset_model(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace rmssd
