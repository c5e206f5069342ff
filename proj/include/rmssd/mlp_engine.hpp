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

// Timing and functional model of the FC engine.
//
// Cycle model: one kr x kc weight block issues per cycle, and the kr-input
// adder tree adds ceil(log2(max(kr, 2))) cycles of fill once per layer.
//
// Adjacent layers alternate scan direction starting with Column. A Column
// layer needs its whole input vector, then emits kc outputs every
// ceil(R / kr) * B cycles. A Row layer folds kr-input chunks into partial
// sums for all of its outputs as soon as the chunk's inputs exist and
// releases every output at completion. A (Column, Row) pair therefore
// overlaps, and consecutive pairs serialize.

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmssd/recmodel.hpp"

namespace rmssd {

struct Kernel {
  std::uint32_t kr = 1;
  std::uint32_t kc = 1;
  std::uint64_t area() const { return std::uint64_t{kr} * kc; }
  auto operator<=>(const Kernel&) const = default;
};

enum class ScanDir { Column, Row };

struct FcLayerSpec {
  std::uint32_t rows = 1;  // R, input width
  std::uint32_t cols = 1;  // C, output width
  ScanDir scan = ScanDir::Column;
  // Lower bound on the layer's busy time in cycles (weights streamed from
  // off-chip DRAM); 0 when the weights are on chip.
  std::uint64_t min_cycles = 0;
};

void check_kernel(std::uint32_t rows, std::uint32_t cols, Kernel kernel);

std::uint64_t fc_cycles(std::uint32_t rows, std::uint32_t cols, Kernel kernel, std::uint32_t batch);
std::uint32_t adder_tree_fill(Kernel kernel);

// Column split of the first top-MLP layer into the bottom-MLP part (first
// r_b inputs) and the embedding part (last r_e inputs).
struct DecomposedLayer {
  DenseLayer dense_part;  // C x R_b, carries the bias
  DenseLayer emb_part;    // C x R_e, zero bias
};

DecomposedLayer decompose_l0(const DenseLayer& l0, std::uint32_t r_b, std::uint32_t r_e);

enum class SplitOrder {
  // One accumulator: dense-part products first, then embedding-part
  // products, then the bias. Bit-identical to the unsplit dense_forward.
  Sequential,
  // Two independent partial sums added at the end, as when both halves run
  // on separate kernels. Within FP32 rounding of the unsplit result.
  Independent,
};

std::vector<float> decomposed_forward(const DecomposedLayer& layer, std::span<const float> dense_in,
                                      std::span<const float> emb_in, SplitOrder order);

// Kernel-blocked forward pass. Per output, the row blocks are accumulated in
// ascending order into an accumulator starting at +0; each block's kr
// products are reduced by a pairwise adder tree (adjacent pairs per level,
// an odd tail carried up). Bias then activation on completion.
std::vector<float> mlp_forward_blocked(std::span<const DenseLayer> layers,
                                       std::span<const Kernel> kernels, std::span<const float> input);

float adder_tree_sum(std::span<const float> products);

struct ScheduleUnit {
  std::uint32_t layer = 0;
  std::uint32_t unit = 0;        // output group (Column) or input chunk (Row)
  std::uint64_t ready = 0;       // inputs available
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  std::uint64_t available = 0;   // outputs visible downstream
};

struct LayerSpan {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
};

// All times in FC-clock cycles.
struct PipelineSchedule {
  std::vector<LayerSpan> layers;
  std::vector<ScheduleUnit> units;  // empty when not recorded
  std::uint64_t makespan = 0;
};

// Alternating scan starting with Column. input_ready[i] is the cycle at which
// input i of the first layer is available (empty: all at 0).
PipelineSchedule pipeline_schedule(std::span<const FcLayerSpec> layers,
                                   std::span<const Kernel> kernels, std::uint32_t batch,
                                   std::span<const std::uint64_t> input_ready = {},
                                   bool record_units = true);

// Layer-after-layer execution, each layer waiting for the previous one.
std::uint64_t conventional_makespan(std::span<const FcLayerSpec> layers,
                                    std::span<const Kernel> kernels, std::uint32_t batch);

// Empty string if no unit starts before its inputs are ready and every
// layer's outputs follow its inputs; otherwise the first violation.
std::string check_causality(const PipelineSchedule& schedule, std::span<const FcLayerSpec> layers,
                            std::span<const Kernel> kernels);

// Scan directions forced by alternation.
std::vector<FcLayerSpec> alternate_scans(std::vector<FcLayerSpec> layers);

}  // namespace rmssd
