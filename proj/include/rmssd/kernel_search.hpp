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

// Kernel-size search: choose per-layer (kr, kc) blocks and the EV-sum width
// minimising total kernel area subject to
//   T_bot <= T_emb  and  T_top <= T_emb.
//
// The device runs the first top layer decomposed: its bottom-MLP columns
// (W_b) extend the bottom chain and its embedding columns (W_e) open the top
// chain, so the two chains are timed independently.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rmssd/mlp_engine.hpp"
#include "rmssd/storage.hpp"
#include "rmssd/workload.hpp"

namespace rmssd {

struct ResourceModel {
  double lut_per_mac = 50.0;
  double ff_per_mac = 60.0;
  double dsp_per_mac = 2.0;
  std::uint64_t bram_bytes = 4u << 20;
  double dram_bandwidth = 16e9;  // bytes per second, for spilled layers

  void validate() const;
  bool operator==(const ResourceModel&) const = default;
};

struct KernelAssignment {
  std::vector<Kernel> bottom;  // one per bottom-MLP layer
  Kernel l0_dense;             // W_b of the first top layer
  std::vector<Kernel> top;     // top[0] serves W_e, the embedding columns
  Kernel ev_sum;               // kr is fixed at 1

  // Sum of kr * kc over every kernel, EV-sum included.
  std::uint64_t objective() const;
  // bottom..., l0_dense, top..., ev_sum: the tie-break order.
  std::vector<Kernel> flattened() const;
  std::vector<Kernel> bottom_chain() const;
  // Throws RangeError unless every kernel is a power of two inside its layer.
  void validate(const ModelSpec& model) const;
  bool operator==(const KernelAssignment&) const = default;
};

struct SearchSpace {
  std::vector<std::uint32_t> kernel_sizes = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::uint32_t initial_batch = 1;
  std::uint32_t max_batch = 64;

  void validate() const;
  // Allowed sizes not exceeding `dim`.
  std::vector<std::uint32_t> sizes_up_to(std::uint32_t dim) const;
  bool operator==(const SearchSpace&) const = default;
};

struct StageTimes {
  Nanos t_bot = 0;
  Nanos t_top = 0;
  Nanos t_emb = 0;
};

struct Resources {
  double lut = 0;
  double ff = 0;
  double dsp = 0;
  std::uint64_t bram_bytes = 0;  // weights resident on chip
  std::uint64_t dram_bytes = 0;  // weights spilled to DRAM
};

// Layer chains with alternating scans and the DRAM weight-fetch floor of
// spilled layers applied. Weights are placed on chip in network order until
// the first layer that no longer fits; that layer and all later ones spill.
std::vector<FcLayerSpec> bottom_chain(const ModelSpec& model, const ResourceModel& rm,
                                      const TimingParams& timing, std::uint32_t batch);
std::vector<FcLayerSpec> top_chain(const ModelSpec& model, const ResourceModel& rm,
                                   const TimingParams& timing, std::uint32_t batch);

// Weight fetch time for a spilled layer; charged once per batch.
Nanos weight_fetch_floor_ns(std::uint64_t bytes, double bandwidth);

struct SearchProblem {
  ModelSpec model;
  SsdGeometry geometry;
  TimingParams timing;
  ResourceModel resources;
  WorkloadParams profile;  // representative batch = first `batch` queries
  SearchSpace space;
  std::uint32_t extents_per_table = 1;
};

// T_emb for an EV-sum width and batch size.
using EmbTimeFn = std::function<Nanos(std::uint32_t kc_e, std::uint32_t batch)>;

// simulate_lookup over the problem's table layout and profile batch;
// memoised per (kc_e, batch).
EmbTimeFn simulated_emb_time(const SearchProblem& problem);

Nanos chain_time_ns(std::span<const FcLayerSpec> chain, std::span<const Kernel> kernels,
                    std::uint32_t batch, const TimingParams& timing);

StageTimes estimate_times(const SearchProblem& problem, const KernelAssignment& assignment,
                          std::uint32_t batch, const EmbTimeFn& emb_time);
StageTimes estimate_times(const SearchProblem& problem, const KernelAssignment& assignment,
                          std::uint32_t batch);

Resources resource_usage(const ModelSpec& model, const KernelAssignment& assignment,
                         const ResourceModel& rm);

KernelAssignment max_assignment(const ModelSpec& model, const SearchSpace& space);
KernelAssignment min_assignment(const ModelSpec& model, const SearchSpace& space);

struct SearchOutcome {
  bool feasible = false;
  KernelAssignment assignment;
  std::uint32_t batch = 1;
  StageTimes times;
  Resources resources;
  std::uint64_t objective = 0;
  Nanos slack_bot = 0;  // t_emb - t_bot
  Nanos slack_top = 0;  // t_emb - t_top
  std::string binding;  // violated constraint(s) when infeasible
  std::uint64_t evaluations = 0;
};

// Strict total order used to pick among candidates: objective, then DSPs,
// then the flattened kernel list lexicographically.
bool better_candidate(const KernelAssignment& a, const KernelAssignment& b, const ResourceModel& rm);

SearchOutcome search(const SearchProblem& problem, const EmbTimeFn& emb_time);
SearchOutcome search(const SearchProblem& problem);

struct ConstraintReport {
  StageTimes times;
  Nanos slack_bot = 0;
  Nanos slack_top = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ConstraintReport verify_constraints(const SearchProblem& problem, const SearchOutcome& outcome,
                                    const EmbTimeFn& emb_time);
ConstraintReport verify_constraints(const SearchProblem& problem, const SearchOutcome& outcome);

}  // namespace rmssd
