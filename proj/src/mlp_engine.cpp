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

#include "rmssd/mlp_engine.hpp"

#include <algorithm>

namespace rmssd {

void check_kernel(std::uint32_t rows, std::uint32_t cols, Kernel k) {
  if (k.kr < 1 || k.kr > rows || k.kc < 1 || k.kc > cols)
    throw RangeError("kernel (" + std::to_string(k.kr) + "," + std::to_string(k.kc) +
                     ") exceeds layer " + std::to_string(rows) + "x" + std::to_string(cols));
}

std::uint32_t adder_tree_fill(Kernel k) { return ceil_log2(std::max<std::uint32_t>(k.kr, 2)); }

std::uint64_t fc_cycles(std::uint32_t rows, std::uint32_t cols, Kernel k, std::uint32_t batch) {
  check_kernel(rows, cols, k);
  return ceil_div(rows, k.kr) * ceil_div(cols, k.kc) * batch + adder_tree_fill(k);
}

DecomposedLayer decompose_l0(const DenseLayer& l0, std::uint32_t r_b, std::uint32_t r_e) {
  if (r_b < 1 || r_e < 1 || r_b + r_e != l0.in)
    throw ShapeError("decompose_l0: R_b + R_e = " + std::to_string(r_b + r_e) +
                     " but layer has R = " + std::to_string(l0.in));
  std::vector<float> wb, we;
  wb.reserve(static_cast<std::size_t>(l0.out) * r_b);
  we.reserve(static_cast<std::size_t>(l0.out) * r_e);
  for (std::uint32_t o = 0; o < l0.out; ++o) {
    for (std::uint32_t i = 0; i < r_b; ++i) wb.push_back(l0.weight(o, i));
    for (std::uint32_t i = 0; i < r_e; ++i) we.push_back(l0.weight(o, r_b + i));
  }
  return DecomposedLayer{
      DenseLayer(r_b, l0.out, std::move(wb), l0.bias, l0.activation),
      DenseLayer(r_e, l0.out, std::move(we), std::vector<float>(l0.out, 0.0f), l0.activation)};
}

std::vector<float> decomposed_forward(const DecomposedLayer& layer, std::span<const float> dense_in,
                                      std::span<const float> emb_in, SplitOrder order) {
  const DenseLayer& b = layer.dense_part;
  const DenseLayer& e = layer.emb_part;
  if (dense_in.size() != b.in || emb_in.size() != e.in)
    throw ShapeError("decomposed_forward: expected inputs " + std::to_string(b.in) + "+" +
                     std::to_string(e.in) + ", got " + std::to_string(dense_in.size()) + "+" +
                     std::to_string(emb_in.size()));
  std::vector<float> out(b.out);
  for (std::uint32_t o = 0; o < b.out; ++o) {
    float acc = 0.0f;
    if (order == SplitOrder::Sequential) {
      for (std::uint32_t i = 0; i < b.in; ++i) acc += b.weight(o, i) * dense_in[i];
      for (std::uint32_t i = 0; i < e.in; ++i) acc += e.weight(o, i) * emb_in[i];
    } else {
      float pb = 0.0f, pe = 0.0f;
      for (std::uint32_t i = 0; i < b.in; ++i) pb += b.weight(o, i) * dense_in[i];
      for (std::uint32_t i = 0; i < e.in; ++i) pe += e.weight(o, i) * emb_in[i];
      acc = pb + pe;
    }
    acc += b.bias[o];
    out[o] = activate(acc, b.activation);
  }
  return out;
}

float adder_tree_sum(std::span<const float> products) {
  if (products.empty()) return 0.0f;
  std::vector<float> level(products.begin(), products.end());
  while (level.size() > 1) {
    std::vector<float> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(level[i] + level[i + 1]);
    if (level.size() % 2) next.push_back(level.back());
    level.swap(next);
  }
  return level.front();
}

std::vector<float> mlp_forward_blocked(std::span<const DenseLayer> layers,
                                       std::span<const Kernel> kernels, std::span<const float> input) {
  if (layers.size() != kernels.size())
    throw ShapeError("mlp_forward_blocked: " + std::to_string(layers.size()) + " layers but " +
                     std::to_string(kernels.size()) + " kernels");
  if (layers.empty()) throw ShapeError("mlp_forward_blocked: no layers");
  std::vector<float> x(input.begin(), input.end());
  std::vector<float> products;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (x.size() != layer.in)
      throw ShapeError("mlp layer " + std::to_string(l) + ": expected input width " +
                       std::to_string(layer.in) + ", got " + std::to_string(x.size()));
    const Kernel k = kernels[l];
    check_kernel(layer.in, layer.out, k);
    std::vector<float> y(layer.out);
    for (std::uint32_t o = 0; o < layer.out; ++o) {
      float acc = 0.0f;
      for (std::uint32_t r0 = 0; r0 < layer.in; r0 += k.kr) {
        const std::uint32_t r1 = std::min(layer.in, r0 + k.kr);
        products.clear();
        for (std::uint32_t r = r0; r < r1; ++r) products.push_back(layer.weight(o, r) * x[r]);
        acc += adder_tree_sum(products);
      }
      acc += layer.bias[o];
      y[o] = activate(acc, layer.activation);
    }
    x.swap(y);
  }
  return x;
}

std::vector<FcLayerSpec> alternate_scans(std::vector<FcLayerSpec> layers) {
  for (std::size_t l = 0; l < layers.size(); ++l)
    layers[l].scan = (l % 2 == 0) ? ScanDir::Column : ScanDir::Row;
  return layers;
}

namespace {

struct UnitShape {
  std::uint64_t count = 0;
  std::uint64_t cycles = 0;
};

UnitShape unit_shape(const FcLayerSpec& layer, Kernel k, std::uint32_t batch) {
  UnitShape s;
  if (layer.scan == ScanDir::Column) {
    s.count = ceil_div(layer.cols, k.kc);
    s.cycles = ceil_div(layer.rows, k.kr) * batch;
  } else {
    s.count = ceil_div(layer.rows, k.kr);
    s.cycles = ceil_div(layer.cols, k.kc) * batch;
  }
  if (layer.min_cycles > s.count * s.cycles) s.cycles = ceil_div(layer.min_cycles, s.count);
  return s;
}

void check_chain(std::span<const FcLayerSpec> layers, std::span<const Kernel> kernels,
                 std::uint32_t batch) {
  if (layers.size() != kernels.size())
    throw ShapeError("pipeline: " + std::to_string(layers.size()) + " layers but " +
                     std::to_string(kernels.size()) + " kernels");
  if (batch < 1) throw ConfigError("pipeline: batch must be >= 1");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    check_kernel(layers[l].rows, layers[l].cols, kernels[l]);
    const ScanDir want = (l % 2 == 0) ? ScanDir::Column : ScanDir::Row;
    if (layers[l].scan != want)
      throw ConfigError("pipeline: layer " + std::to_string(l) +
                        " breaks the Column/Row alternation");
    if (l > 0 && layers[l].rows != layers[l - 1].cols)
      throw ShapeError("pipeline: layer " + std::to_string(l) + " input width " +
                       std::to_string(layers[l].rows) + " != previous output width " +
                       std::to_string(layers[l - 1].cols));
  }
}

}  // namespace

PipelineSchedule pipeline_schedule(std::span<const FcLayerSpec> layers,
                                   std::span<const Kernel> kernels, std::uint32_t batch,
                                   std::span<const std::uint64_t> input_ready, bool record_units) {
  check_chain(layers, kernels, batch);
  PipelineSchedule s;
  if (layers.empty()) return s;
  if (!input_ready.empty() && input_ready.size() != layers[0].rows)
    throw ShapeError("pipeline: input profile has " + std::to_string(input_ready.size()) +
                     " entries, first layer expects " + std::to_string(layers[0].rows));

  std::vector<std::uint64_t> avail(input_ready.begin(), input_ready.end());
  if (avail.empty()) avail.assign(layers[0].rows, 0);

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const FcLayerSpec& layer = layers[l];
    const Kernel k = kernels[l];
    const UnitShape shape = unit_shape(layer, k, batch);
    const std::uint64_t fill = adder_tree_fill(k);
    std::vector<std::uint64_t> out(layer.cols);
    LayerSpan span;
    if (layer.scan == ScanDir::Column) {
      const std::uint64_t ready = *std::max_element(avail.begin(), avail.end());
      span.start = ready;
      for (std::uint64_t g = 0; g < shape.count; ++g) {
        const std::uint64_t start = ready + g * shape.cycles;
        const std::uint64_t end = start + shape.cycles;
        const std::uint64_t visible = end + fill;
        const std::uint64_t c0 = g * k.kc;
        const std::uint64_t c1 = std::min<std::uint64_t>(layer.cols, c0 + k.kc);
        for (std::uint64_t c = c0; c < c1; ++c) out[c] = visible;
        if (record_units)
          s.units.push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(g), ready,
                             start, end, visible});
      }
      span.end = ready + shape.count * shape.cycles + fill;
    } else {
      std::uint64_t busy = 0;
      for (std::uint64_t h = 0; h < shape.count; ++h) {
        const std::uint64_t r0 = h * k.kr;
        const std::uint64_t r1 = std::min<std::uint64_t>(layer.rows, r0 + k.kr);
        const std::uint64_t ready = *std::max_element(avail.begin() + r0, avail.begin() + r1);
        const std::uint64_t start = std::max(ready, busy);
        if (h == 0) span.start = start;
        busy = start + shape.cycles;
        if (record_units)
          s.units.push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(h), ready,
                             start, busy, 0});
      }
      span.end = busy + fill;
      std::fill(out.begin(), out.end(), span.end);
      if (record_units)
        for (auto it = s.units.rbegin(); it != s.units.rend() && it->layer == l; ++it)
          it->available = span.end;
    }
    s.layers.push_back(span);
    s.makespan = std::max(s.makespan, span.end);
    avail.swap(out);
  }
  return s;
}

std::uint64_t conventional_makespan(std::span<const FcLayerSpec> layers,
                                    std::span<const Kernel> kernels, std::uint32_t batch) {
  if (layers.size() != kernels.size()) throw ShapeError("conventional_makespan: size mismatch");
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    check_kernel(layers[l].rows, layers[l].cols, kernels[l]);
    const UnitShape shape = unit_shape(layers[l], kernels[l], batch);
    total += shape.count * shape.cycles + adder_tree_fill(kernels[l]);
  }
  return total;
}

std::string check_causality(const PipelineSchedule& schedule, std::span<const FcLayerSpec> layers,
                            std::span<const Kernel> kernels) {
  std::vector<std::vector<const ScheduleUnit*>> by_layer(layers.size());
  for (const auto& u : schedule.units) {
    if (u.layer >= layers.size()) return "unit references unknown layer";
    by_layer[u.layer].push_back(&u);
  }
  std::uint64_t makespan = 0;
  std::vector<std::uint64_t> produced;  // previous layer output availability
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& units = by_layer[l];
    const Kernel k = kernels[l];
    const std::string where = "layer " + std::to_string(l);
    std::uint64_t prev_end = 0;
    for (const auto* u : units) {
      if (u->start < u->ready) return where + ": unit starts before its inputs are ready";
      if (u->start < prev_end) return where + ": units overlap on one kernel";
      if (u->available < u->end) return where + ": output visible before it is computed";
      prev_end = u->end;
      makespan = std::max(makespan, u->available);
      if (l == 0) continue;
      std::uint64_t need = 0;
      if (layers[l].scan == ScanDir::Column) {
        need = *std::max_element(produced.begin(), produced.end());
      } else {
        const std::uint64_t r0 = std::uint64_t{u->unit} * k.kr;
        const std::uint64_t r1 = std::min<std::uint64_t>(layers[l].rows, r0 + k.kr);
        for (std::uint64_t r = r0; r < r1; ++r) need = std::max(need, produced[r]);
      }
      if (u->start < need) return where + ": consumes input before it is produced";
    }
    produced.assign(layers[l].cols, 0);
    for (const auto* u : units) {
      if (layers[l].scan == ScanDir::Column) {
        const std::uint64_t c0 = std::uint64_t{u->unit} * k.kc;
        const std::uint64_t c1 = std::min<std::uint64_t>(layers[l].cols, c0 + k.kc);
        for (std::uint64_t c = c0; c < c1; ++c) produced[c] = u->available;
      } else {
        for (auto& p : produced) p = std::max(p, u->available);
      }
    }
  }
  if (makespan != schedule.makespan) return "makespan differs from the latest output";
  return {};
}

}  // namespace rmssd
