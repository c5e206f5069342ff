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

#include "rmssd/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rmssd {

void WorkloadParams::validate() const {
  if (count < 1) throw ConfigError("workload: count must be >= 1");
  if (pooling < 1) throw ConfigError("workload: pooling must be >= 1");
  if (distribution == IndexDistribution::Zipf && !(zipf_s > 0.0))
    throw ConfigError("workload: zipf s must be > 0");
}

ZipfSampler::ZipfSampler(std::uint64_t n, double s) : cumulative_(n) {
  double acc = 0.0;
  for (std::uint64_t r = 0; r < n; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), s);
    cumulative_[r] = acc;
  }
  for (auto& c : cumulative_) c /= acc;
  cumulative_.back() = 1.0;
}

std::uint64_t ZipfSampler::sample(Rng& rng) const {
  const double u = rng.uniform01();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<std::uint64_t>(
      std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                               static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

double ZipfSampler::cdf(std::uint64_t k) const {
  if (k == 0) return 0.0;
  return cumulative_[std::min<std::uint64_t>(k, cumulative_.size()) - 1];
}

std::vector<Query> generate_workload(const ModelSpec& model, const WorkloadParams& params) {
  model.validate();
  params.validate();
  Rng rng(params.seed);
  std::map<std::uint64_t, ZipfSampler> samplers;
  if (params.distribution == IndexDistribution::Zipf)
    for (const auto& t : model.tables)
      if (!samplers.contains(t.rows)) samplers.emplace(t.rows, ZipfSampler(t.rows, params.zipf_s));

  std::vector<Query> queries(params.count);
  for (auto& q : queries) {
    q.indices.resize(model.num_tables());
    for (std::size_t t = 0; t < model.num_tables(); ++t) {
      auto& list = q.indices[t];
      list.resize(params.pooling);
      const std::uint64_t rows = model.tables[t].rows;
      for (auto& idx : list)
        idx = params.distribution == IndexDistribution::Uniform ? rng.below(rows)
                                                                : samplers.at(rows).sample(rng);
    }
    q.dense.resize(model.dense_dim);
    for (auto& v : q.dense) v = rng.uniform01f();
  }
  return queries;
}

}  // namespace rmssd
