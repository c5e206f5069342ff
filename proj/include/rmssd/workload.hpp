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

#pragma once

#include <cstdint>
#include <vector>

#include "rmssd/recmodel.hpp"

namespace rmssd {

enum class IndexDistribution { Uniform, Zipf };

struct WorkloadParams {
  IndexDistribution distribution = IndexDistribution::Uniform;
  double zipf_s = 1.05;
  std::uint32_t pooling = 20;
  std::uint64_t count = 10000;
  std::uint64_t seed = 9;

  void validate() const;
};

// Zipf over ranks [0, n); rank r has weight 1 / (r + 1)^s and maps to row r.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t n, double s);
  std::uint64_t sample(Rng& rng) const;
  // P(rank < k).
  double cdf(std::uint64_t k) const;

 private:
  std::vector<double> cumulative_;
};

// Per query: per table `pooling` indices, then dense_dim features in [0, 1).
std::vector<Query> generate_workload(const ModelSpec& model,
                                     const WorkloadParams& params);

}  // namespace rmssd
