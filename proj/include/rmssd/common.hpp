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

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rmssd {

// Simulation clock: signed 64-bit nanoseconds.
using Nanos = std::int64_t;

// Model or configuration is malformed (shape chain, geometry, scenario).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Layer or vector dimensions do not chain.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Index, LBA or kernel outside its valid range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// No assignment satisfies the search constraints up to the batch cap.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Portable seeded generator. std::mt19937_64 output is fully specified by
// the standard; the distribution helpers below avoid the implementation
// defined std::*_distribution templates so streams match across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1p-53; }

  // Uniform in [0, 1) with 24 bits; exact in FP32.
  float uniform01f() { return static_cast<float>(next() >> 40) * 0x1p-24f; }

  // Uniform in [lo, hi); lo/hi chosen so lo + u * (hi - lo) is exact for the
  // [-0.5, 0.5) weight range.
  float uniform(float lo, float hi) { return lo + uniform01f() * (hi - lo); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

inline Nanos round_ns(double ns) { return static_cast<Nanos>(std::llround(ns)); }

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

inline bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

// ceil(log2(v)) for v >= 1.
inline std::uint32_t ceil_log2(std::uint64_t v) {
  std::uint32_t r = 0;
  while ((std::uint64_t{1} << r) < v) ++r;
  return r;
}

}  // namespace rmssd
