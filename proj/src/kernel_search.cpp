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

#include "rmssd/kernel_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "rmssd/ev_engine.hpp"

namespace rmssd {

void ResourceModel::validate() const {
  if (!(lut_per_mac > 0) || !(ff_per_mac > 0) || !(dsp_per_mac > 0))
    throw ConfigError("resources: per-MAC coefficients must be > 0");
  if (bram_bytes == 0) throw ConfigError("resources: bram_bytes must be > 0");
  if (!(dram_bandwidth > 0)) throw ConfigError("resources: dram_bandwidth must be > 0");
}

void SearchSpace::validate() const {
  if (kernel_sizes.empty()) throw ConfigError("search: kernel_sizes is empty");
  for (auto s : kernel_sizes)
    if (!is_pow2(s)) throw ConfigError("search: kernel size " + std::to_string(s) + " is not a power of two");
  if (initial_batch < 1 || max_batch < initial_batch)
    throw ConfigError("search: need 1 <= initial_batch <= max_batch");
}

std::vector<std::uint32_t> SearchSpace::sizes_up_to(std::uint32_t dim) const {
  std::vector<std::uint32_t> out;
  for (auto s : kernel_sizes)
    if (s <= dim) out.push_back(s);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty())
    throw ConfigError("search: no kernel size fits a dimension of " + std::to_string(dim));
  return out;
}

std::uint64_t KernelAssignment::objective() const {
  std::uint64_t total = 0;
  for (const auto& k : flattened()) total += k.area();
  return total;
}

std::vector<Kernel> KernelAssignment::flattened() const {
  std::vector<Kernel> out = bottom_chain();
  out.insert(out.end(), top.begin(), top.end());
  out.push_back(ev_sum);
  return out;
}

std::vector<Kernel> KernelAssignment::bottom_chain() const {
  std::vector<Kernel> out = bottom;
  out.push_back(l0_dense);
  return out;
}

namespace {

// (R, C) of every chain layer: bottom chain then top chain.
struct ChainDims {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bottom;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> top;
};

ChainDims chain_dims(const ModelSpec& m) {
  ChainDims d;
  for (std::size_t i = 0; i + 1 < m.bottom_mlp_dims.size(); ++i)
    d.bottom.emplace_back(m.bottom_mlp_dims[i], m.bottom_mlp_dims[i + 1]);
  const std::uint32_t c0 = m.top_mlp_dims[1];
  d.bottom.emplace_back(m.bottom_output_width(), c0);
  d.top.emplace_back(m.embedding_width(), c0);
  for (std::size_t j = 1; j + 1 < m.top_mlp_dims.size(); ++j)
    d.top.emplace_back(m.top_mlp_dims[j], m.top_mlp_dims[j + 1]);
  return d;
}

// Spill flags for bottom chain then top chain, in network order.
std::vector<bool> spill_flags(const ChainDims& d, const ResourceModel& rm) {
  std::vector<bool> spilled;
  std::uint64_t used = 0;
  bool overflow = false;
  auto place = [&](std::pair<std::uint32_t, std::uint32_t> rc) {
    const std::uint64_t bytes = std::uint64_t{rc.first} * rc.second * 4;
    if (!overflow && used + bytes <= rm.bram_bytes) {
      used += bytes;
      spilled.push_back(false);
    } else {
      overflow = true;
      spilled.push_back(true);
    }
  };
  for (auto rc : d.bottom) place(rc);
  for (auto rc : d.top) place(rc);
  return spilled;
}

std::uint64_t floor_cycles(std::uint64_t bytes, const ResourceModel& rm, const TimingParams& timing) {
  const Nanos ns = weight_fetch_floor_ns(bytes, rm.dram_bandwidth);
  return static_cast<std::uint64_t>(std::ceil(static_cast<double>(ns) * timing.fc_clock_mhz / 1000.0));
}

std::vector<FcLayerSpec> make_chain(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& dims,
                                    const std::vector<bool>& spilled, std::size_t spill_offset,
                                    const ResourceModel& rm, const TimingParams& timing) {
  std::vector<FcLayerSpec> chain;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    FcLayerSpec s;
    s.rows = dims[l].first;
    s.cols = dims[l].second;
    if (spilled[spill_offset + l])
      s.min_cycles = floor_cycles(std::uint64_t{s.rows} * s.cols * 4, rm, timing);
    chain.push_back(s);
  }
  return alternate_scans(std::move(chain));
}

}  // namespace

void KernelAssignment::validate(const ModelSpec& model) const {
  const ChainDims d = chain_dims(model);
  if (bottom.size() + 1 != d.bottom.size() || top.size() != d.top.size())
    throw RangeError("kernel assignment has " + std::to_string(bottom.size()) + " bottom and " +
                     std::to_string(top.size()) + " top kernels; model needs " +
                     std::to_string(d.bottom.size() - 1) + " and " + std::to_string(d.top.size()));
  auto check = [](Kernel k, std::pair<std::uint32_t, std::uint32_t> rc, const std::string& what) {
    if (!is_pow2(k.kr) || !is_pow2(k.kc))
      throw RangeError(what + ": kernel sizes must be powers of two");
    if (k.kr > rc.first || k.kc > rc.second)
      throw RangeError(what + ": kernel (" + std::to_string(k.kr) + "," + std::to_string(k.kc) +
                       ") exceeds layer " + std::to_string(rc.first) + "x" + std::to_string(rc.second));
  };
  const auto bot = bottom_chain();
  for (std::size_t l = 0; l < bot.size(); ++l) check(bot[l], d.bottom[l], "bottom kernel " + std::to_string(l));
  for (std::size_t l = 0; l < top.size(); ++l) check(top[l], d.top[l], "top kernel " + std::to_string(l));
  if (ev_sum.kr != 1) throw RangeError("EV-sum kernel must have kr = 1");
  check(ev_sum, {1, model.ev_dim()}, "EV-sum kernel");
}

Nanos weight_fetch_floor_ns(std::uint64_t bytes, double bandwidth) {
  return round_ns(static_cast<double>(bytes) * 1e9 / bandwidth);
}

std::vector<FcLayerSpec> bottom_chain(const ModelSpec& model, const ResourceModel& rm,
                                      const TimingParams& timing, std::uint32_t) {
  const ChainDims d = chain_dims(model);
  return make_chain(d.bottom, spill_flags(d, rm), 0, rm, timing);
}

std::vector<FcLayerSpec> top_chain(const ModelSpec& model, const ResourceModel& rm,
                                   const TimingParams& timing, std::uint32_t) {
  const ChainDims d = chain_dims(model);
  return make_chain(d.top, spill_flags(d, rm), d.bottom.size(), rm, timing);
}

Nanos chain_time_ns(std::span<const FcLayerSpec> chain, std::span<const Kernel> kernels,
                    std::uint32_t batch, const TimingParams& timing) {
  return timing.cycles_to_ns(pipeline_schedule(chain, kernels, batch, {}, false).makespan);
}

EmbTimeFn simulated_emb_time(const SearchProblem& problem) {
  struct State {
    SearchProblem problem;
    TableLayout layout;
    std::vector<Query> queries;
    std::map<std::pair<std::uint32_t, std::uint32_t>, Nanos> memo;
  };
  auto state = std::make_shared<State>();
  state->problem = problem;
  state->layout = layout_tables(problem.model, problem.geometry, problem.extents_per_table);
  return [state](std::uint32_t kc_e, std::uint32_t batch) -> Nanos {
    const auto key = std::make_pair(kc_e, batch);
    if (auto it = state->memo.find(key); it != state->memo.end()) return it->second;
    if (state->queries.size() < batch) {
      WorkloadParams wp = state->problem.profile;
      wp.count = batch;
      state->queries = generate_workload(state->problem.model, wp);
    }
    const auto r = simulate_lookup(state->problem.model, {},
                                   std::span<const Query>(state->queries.data(), batch),
                                   state->problem.geometry, state->problem.timing,
                                   state->layout.map, kc_e, 0);
    state->memo.emplace(key, r.t_emb);
    return r.t_emb;
  };
}

StageTimes estimate_times(const SearchProblem& problem, const KernelAssignment& a,
                          std::uint32_t batch, const EmbTimeFn& emb_time) {
  a.validate(problem.model);
  StageTimes t;
  const auto bot = bottom_chain(problem.model, problem.resources, problem.timing, batch);
  const auto top = top_chain(problem.model, problem.resources, problem.timing, batch);
  t.t_bot = chain_time_ns(bot, a.bottom_chain(), batch, problem.timing);
  t.t_top = chain_time_ns(top, a.top, batch, problem.timing);
  t.t_emb = emb_time(a.ev_sum.kc, batch);
  return t;
}

StageTimes estimate_times(const SearchProblem& problem, const KernelAssignment& a,
                          std::uint32_t batch) {
  return estimate_times(problem, a, batch, simulated_emb_time(problem));
}

Resources resource_usage(const ModelSpec& model, const KernelAssignment& a, const ResourceModel& rm) {
  const double area = static_cast<double>(a.objective());
  Resources r;
  r.lut = rm.lut_per_mac * area;
  r.ff = rm.ff_per_mac * area;
  r.dsp = rm.dsp_per_mac * area;
  const ChainDims d = chain_dims(model);
  const auto spilled = spill_flags(d, rm);
  std::size_t i = 0;
  for (const auto* list : {&d.bottom, &d.top})
    for (auto rc : *list) {
      const std::uint64_t bytes = std::uint64_t{rc.first} * rc.second * 4;
      (spilled[i++] ? r.dram_bytes : r.bram_bytes) += bytes;
    }
  return r;
}

namespace {

KernelAssignment extreme_assignment(const ModelSpec& model, const SearchSpace& space, bool largest) {
  const ChainDims d = chain_dims(model);
  auto pick = [&](std::pair<std::uint32_t, std::uint32_t> rc) {
    const auto rs = space.sizes_up_to(rc.first);
    const auto cs = space.sizes_up_to(rc.second);
    return largest ? Kernel{rs.back(), cs.back()} : Kernel{rs.front(), cs.front()};
  };
  KernelAssignment a;
  for (std::size_t l = 0; l + 1 < d.bottom.size(); ++l) a.bottom.push_back(pick(d.bottom[l]));
  a.l0_dense = pick(d.bottom.back());
  for (auto rc : d.top) a.top.push_back(pick(rc));
  const auto es = space.sizes_up_to(model.ev_dim());
  a.ev_sum = Kernel{1, largest ? es.back() : es.front()};
  return a;
}

using Options = std::vector<std::vector<Kernel>>;

Options chain_options(const std::vector<FcLayerSpec>& chain, const SearchSpace& space) {
  Options opts;
  for (const auto& l : chain) {
    std::vector<Kernel> ks;
    for (auto kr : space.sizes_up_to(l.rows))
      for (auto kc : space.sizes_up_to(l.cols)) ks.push_back(Kernel{kr, kc});
    // Largest first.
    std::sort(ks.begin(), ks.end(), [](Kernel a, Kernel b) {
      if (a.area() != b.area()) return a.area() > b.area();
      return a > b;
    });
    opts.push_back(std::move(ks));
  }
  return opts;
}

struct ChainBest {
  bool feasible = false;
  std::vector<Kernel> kernels;
  std::uint64_t area = std::numeric_limits<std::uint64_t>::max();
  std::vector<Kernel> fastest;
  Nanos fastest_time = std::numeric_limits<Nanos>::max();
};

std::uint64_t area_of(const std::vector<Kernel>& ks) {
  std::uint64_t a = 0;
  for (auto k : ks) a += k.area();
  return a;
}

class ChainMinimizer {
 public:
  ChainMinimizer(const std::vector<FcLayerSpec>& chain, const SearchSpace& space,
                 std::uint32_t batch, const TimingParams& timing)
      : chain_(chain), options_(chain_options(chain, space)), batch_(batch), timing_(timing) {
    for (const auto& l : chain_) {
      row_sizes_.push_back(space.sizes_up_to(l.rows));
      col_sizes_.push_back(space.sizes_up_to(l.cols));
    }
    suffix_min_.assign(chain_.size() + 1, 0);
    for (std::size_t l = chain_.size(); l-- > 0;)
      suffix_min_[l] = suffix_min_[l + 1] + options_[l].back().area();
  }

  ChainBest minimize(Nanos bound) {
    bound_ = bound;
    best_ = ChainBest{};
    greedy();
    current_.assign(chain_.size(), Kernel{});
    branch(0, 0);
    return best_;
  }

  std::uint64_t evaluations() const { return evaluations_; }

 private:
  Nanos time_of(const std::vector<Kernel>& ks) {
    auto it = times_.find(ks);
    if (it != times_.end()) return it->second;
    ++evaluations_;
    const Nanos t = chain_time_ns(chain_, ks, batch_, timing_);
    times_.emplace(ks, t);
    return t;
  }

  void consider(const std::vector<Kernel>& ks) {
    const Nanos t = time_of(ks);
    if (t < best_.fastest_time || (t == best_.fastest_time && ks < best_.fastest)) {
      best_.fastest_time = t;
      best_.fastest = ks;
    }
    if (t > bound_) return;
    const std::uint64_t a = area_of(ks);
    if (!best_.feasible || a < best_.area || (a == best_.area && ks < best_.kernels)) {
      best_.feasible = true;
      best_.area = a;
      best_.kernels = ks;
    }
  }

  static std::optional<std::uint32_t> next_smaller(const std::vector<std::uint32_t>& sizes,
                                                   std::uint32_t v) {
    auto it = std::lower_bound(sizes.begin(), sizes.end(), v);
    if (it == sizes.begin()) return std::nullopt;
    return *std::prev(it);
  }

  // Start from the largest kernels and shrink the step that frees the most
  // area while the chain still meets the bound.
  void greedy() {
    std::vector<Kernel> ks;
    for (const auto& o : options_) ks.push_back(o.front());
    consider(ks);
    if (time_of(ks) > bound_) return;
    for (;;) {
      std::optional<std::vector<Kernel>> pick;
      std::uint64_t pick_gain = 0;
      for (std::size_t l = 0; l < ks.size(); ++l) {
        for (int dim = 0; dim < 2; ++dim) {
          auto cand = ks;
          const auto smaller = dim == 0 ? next_smaller(row_sizes_[l], ks[l].kr)
                                        : next_smaller(col_sizes_[l], ks[l].kc);
          if (!smaller) continue;
          (dim == 0 ? cand[l].kr : cand[l].kc) = *smaller;
          const std::uint64_t gain = ks[l].area() - cand[l].area();
          if (time_of(cand) > bound_) continue;
          if (!pick || gain > pick_gain) {
            pick = cand;
            pick_gain = gain;
          }
        }
      }
      if (!pick) break;
      ks = *pick;
      consider(ks);
    }
  }

  // Exact refinement: depth-first over layers, largest kernels first,
  // pruning branches whose area bound cannot beat the incumbent.
  void branch(std::size_t l, std::uint64_t partial) {
    if (best_.feasible && partial + suffix_min_[l] > best_.area) return;
    if (l == chain_.size()) {
      consider(current_);
      return;
    }
    for (const auto& k : options_[l]) {
      current_[l] = k;
      branch(l + 1, partial + k.area());
    }
  }

  std::vector<FcLayerSpec> chain_;
  Options options_;
  std::vector<std::vector<std::uint32_t>> row_sizes_, col_sizes_;
  std::vector<std::uint64_t> suffix_min_;
  std::uint32_t batch_;
  TimingParams timing_;
  Nanos bound_ = 0;
  ChainBest best_;
  std::vector<Kernel> current_;
  std::map<std::vector<Kernel>, Nanos> times_;
  std::uint64_t evaluations_ = 0;
};

}  // namespace

KernelAssignment max_assignment(const ModelSpec& model, const SearchSpace& space) {
  return extreme_assignment(model, space, true);
}

KernelAssignment min_assignment(const ModelSpec& model, const SearchSpace& space) {
  return extreme_assignment(model, space, false);
}

bool better_candidate(const KernelAssignment& a, const KernelAssignment& b, const ResourceModel& rm) {
  const auto oa = a.objective(), ob = b.objective();
  if (oa != ob) return oa < ob;
  const double da = rm.dsp_per_mac * static_cast<double>(oa);
  const double db = rm.dsp_per_mac * static_cast<double>(ob);
  if (da != db) return da < db;
  return a.flattened() < b.flattened();
}

SearchOutcome search(const SearchProblem& problem, const EmbTimeFn& emb_time) {
  problem.model.validate();
  problem.space.validate();
  problem.resources.validate();
  problem.timing.validate();

  const std::vector<std::uint32_t> ev_widths = problem.space.sizes_up_to(problem.model.ev_dim());
  const KernelAssignment shape = min_assignment(problem.model, problem.space);
  SearchOutcome out;

  std::uint32_t batch = problem.space.initial_batch;
  for (;;) {
    const auto bot_chain = bottom_chain(problem.model, problem.resources, problem.timing, batch);
    const auto top_chain_ = top_chain(problem.model, problem.resources, problem.timing, batch);
    ChainMinimizer bot_min(bot_chain, problem.space, batch, problem.timing);
    ChainMinimizer top_min(top_chain_, problem.space, batch, problem.timing);

    std::optional<KernelAssignment> best;
    // Slowest embedding stage, used to report the binding constraint.
    Nanos loosest = -1;
    ChainBest loose_bot, loose_top;
    std::uint32_t loose_kc = ev_widths.front();
    for (auto kc_e : ev_widths) {
      const Nanos t_emb = emb_time(kc_e, batch);
      const ChainBest b = bot_min.minimize(t_emb);
      const ChainBest t = top_min.minimize(t_emb);
      if (t_emb > loosest) {
        loosest = t_emb;
        loose_bot = b;
        loose_top = t;
        loose_kc = kc_e;
      }
      if (!b.feasible || !t.feasible) continue;
      KernelAssignment cand = shape;
      std::copy(b.kernels.begin(), b.kernels.end() - 1, cand.bottom.begin());
      cand.l0_dense = b.kernels.back();
      cand.top = t.kernels;
      cand.ev_sum = Kernel{1, kc_e};
      if (!best || better_candidate(cand, *best, problem.resources)) best = cand;
    }
    out.evaluations = bot_min.evaluations() + top_min.evaluations();

    if (best) {
      out.feasible = true;
      out.assignment = *best;
      out.batch = batch;
    } else if (std::uint64_t{batch} * 2 <= problem.space.max_batch) {
      batch *= 2;
      continue;
    } else {
      out.feasible = false;
      out.batch = batch;
      KernelAssignment a = shape;
      const auto& bk = loose_bot.feasible ? loose_bot.kernels : loose_bot.fastest;
      std::copy(bk.begin(), bk.end() - 1, a.bottom.begin());
      a.l0_dense = bk.back();
      a.top = loose_top.feasible ? loose_top.kernels : loose_top.fastest;
      a.ev_sum = Kernel{1, loose_kc};
      out.assignment = a;
      std::string binding;
      if (!loose_bot.feasible) binding = "T_bot <= T_emb";
      if (!loose_top.feasible) binding += std::string(binding.empty() ? "" : " and ") + "T_top <= T_emb";
      out.binding = binding + " cannot hold at batch " + std::to_string(batch) +
                    " (max_batch " + std::to_string(problem.space.max_batch) + ")";
    }
    break;
  }

  out.times = estimate_times(problem, out.assignment, out.batch, emb_time);
  out.resources = resource_usage(problem.model, out.assignment, problem.resources);
  out.objective = out.assignment.objective();
  out.slack_bot = out.times.t_emb - out.times.t_bot;
  out.slack_top = out.times.t_emb - out.times.t_top;
  return out;
}

SearchOutcome search(const SearchProblem& problem) {
  return search(problem, simulated_emb_time(problem));
}

ConstraintReport verify_constraints(const SearchProblem& problem, const SearchOutcome& outcome,
                                    const EmbTimeFn& emb_time) {
  ConstraintReport r;
  r.times = estimate_times(problem, outcome.assignment, outcome.batch, emb_time);
  r.slack_bot = r.times.t_emb - r.times.t_bot;
  r.slack_top = r.times.t_emb - r.times.t_top;
  if (r.slack_bot < 0)
    r.violations.push_back("T_bot <= T_emb violated by " + std::to_string(-r.slack_bot) + " ns");
  if (r.slack_top < 0)
    r.violations.push_back("T_top <= T_emb violated by " + std::to_string(-r.slack_top) + " ns");
  return r;
}

ConstraintReport verify_constraints(const SearchProblem& problem, const SearchOutcome& outcome) {
  return verify_constraints(problem, outcome, simulated_emb_time(problem));
}

}  // namespace rmssd
