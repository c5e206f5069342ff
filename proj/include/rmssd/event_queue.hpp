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
#include <queue>
#include <stdexcept>
#include <vector>

#include "rmssd/common.hpp"

namespace rmssd {

template <class Payload>
struct Event {
  Nanos timestamp = 0;
  std::uint64_t sequence = 0;
  Payload payload{};
};

// Min-queue over (timestamp, sequence). Sequence numbers are assigned on
// push, so events scheduled for the same instant pop in insertion order.
template <class Payload>
class EventQueue {
 public:
  void push(Nanos timestamp, Payload payload) {
    if (timestamp < now_)
      throw std::logic_error("event scheduled in the past: " + std::to_string(timestamp) +
                             " < " + std::to_string(now_));
    heap_.push(Event<Payload>{timestamp, next_sequence_++, std::move(payload)});
  }

  Event<Payload> pop() {
    Event<Payload> e = heap_.top();
    heap_.pop();
    now_ = e.timestamp;
    ++processed_;
    return e;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  Nanos next_time() const { return heap_.top().timestamp; }
  Nanos now() const { return now_; }
  std::uint64_t processed() const { return processed_; }

 private:
  struct Later {
    bool operator()(const Event<Payload>& a, const Event<Payload>& b) const {
      if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
      return a.sequence > b.sequence;
    }
  };
  std::priority_queue<Event<Payload>, std::vector<Event<Payload>>, Later> heap_;
  Nanos now_ = 0;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t processed_ = 0;
};

}  // namespace rmssd
