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

// Report emitters: metrics and search outcomes as JSON, traces and MLP
// schedules as CSV, comparisons as JSON or an aligned text table.

#pragma once

#include <string>

#include "json.hpp"
#include "rmssd/kernel_search.hpp"
#include "rmssd/sim.hpp"

namespace rmssd {

nlohmann::json metrics_to_json(const Metrics& m);
std::string metrics_text(const Metrics& m);
nlohmann::json search_outcome_to_json(const SearchOutcome& o);
std::string search_outcome_text(const SearchOutcome& o);
nlohmann::json comparison_to_json(const Comparison& c);
std::string comparison_text(const Comparison& c);

// Header: query_id,stage,start_ns,end_ns
std::string traces_csv(const std::vector<TraceRow>& rows);
// Header: layer,output_group,start_ns,end_ns
std::string schedule_csv(const std::vector<ScheduleRow>& rows);

}  // namespace rmssd
