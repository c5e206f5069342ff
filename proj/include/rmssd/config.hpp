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

// JSON scenario configuration. Every section is optional and falls back to
// the documented defaults; unknown keys anywhere are rejected.

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "rmssd/sim.hpp"

namespace rmssd {

inline constexpr int kConfigSchemaVersion = 1;

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

// Parses and validates. Throws ConfigError for unreadable files, malformed
// JSON, unknown keys, wrong types and invariant violations.
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json kernels_to_json(const KernelAssignment& a);
KernelAssignment kernels_from_json(const nlohmann::json& j);
ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& m);

}  // namespace rmssd
