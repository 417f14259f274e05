// Copyright 2026 The dyga Authors.
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
#include <string>
#include <vector>

#include "json.hpp"

#include "dyga/anchoring.hpp"
#include "dyga/metrics.hpp"
#include "dyga/skip_mask.hpp"
#include "dyga/synth.hpp"

namespace dyga {

struct DataPaths {
  std::string features;
  std::string factors;
  std::string model;
  std::string out;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DygaConfig dyga;
  AlignmentConfig alignment;
  MetricsConfig metrics;
  PipelineConfig pipeline;
  SynthConfig synth;
  MaskSpec mask;
  std::vector<std::size_t> mask_shape = {64, 8, 8};
  DataPaths data;

  // Throws ConfigError when a value is out of range.
  void validate() const;
};

// Sections: seed, dyga, em, metrics, pipeline, data, mask. Keys missing from
// `j` keep their current value; unknown keys are ConfigError.
void apply_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Full echo of every setting, in the same layout apply_json reads.
nlohmann::json to_json(const RunConfig& config);

// `section.key=value` override, with value parsed as JSON (bare strings are
// accepted as strings).
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace dyga
