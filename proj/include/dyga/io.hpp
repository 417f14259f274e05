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
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dyga/anchoring.hpp"
#include "dyga/factors.hpp"
#include "dyga/metrics.hpp"
#include "dyga/synth.hpp"

namespace dyga {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr std::uint32_t kTensorFormatVersion = 1;

// "DYGA", u32 version, u32 rank, rank x u64 dims, row-major f32 payload.
// Everything little-endian.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> values;

  std::uint64_t numel() const;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
// FormatError on bad magic, version, or payload length.
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// (N, U, D) tensor <-> one N x D matrix per unit. Values pass through float.
Tensor to_tensor(const FeatureTensor& features);
FeatureTensor from_tensor(const Tensor& t);  // FormatError unless rank 3

// Header `sample_id,f0,...`, integer codes only.
void write_factors_csv(const std::filesystem::path& path, const FactorTable& factors);
FactorTable read_factors_csv(const std::filesystem::path& path);

// Shortest round-trip formatting, so doubles survive a write/read cycle.
std::string dump_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

nlohmann::json to_json(const SubspaceGaussian& g);
SubspaceGaussian gaussian_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnchorModel& m);
AnchorModel anchor_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricReport& r);

}  // namespace dyga
