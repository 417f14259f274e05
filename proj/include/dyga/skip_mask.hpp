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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dyga/rng.hpp"

namespace dyga {

// (channels, height, width) tensor stored channel-major.
struct ChannelTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  ChannelTensor() = default;
  ChannelTensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), values(c * h * w, fill) {}

  std::size_t plane() const { return height * width; }
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[c * plane() + y * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[c * plane() + y * width + x];
  }
};

enum class MaskGranularity { kPerChannel, kPerElement };

struct MaskSpec {
  double keep_prob = 0.8;  // drop rate 0.2
  MaskGranularity granularity = MaskGranularity::kPerChannel;
  bool rescale = false;  // multiply survivors by 1 / keep_prob
};

struct SkipMaskResult {
  ChannelTensor tensor;
  // One flag per channel or per element, following the granularity.
  std::vector<std::uint8_t> keep;

  double keep_fraction() const;
};

// Bernoulli(keep_prob) mask applied to skip-connection features. Dropped
// positions are set to exactly 0. Throws InvalidSpec unless keep_prob is in
// (0, 1].
SkipMaskResult skip_dropout(const ChannelTensor& s, const MaskSpec& spec, SeededRng& rng);

}  // namespace dyga
