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

#include "dyga/skip_mask.hpp"

#include <string>

#include "dyga/error.hpp"

namespace dyga {

double SkipMaskResult::keep_fraction() const {
  if (keep.empty()) return 0.0;
  std::size_t kept = 0;
  for (auto k : keep) kept += k;
  return static_cast<double>(kept) / static_cast<double>(keep.size());
}

SkipMaskResult skip_dropout(const ChannelTensor& s, const MaskSpec& spec, SeededRng& rng) {
  if (!(spec.keep_prob > 0.0 && spec.keep_prob <= 1.0)) {
    fail(ErrorKind::kInvalidSpec,
         "keep_prob must lie in (0, 1], got " + std::to_string(spec.keep_prob));
  }
  if (s.values.size() != s.channels * s.plane()) {
    fail(ErrorKind::kShapeError, "tensor value count does not match its shape");
  }
  const bool per_channel = spec.granularity == MaskGranularity::kPerChannel;
  const double scale = spec.rescale ? 1.0 / spec.keep_prob : 1.0;

  SkipMaskResult out;
  out.tensor = s;
  out.keep.resize(per_channel ? s.channels : s.values.size());
  for (auto& k : out.keep) k = rng.bernoulli(spec.keep_prob) ? 1 : 0;

  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const bool kept = out.keep[per_channel ? i / s.plane() : i] != 0;
    if (!kept) out.tensor.values[i] = 0.0;
    else if (spec.rescale) out.tensor.values[i] = s.values[i] * scale;
  }
  return out;
}

}  // namespace dyga
