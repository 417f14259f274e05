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

#include "dyga/error.hpp"

namespace dyga {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidMatrix: return "InvalidMatrix";
    case ErrorKind::kInsufficientSamples: return "InsufficientSamples";
    case ErrorKind::kDimensionError: return "DimensionError";
    case ErrorKind::kRegularizationRequired: return "RegularizationRequired";
    case ErrorKind::kComponentStarved: return "ComponentStarved";
    case ErrorKind::kSplitRefused: return "SplitRefused";
    case ErrorKind::kDegenerateRepresentation: return "DegenerateRepresentation";
    case ErrorKind::kDegenerateFactors: return "DegenerateFactors";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kFormatError: return "FormatError";
    case ErrorKind::kShapeError: return "ShapeError";
  }
  return "Unknown";
}

}  // namespace dyga
