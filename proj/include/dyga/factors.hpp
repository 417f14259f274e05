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

#include <vector>

#include <Eigen/Dense>

namespace dyga {

// N x F integer factor codes; code (i, f) lies in [0, cardinalities[f]).
struct FactorTable {
  Eigen::MatrixXi codes;
  std::vector<int> cardinalities;

  // Cardinalities inferred as max code + 1 per column.
  static FactorTable from_codes(Eigen::MatrixXi codes);

  Eigen::Index samples() const { return codes.rows(); }
  int factors() const { return static_cast<int>(codes.cols()); }
  std::vector<int> column(int f) const;

  // Throws ShapeError on shape mismatch, FormatError on out-of-range codes.
  void validate() const;

  FactorTable rows(const std::vector<Eigen::Index>& idx) const;
};

}  // namespace dyga
