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

#include "dyga/factors.hpp"

#include <string>

#include "dyga/error.hpp"

namespace dyga {

FactorTable FactorTable::from_codes(Eigen::MatrixXi codes) {
  FactorTable t;
  t.cardinalities.assign(static_cast<std::size_t>(codes.cols()), 0);
  for (Eigen::Index f = 0; f < codes.cols(); ++f) {
    t.cardinalities[static_cast<std::size_t>(f)] =
        codes.rows() > 0 ? codes.col(f).maxCoeff() + 1 : 0;
  }
  t.codes = std::move(codes);
  t.validate();
  return t;
}

std::vector<int> FactorTable::column(int f) const {
  std::vector<int> out(static_cast<std::size_t>(codes.rows()));
  for (Eigen::Index i = 0; i < codes.rows(); ++i) out[static_cast<std::size_t>(i)] = codes(i, f);
  return out;
}

void FactorTable::validate() const {
  if (static_cast<Eigen::Index>(cardinalities.size()) != codes.cols()) {
    fail(ErrorKind::kShapeError, "one cardinality per factor column required");
  }
  for (Eigen::Index f = 0; f < codes.cols(); ++f) {
    const int card = cardinalities[static_cast<std::size_t>(f)];
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
      if (codes(i, f) < 0 || codes(i, f) >= card) {
        fail(ErrorKind::kFormatError, "factor " + std::to_string(f) + " code " +
                                          std::to_string(codes(i, f)) +
                                          " outside [0, " + std::to_string(card) + ")");
      }
    }
  }
}

FactorTable FactorTable::rows(const std::vector<Eigen::Index>& idx) const {
  FactorTable out;
  out.cardinalities = cardinalities;
  out.codes.resize(static_cast<Eigen::Index>(idx.size()), codes.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.codes.row(static_cast<Eigen::Index>(i)) = codes.row(idx[i]);
  }
  return out;
}

}  // namespace dyga
