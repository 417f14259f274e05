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

#include <Eigen/Dense>

namespace dyga {

// Added to every covariance diagonal and used as the lower bound of every
// retained eigenvalue and tied noise value.
inline constexpr double kRegularizationFloor = 1e-6;

// One mixture component in high-dimensional subspace form:
//   Sigma = Q diag(a_1..a_d) Q^T + b (I - Q Q^T)
// where Q (D x d) spans the retained subspace and b is the single variance
// shared by the D - d directions of its orthogonal complement.
struct SubspaceGaussian {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;             // D x d, orthonormal columns
  Eigen::VectorXd retained_eigvals;  // d entries, descending
  double tied_noise = 1.0;
  // Regularized weighted scatter from the last M-step. Empty for components
  // that were loaded from a model file.
  Eigen::MatrixXd covariance;

  int dim() const { return static_cast<int>(mean.size()); }
  int intrinsic_dim() const { return static_cast<int>(basis.cols()); }

  // The D x D covariance implied by (basis, retained_eigvals, tied_noise).
  Eigen::MatrixXd dense_covariance() const {
    const int d = dim();
    Eigen::MatrixXd projector = basis * basis.transpose();
    Eigen::MatrixXd sigma =
        tied_noise * (Eigen::MatrixXd::Identity(d, d) - projector);
    sigma += basis * retained_eigvals.asDiagonal() * basis.transpose();
    return sigma;
  }
};

}  // namespace dyga
