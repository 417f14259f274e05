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

#include <span>

#include <Eigen/Dense>

#include "dyga/subspace_gaussian.hpp"

namespace dyga {

// Square matrix whose entries are exactly symmetric as stored.
class SymMatrix {
 public:
  // Throws InvalidMatrix unless `entries` is square, non-empty and exactly
  // symmetric.
  explicit SymMatrix(Eigen::MatrixXd entries);

  // (m + m^T) / 2, for matrices that are symmetric only up to rounding.
  static SymMatrix symmetrized(const Eigen::MatrixXd& m);
  static SymMatrix identity(int dim);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  SymMatrix() = default;
  Eigen::MatrixXd entries_;
};

// Eigenvalues in descending order; column j of `vectors` pairs with
// values(j). Each column's largest-magnitude entry (first one on ties) is
// positive.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Cyclic Jacobi. Stops once the off-diagonal Frobenius norm drops below
// 1e-12 times the Frobenius norm of the input, or after 100 sweeps.
EigenSystem sym_eig(const SymMatrix& m);

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // D x D, column j is the j-th component
  Eigen::VectorXd explained_variance;

  // Centered rows of `data` projected on the first k components.
  Eigen::MatrixXd project(const Eigen::MatrixXd& data, int k) const;
};

// Components of the (N-1)-normalized sample covariance of the rows of data.
PcaModel pca_fit(const Eigen::MatrixXd& data);

// N x k projection onto the top-k principal components. k = 1 gives the one
// scalar per latent unit used by the metric suite.
Eigen::MatrixXd pca_reduce_unit(const Eigen::MatrixXd& features, int k);

double logsumexp(std::span<const double> xs);
double logsumexp(const Eigen::VectorXd& xs);

// Log density of x under g, evaluated in subspace form. Throws
// RegularizationRequired if any retained eigenvalue or the tied noise is
// below `floor`.
double log_gaussian_pdf(const Eigen::VectorXd& x, const SubspaceGaussian& g,
                        double floor = kRegularizationFloor);

// Row-wise log_gaussian_pdf over an N x D matrix.
Eigen::VectorXd log_gaussian_pdf_rows(const Eigen::MatrixXd& data,
                                      const SubspaceGaussian& g,
                                      double floor = kRegularizationFloor);

// N x K matrix of log densities of every row under every component. Works
// on globally centred data and expands |x - mu|^2, so it agrees with
// log_gaussian_pdf_rows to rounding but avoids one N x D temporary per
// component.
Eigen::MatrixXd log_gaussian_pdf_matrix(const Eigen::MatrixXd& data,
                                        std::span<const SubspaceGaussian> components,
                                        double floor = kRegularizationFloor);

}  // namespace dyga
