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

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dyga/rng.hpp"
#include "dyga/subspace_gaussian.hpp"

namespace dyga {

// How many eigen-directions each component keeps in its subspace.
struct IntrinsicDimRule {
  enum class Kind {
    kScree,     // last normalized eigen-gap >= threshold
    kVariance,  // smallest d explaining >= threshold of the variance
    kFull,      // d = D, i.e. an ordinary full-covariance Gaussian
    kFixed,     // d = fixed_dim
  };

  Kind kind = Kind::kScree;
  double threshold = 0.2;
  int fixed_dim = 1;

  static IntrinsicDimRule scree(double threshold = 0.2) {
    return {Kind::kScree, threshold, 1};
  }
  static IntrinsicDimRule variance(double fraction = 0.9) {
    return {Kind::kVariance, fraction, 1};
  }
  static IntrinsicDimRule full() { return {Kind::kFull, 0.0, 1}; }
  static IntrinsicDimRule fixed(int d) { return {Kind::kFixed, 0.0, d}; }

  // `eigvals` sorted descending. Scree and variance results are clamped to
  // [1, D-1] (to 1 when D = 1).
  int select(const Eigen::VectorXd& eigvals) const;
};

struct EmOptions {
  int max_iter = 100;
  double tol = 1e-6;  // relative log-likelihood improvement
  double floor = kRegularizationFloor;
  IntrinsicDimRule rule;
};

struct MixtureState {
  std::vector<SubspaceGaussian> components;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int n_iters = 0;
  // Log-likelihood before the first iteration and after each one.
  std::vector<double> log_likelihood_trace;

  int size() const { return static_cast<int>(components.size()); }
  int dim() const { return components.empty() ? 0 : components.front().dim(); }
  Eigen::MatrixXd means() const;  // K x D
  double total_weight() const;
};

// N x K posterior probabilities; each row sums to one.
using Responsibilities = Eigen::MatrixXd;

struct EStepResult {
  Responsibilities resp;
  double log_likelihood = 0.0;
};

// Greedy k-means++ seeding followed by one Voronoi pass: each component gets
// its cell's mean and covariance and weight 1/k0.
MixtureState init_mixture(const Eigen::MatrixXd& data, int k0, SeededRng& rng,
                          const EmOptions& options = {});

Responsibilities e_step(const Eigen::MatrixXd& data, const MixtureState& mixture);
EStepResult e_step_with_likelihood(const Eigen::MatrixXd& data,
                                   const MixtureState& mixture);
double log_likelihood(const Eigen::MatrixXd& data, const MixtureState& mixture);

// Weights, means and regularized covariances from responsibilities. The
// subspace fields of the returned components are left empty until
// update_subspaces runs. Throws ComponentStarved when a column carries less
// than 1e-8 * N total responsibility.
MixtureState m_step(const Eigen::MatrixXd& data, const Responsibilities& resp,
                    double floor = kRegularizationFloor);

MixtureState update_subspaces(MixtureState mixture, const IntrinsicDimRule& rule,
                              double floor = kRegularizationFloor);

// Alternates E-step, M-step and subspace update until the relative
// log-likelihood gain falls below options.tol or max_iter is reached. A
// starved component is dropped and the remaining weights renormalized.
MixtureState fit_em(const Eigen::MatrixXd& data, MixtureState init,
                    const EmOptions& options = {});

// Index of the largest entry of each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& m);

}  // namespace dyga
