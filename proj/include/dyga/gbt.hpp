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
#include <vector>

#include <Eigen/Dense>

namespace dyga {

struct GbtParams {
  int max_depth = 4;
  int n_rounds = 50;
  double learning_rate = 0.1;
};

// Axis-aligned regression tree; rows with x[feature] <= threshold go left.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output
    double gain = 0.0;   // squared-error reduction of the split
  };
  std::vector<Node> nodes;

  template <typename Row>
  double predict(const Row& x) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const Node& n = nodes[static_cast<std::size_t>(at)];
      at = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
  }
};

// One-vs-rest squared-loss boosting over one-hot class targets.
struct GbtModel {
  GbtParams params;
  std::vector<int> classes;  // sorted labels seen in training
  bool constant = false;     // a single class was observed
  Eigen::VectorXd base_scores;
  std::vector<std::vector<RegressionTree>> rounds;  // [round][class]
  Eigen::VectorXd importances;  // summed split gain per feature
  // Total squared training loss before boosting and after each round.
  std::vector<double> train_loss;

  Eigen::MatrixXd decision_function(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

// Deterministic given the row order. Splits are exact greedy; within a
// feature ties go to the lowest threshold. Features whose gains tie are
// ranked by a fingerprint of the rows they send left, then by the lowest
// index, and share the importance credit. Throws InsufficientSamples below
// 10 rows.
GbtModel fit_gbt(const Eigen::MatrixXd& x, std::span<const int> y,
                 const GbtParams& params = {});

// Single regression tree on real targets; exposed for oracle tests.
RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                                   int max_depth, Eigen::VectorXd* importances = nullptr);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace dyga
