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
#include <vector>

#include <Eigen/Dense>

#include "dyga/hddc.hpp"
#include "dyga/rng.hpp"

namespace dyga {

struct DygaConfig {
  double phi = 0.5;  // membership threshold on the responsibility
  double psi = 0.5;  // density above which a component is split
  int k0 = 3;
  double random_split_prob = 0.5;
  double min_cluster_fraction = 0.01;
  int max_split_rounds = 5;
  EmOptions em;

  // max(2, ceil(min_cluster_fraction * n)).
  int min_cluster_size(Eigen::Index n) const;
  void validate() const;  // throws ConfigError
};

// How Gumbel noise is combined with a responsibility row before the
// temperature-tau softmax.
enum class GumbelMode {
  // logits = r / tau: the selection follows softmax(r / tau), so the most
  // responsible anchor wins unless responsibilities tie to within ~tau.
  kTemperedLogits,
  // logits = r, i.e. softmax((r + g) / tau) with raw probabilities.
  kLiteral,
  // logits = log r; selection probability equals the responsibility.
  kLogResponsibility,
};

struct AlignmentConfig {
  double lambda = 0.1;
  double tau = 1e-4;
  double ratio_epsilon = 1e-8;
  bool hard_select = false;
  GumbelMode mode = GumbelMode::kTemperedLogits;

  void validate() const;  // throws ConfigError
};

struct AnchorModel {
  int unit_index = 0;
  MixtureState mixture;
  double membership_threshold = 0.5;
  double density_threshold = 0.5;
  int created_at_round = 0;

  int size() const { return mixture.size(); }
  Eigen::MatrixXd anchors() const { return mixture.means(); }
};

struct ClusterAssignment {
  std::vector<int> anchor;        // argmax responsibility per sample
  std::vector<std::uint8_t> member;  // responsibility of that anchor > phi

  std::vector<int> member_counts(int k) const;
  std::vector<Eigen::Index> members_of(int k) const;
};

ClusterAssignment assign_clusters(const Responsibilities& resp, double phi);

// Mean Euclidean distance of the rows of `points` to their centroid. Larger
// means more dispersed.
double cluster_density(const Eigen::MatrixXd& points);

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& data,
                            const std::vector<Eigen::Index>& rows);

// Replaces component `comp` by two children at mean +/- sqrt(l1) v1 (top
// eigenpair of the parent), refits them by EM on the parent's cluster
// members only, and scales their weights by the parent weight. The first
// child takes index `comp`, the second is appended. Throws SplitRefused if
// the cluster has fewer than 4 members.
MixtureState split_component(const MixtureState& mixture,
                             const Eigen::MatrixXd& data, int comp,
                             const DygaConfig& config);

// Components (with >= 4 members) whose cluster density exceeds the model's
// density threshold, plus, with probability random_split_prob, one uniformly
// drawn eligible component not already chosen. Ascending order.
std::vector<int> choose_splits(const AnchorModel& model,
                               const Eigen::MatrixXd& data, SeededRng& rng,
                               double random_split_prob);

// Drops components whose cluster has fewer than min_cluster_size members.
// The largest cluster (lowest index on ties) always survives. Returns the
// input unchanged when nothing is dropped.
MixtureState filter_small(const MixtureState& mixture,
                          const ClusterAssignment& assignment,
                          int min_cluster_size);

// init -> EM -> split rounds -> filter -> EM. Each split round computes the
// cluster membership once; every chosen cluster is split on it.
AnchorModel select_anchors(const Eigen::MatrixXd& data, const DygaConfig& config,
                           SeededRng& rng);

struct GumbelChoice {
  Eigen::VectorXd mean;
  int index = 0;  // argmax of the softmax weights
};

// Gumbel-softmax blend of the anchor means (rows of `means`). With
// hard_select the most responsible anchor is returned exactly.
GumbelChoice gumbel_anchor_mean(const Eigen::VectorXd& resp_row,
                                const Eigen::MatrixXd& means,
                                const AlignmentConfig& config, SeededRng& rng);

struct AlignedFeature {
  Eigen::VectorXd value;
  double delta = 0.0;
};

// delta = lambda * exp(-mean_j |(c_j - mu_j) / c_j|), with |c_j| floored at
// ratio_epsilon (sign kept). Returns c + delta (mu - c).
AlignedFeature align_feature(const Eigen::VectorXd& c, const Eigen::VectorXd& anchor,
                             double lambda, double ratio_epsilon);

struct AlignedBatch {
  Eigen::MatrixXd features;
  Eigen::VectorXd delta;
  std::vector<int> anchor;
  Eigen::MatrixXd targets;  // the blended anchor each row moved toward
};

AlignedBatch align_batch(const Eigen::MatrixXd& features, const AnchorModel& model,
                         const AlignmentConfig& config, SeededRng& rng);

}  // namespace dyga
