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

#include "dyga/gbt.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "dyga/error.hpp"
#include "dyga/rng.hpp"

namespace dyga {

namespace {

using RowOrder = std::vector<std::vector<int>>;

RowOrder presort(const Eigen::MatrixXd& x) {
  RowOrder order(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& idx = order[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return x(a, f) < x(b, f); });
  }
  return order;
}

struct NodeStats {
  double count = 0.0;
  double sum = 0.0;
  double sumsq = 0.0;
};

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  std::uint64_t left_hash = 0;  // order-free fingerprint of the left rows
};

// Level-wise exact greedy growth: every level costs one pass over each
// presorted feature.
RegressionTree grow_tree(const Eigen::MatrixXd& x, const RowOrder& order,
                         const Eigen::VectorXd& target, int max_depth,
                         Eigen::VectorXd* importances) {
  const auto n = static_cast<std::size_t>(x.rows());
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);
  std::vector<int> active = {0};

  auto stats_of = [&](int node_count) {
    std::vector<NodeStats> stats(static_cast<std::size_t>(node_count));
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = stats[static_cast<std::size_t>(node_of[i])];
      s.count += 1.0;
      s.sum += target(static_cast<Eigen::Index>(i));
      s.sumsq += target(static_cast<Eigen::Index>(i)) * target(static_cast<Eigen::Index>(i));
    }
    return stats;
  };

  for (int depth = 0; depth < max_depth && !active.empty(); ++depth) {
    const int node_count = static_cast<int>(tree.nodes.size());
    const std::vector<NodeStats> stats = stats_of(node_count);
    std::vector<char> is_active(static_cast<std::size_t>(node_count), 0);
    for (int a : active) is_active[static_cast<std::size_t>(a)] = 1;

    // Best split of every feature at every node.
    std::vector<Candidate> per_feature(static_cast<std::size_t>(node_count * x.cols()));
    std::vector<double> left_count(static_cast<std::size_t>(node_count));
    std::vector<double> left_sum(static_cast<std::size_t>(node_count));
    std::vector<std::uint64_t> left_hash(static_cast<std::size_t>(node_count));
    std::vector<double> last(static_cast<std::size_t>(node_count));

    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      std::fill(left_count.begin(), left_count.end(), 0.0);
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      std::fill(left_hash.begin(), left_hash.end(), 0);
      for (int row : order[static_cast<std::size_t>(f)]) {
        const auto node = static_cast<std::size_t>(node_of[static_cast<std::size_t>(row)]);
        if (!is_active[node]) continue;
        const double value = x(row, f);
        if (left_count[node] > 0.0 && value > last[node]) {
          const NodeStats& s = stats[node];
          const double nl = left_count[node];
          const double nr = s.count - nl;
          const double sl = left_sum[node];
          const double sr = s.sum - sl;
          const double gain = sl * sl / nl + sr * sr / nr - s.sum * s.sum / s.count;
          Candidate& c = per_feature[node * static_cast<std::size_t>(x.cols()) + static_cast<std::size_t>(f)];
          if (gain > c.gain) {
            c = {gain, static_cast<int>(f), std::midpoint(last[node], value), left_hash[node]};
          }
        }
        left_count[node] += 1.0;
        left_sum[node] += target(row);
        left_hash[node] += mix64(static_cast<std::uint64_t>(row) + 1);
        last[node] = value;
      }
    }

    // Features whose gains tie (to rounding) are ranked by the fingerprint of
    // the partition they induce and only then by index, so the tree does not
    // depend on the order of the features. Tied features share the
    // importance credit.
    std::vector<Candidate> best(static_cast<std::size_t>(node_count));
    std::vector<std::vector<int>> tied(static_cast<std::size_t>(node_count));
    for (int a : active) {
      const auto node = static_cast<std::size_t>(a);
      const auto row = per_feature.begin() + static_cast<std::ptrdiff_t>(node * static_cast<std::size_t>(x.cols()));
      double top = 0.0;
      for (Eigen::Index f = 0; f < x.cols(); ++f) top = std::max(top, row[f].gain);
      if (!(top > 0.0)) continue;
      const double cut = top * (1.0 - 1e-12);
      for (Eigen::Index f = 0; f < x.cols(); ++f) {
        const Candidate& c = row[f];
        if (c.feature < 0 || c.gain < cut) continue;
        tied[node].push_back(c.feature);
        if (best[node].feature < 0 || c.left_hash < best[node].left_hash) best[node] = c;
      }
    }

    std::vector<int> next;
    for (int a : active) {
      const auto node = static_cast<std::size_t>(a);
      const NodeStats& s = stats[node];
      const double sse = s.sumsq - s.sum * s.sum / s.count;
      // Gains at rounding level on (near-)pure nodes are not real splits.
      const double min_gain = 1e-9 * sse + 1e-14 * s.sumsq;
      if (best[node].feature < 0 || !(best[node].gain > min_gain)) continue;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& parent = tree.nodes[node];
      parent.feature = best[node].feature;
      parent.threshold = best[node].threshold;
      parent.gain = best[node].gain;
      parent.left = left;
      parent.right = left + 1;
      if (importances != nullptr) {
        const double share = parent.gain / static_cast<double>(tied[node].size());
        for (int f : tied[node]) (*importances)(f) += share;
      }
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nd = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (nd.feature >= 0) {
        node_of[i] = x(static_cast<Eigen::Index>(i), nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
    }
    active = std::move(next);
  }

  const std::vector<NodeStats> stats = stats_of(static_cast<int>(tree.nodes.size()));
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    if (tree.nodes[k].feature < 0 && stats[k].count > 0.0) {
      tree.nodes[k].value = stats[k].sum / stats[k].count;
    }
  }
  return tree;
}

}  // namespace

RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                                   int max_depth, Eigen::VectorXd* importances) {
  if (importances != nullptr && importances->size() != x.cols()) {
    *importances = Eigen::VectorXd::Zero(x.cols());
  }
  return grow_tree(x, presort(x), target, max_depth, importances);
}

Eigen::MatrixXd GbtModel::decision_function(const Eigen::MatrixXd& x) const {
  const auto k = static_cast<Eigen::Index>(classes.size());
  Eigen::MatrixXd scores = base_scores.transpose().replicate(x.rows(), 1);
  for (const auto& round : rounds) {
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto& tree = round[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        scores(i, c) += params.learning_rate * tree.predict(x.row(i));
      }
    }
  }
  return scores;
}

std::vector<int> GbtModel::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()), classes.empty() ? 0 : classes.front());
  if (constant || classes.empty()) return out;
  const Eigen::MatrixXd scores = decision_function(x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

GbtModel fit_gbt(const Eigen::MatrixXd& x, std::span<const int> y, const GbtParams& params) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    fail(ErrorKind::kShapeError, "one label per row required");
  }
  if (x.rows() < 10) {
    fail(ErrorKind::kInsufficientSamples, "boosting needs at least 10 rows");
  }
  GbtModel model;
  model.params = params;
  model.classes.assign(y.begin(), y.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                      model.classes.end());
  model.importances = Eigen::VectorXd::Zero(x.cols());
  const auto k = static_cast<Eigen::Index>(model.classes.size());
  const Eigen::Index n = x.rows();

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto pos = std::lower_bound(model.classes.begin(), model.classes.end(),
                                      y[static_cast<std::size_t>(i)]) -
                     model.classes.begin();
    onehot(i, pos) = 1.0;
  }
  model.base_scores = onehot.colwise().mean().transpose();
  if (k == 1) {
    model.constant = true;
    model.train_loss = {0.0};
    return model;
  }

  const RowOrder order = presort(x);
  Eigen::MatrixXd scores = model.base_scores.transpose().replicate(n, 1);
  model.train_loss.push_back((onehot - scores).squaredNorm());
  for (int r = 0; r < params.n_rounds; ++r) {
    std::vector<RegressionTree> round;
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::VectorXd residual = onehot.col(c) - scores.col(c);
      RegressionTree tree =
          grow_tree(x, order, residual, params.max_depth, &model.importances);
      for (Eigen::Index i = 0; i < n; ++i) {
        scores(i, c) += params.learning_rate * tree.predict(x.row(i));
      }
      round.push_back(std::move(tree));
    }
    model.rounds.push_back(std::move(round));
    model.train_loss.push_back((onehot - scores).squaredNorm());
  }
  return model;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    fail(ErrorKind::kShapeError, "accuracy needs equal, non-empty label vectors");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace dyga
