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

#include "dyga/anchoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dyga/error.hpp"
#include "dyga/numerics.hpp"

namespace dyga {

int DygaConfig::min_cluster_size(Eigen::Index n) const {
  const double scaled = std::ceil(min_cluster_fraction * static_cast<double>(n));
  return std::max(2, static_cast<int>(scaled));
}

void DygaConfig::validate() const {
  if (!(phi > 0.0 && phi < 1.0)) fail(ErrorKind::kConfigError, "phi must lie in (0,1)");
  if (!(psi > 0.0)) fail(ErrorKind::kConfigError, "psi must be positive");
  if (k0 < 1) fail(ErrorKind::kConfigError, "k0 must be >= 1");
  if (!(random_split_prob >= 0.0 && random_split_prob <= 1.0)) {
    fail(ErrorKind::kConfigError, "random_split_prob must lie in [0,1]");
  }
  if (!(min_cluster_fraction >= 0.0 && min_cluster_fraction < 1.0)) {
    fail(ErrorKind::kConfigError, "min_cluster_fraction must lie in [0,1)");
  }
  if (max_split_rounds < 0) fail(ErrorKind::kConfigError, "max_split_rounds must be >= 0");
  if (em.max_iter < 1) fail(ErrorKind::kConfigError, "em.max_iter must be >= 1");
  if (!(em.tol > 0.0)) fail(ErrorKind::kConfigError, "em.tol must be positive");
  if (!(em.floor > 0.0)) fail(ErrorKind::kConfigError, "em.floor must be positive");
}

void AlignmentConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) fail(ErrorKind::kConfigError, "lambda must lie in [0,1)");
  if (!(tau > 0.0)) fail(ErrorKind::kConfigError, "tau must be positive");
  if (!(ratio_epsilon > 0.0)) fail(ErrorKind::kConfigError, "ratio_epsilon must be positive");
}

std::vector<int> ClusterAssignment::member_counts(int k) const {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    if (member[i]) ++counts[static_cast<std::size_t>(anchor[i])];
  }
  return counts;
}

std::vector<Eigen::Index> ClusterAssignment::members_of(int k) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    if (member[i] && anchor[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

ClusterAssignment assign_clusters(const Responsibilities& resp, double phi) {
  ClusterAssignment out;
  out.anchor = argmax_rows(resp);
  out.member.resize(out.anchor.size());
  for (std::size_t i = 0; i < out.anchor.size(); ++i) {
    out.member[i] = resp(static_cast<Eigen::Index>(i), out.anchor[i]) > phi ? 1 : 0;
  }
  return out;
}

double cluster_density(const Eigen::MatrixXd& points) {
  if (points.rows() == 0) return 0.0;
  const Eigen::RowVectorXd centroid = points.colwise().mean();
  return (points.rowwise() - centroid).rowwise().norm().mean();
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& data,
                            const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data.row(rows[i]);
  }
  return out;
}

namespace {

MixtureState split_members(const MixtureState& mixture, const Eigen::MatrixXd& data, int comp,
                           const std::vector<Eigen::Index>& rows, const DygaConfig& config) {
  if (rows.size() < 4) {
    fail(ErrorKind::kSplitRefused, "component " + std::to_string(comp) + " has " +
                                       std::to_string(rows.size()) +
                                       " cluster members, need 4");
  }
  const Eigen::MatrixXd members = gather_rows(data, rows);
  const SubspaceGaussian& parent = mixture.components[static_cast<std::size_t>(comp)];
  const Eigen::VectorXd offset =
      std::sqrt(parent.retained_eigvals(0)) * parent.basis.col(0);
  const Eigen::MatrixXd parent_cov =
      parent.covariance.size() > 0 ? parent.covariance : parent.dense_covariance();

  MixtureState local;
  for (double sign : {1.0, -1.0}) {
    SubspaceGaussian child;
    child.weight = 0.5;
    child.mean = parent.mean + sign * offset;
    child.covariance = parent_cov;
    local.components.push_back(std::move(child));
  }
  local = update_subspaces(std::move(local), config.em.rule, config.em.floor);
  local = fit_em(members, std::move(local), config.em);

  MixtureState out = mixture;
  out.log_likelihood_trace.clear();
  for (auto& child : local.components) child.weight *= parent.weight;
  out.components[static_cast<std::size_t>(comp)] = local.components.front();
  for (std::size_t c = 1; c < local.components.size(); ++c) {
    out.components.push_back(local.components[c]);
  }
  const double total = out.total_weight();
  for (auto& g : out.components) g.weight /= total;
  return out;
}

std::vector<int> choose_from(const AnchorModel& model, const Eigen::MatrixXd& data,
                             const ClusterAssignment& assignment, SeededRng& rng,
                             double random_split_prob) {
  std::vector<int> eligible;
  std::vector<int> chosen;
  for (int c = 0; c < model.size(); ++c) {
    const auto rows = assignment.members_of(c);
    if (rows.size() < 4) continue;
    eligible.push_back(c);
    if (cluster_density(gather_rows(data, rows)) > model.density_threshold) {
      chosen.push_back(c);
    }
  }

  // The Bernoulli draw is always consumed so the stream does not depend on
  // the data.
  if (rng.uniform() < random_split_prob) {
    std::vector<int> candidates;
    for (int c : eligible) {
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) candidates.push_back(c);
    }
    if (!candidates.empty()) {
      chosen.push_back(candidates[rng.uniform_index(candidates.size())]);
      std::sort(chosen.begin(), chosen.end());
    }
  }
  return chosen;
}

}  // namespace

MixtureState split_component(const MixtureState& mixture, const Eigen::MatrixXd& data,
                             int comp, const DygaConfig& config) {
  if (comp < 0 || comp >= mixture.size()) {
    fail(ErrorKind::kDimensionError, "no component " + std::to_string(comp));
  }
  const ClusterAssignment assignment =
      assign_clusters(e_step(data, mixture), config.phi);
  MixtureState out = split_members(mixture, data, comp, assignment.members_of(comp), config);
  out.log_likelihood = log_likelihood(data, out);
  return out;
}

std::vector<int> choose_splits(const AnchorModel& model, const Eigen::MatrixXd& data,
                               SeededRng& rng, double random_split_prob) {
  const ClusterAssignment assignment =
      assign_clusters(e_step(data, model.mixture), model.membership_threshold);
  return choose_from(model, data, assignment, rng, random_split_prob);
}

MixtureState filter_small(const MixtureState& mixture, const ClusterAssignment& assignment,
                          int min_cluster_size) {
  const int k = mixture.size();
  const std::vector<int> counts = assignment.member_counts(k);
  int largest = 0;
  for (int c = 1; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(largest)]) largest = c;
  }
  std::vector<int> keep;
  for (int c = 0; c < k; ++c) {
    if (c == largest || counts[static_cast<std::size_t>(c)] >= min_cluster_size) keep.push_back(c);
  }
  if (static_cast<int>(keep.size()) == k) return mixture;

  MixtureState out;
  out.n_iters = mixture.n_iters;
  double total = 0.0;
  for (int c : keep) {
    out.components.push_back(mixture.components[static_cast<std::size_t>(c)]);
    total += out.components.back().weight;
  }
  for (auto& g : out.components) g.weight /= total;
  return out;
}

AnchorModel select_anchors(const Eigen::MatrixXd& data, const DygaConfig& config,
                           SeededRng& rng) {
  config.validate();
  if (data.rows() < 8) {
    fail(ErrorKind::kInsufficientSamples,
         "anchor selection needs at least 8 samples, got " + std::to_string(data.rows()));
  }
  AnchorModel model;
  model.membership_threshold = config.phi;
  model.density_threshold = config.psi;
  model.mixture = init_mixture(data, config.k0, rng, config.em);
  model.mixture = fit_em(data, std::move(model.mixture), config.em);

  for (int round = 0; round < config.max_split_rounds; ++round) {
    const ClusterAssignment assignment =
        assign_clusters(e_step(data, model.mixture), config.phi);
    const std::vector<int> splits =
        choose_from(model, data, assignment, rng, config.random_split_prob);
    if (splits.empty()) break;
    // Every chosen cluster splits on the membership computed at the start of
    // the round. Children are appended, so chosen indices stay valid.
    for (int comp : splits) {
      model.mixture = split_members(model.mixture, data, comp, assignment.members_of(comp), config);
    }
    model.mixture.log_likelihood = log_likelihood(data, model.mixture);
  }

  const ClusterAssignment assignment =
      assign_clusters(e_step(data, model.mixture), config.phi);
  model.mixture = filter_small(model.mixture, assignment,
                               config.min_cluster_size(data.rows()));
  model.mixture = fit_em(data, std::move(model.mixture), config.em);
  return model;
}

GumbelChoice gumbel_anchor_mean(const Eigen::VectorXd& resp_row,
                                const Eigen::MatrixXd& means,
                                const AlignmentConfig& config, SeededRng& rng) {
  const Eigen::Index k = resp_row.size();
  if (means.rows() != k) fail(ErrorKind::kDimensionError, "one mean per responsibility required");
  GumbelChoice out;
  if (config.hard_select) {
    out.index = argmax_rows(resp_row.transpose())[0];
    out.mean = means.row(out.index).transpose();
    return out;
  }

  Eigen::VectorXd scores(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double u = std::clamp(rng.uniform(), 1e-12, 1.0 - 1e-12);
    const double gumbel = -std::log(-std::log(u));
    double logit = resp_row(j);
    switch (config.mode) {
      case GumbelMode::kTemperedLogits: logit = resp_row(j) / config.tau; break;
      case GumbelMode::kLiteral: break;
      case GumbelMode::kLogResponsibility: logit = std::log(resp_row(j)); break;
    }
    scores(j) = (logit + gumbel) / config.tau;
  }
  const double norm = logsumexp(scores);
  const Eigen::VectorXd weights = (scores.array() - norm).exp().matrix();
  out.index = argmax_rows(weights.transpose())[0];
  out.mean = means.transpose() * weights;
  return out;
}

AlignedFeature align_feature(const Eigen::VectorXd& c, const Eigen::VectorXd& anchor,
                             double lambda, double ratio_epsilon) {
  if (c.size() != anchor.size()) fail(ErrorKind::kDimensionError, "feature/anchor size mismatch");
  AlignedFeature out;
  if (lambda == 0.0) {
    out.value = c;
    return out;
  }
  double ratio_sum = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double safe = std::copysign(std::max(std::abs(c(j)), ratio_epsilon), c(j));
    ratio_sum += std::abs((c(j) - anchor(j)) / safe);
  }
  const double mean_ratio = ratio_sum / static_cast<double>(c.size());
  // Keep delta strictly positive even when the exponential underflows.
  out.delta = std::min(lambda, std::max(lambda * std::exp(-mean_ratio),
                                        std::numeric_limits<double>::min()));
  out.value = c + out.delta * (anchor - c);
  return out;
}

AlignedBatch align_batch(const Eigen::MatrixXd& features, const AnchorModel& model,
                         const AlignmentConfig& config, SeededRng& rng) {
  config.validate();
  if (features.cols() != model.mixture.dim()) {
    fail(ErrorKind::kShapeError, "feature width " + std::to_string(features.cols()) +
                                     " != model dimension " +
                                     std::to_string(model.mixture.dim()));
  }
  const Eigen::Index n = features.rows();
  const Responsibilities resp = e_step(features, model.mixture);
  const Eigen::MatrixXd means = model.anchors();

  AlignedBatch out;
  out.features = features;
  out.delta = Eigen::VectorXd::Zero(n);
  out.anchor.assign(static_cast<std::size_t>(n), 0);
  out.targets.resize(n, features.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const GumbelChoice choice = gumbel_anchor_mean(resp.row(i).transpose(), means, config, rng);
    out.anchor[static_cast<std::size_t>(i)] = choice.index;
    out.targets.row(i) = choice.mean.transpose();
    if (config.lambda == 0.0) continue;
    const AlignedFeature aligned = align_feature(features.row(i).transpose(), choice.mean,
                                                 config.lambda, config.ratio_epsilon);
    out.features.row(i) = aligned.value.transpose();
    out.delta(i) = aligned.delta;
  }
  return out;
}

}  // namespace dyga
