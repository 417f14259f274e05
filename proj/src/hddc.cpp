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

#include "dyga/hddc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dyga/error.hpp"
#include "dyga/numerics.hpp"

namespace dyga {

int IntrinsicDimRule::select(const Eigen::VectorXd& eigvals) const {
  const int dim = static_cast<int>(eigvals.size());
  const int upper = std::max(1, dim - 1);
  switch (kind) {
    case Kind::kFull:
      return dim;
    case Kind::kFixed:
      return std::clamp(fixed_dim, 1, dim);
    case Kind::kScree: {
      const double top = eigvals(0);
      if (dim == 1 || !(top > 0.0)) return 1;
      int chosen = 1;
      for (int j = 0; j + 1 < dim; ++j) {
        if ((eigvals(j) - eigvals(j + 1)) / top >= threshold) chosen = j + 1;
      }
      return std::clamp(chosen, 1, upper);
    }
    case Kind::kVariance: {
      const double total = eigvals.sum();
      if (!(total > 0.0)) return 1;
      double running = 0.0;
      for (int j = 0; j < dim; ++j) {
        running += eigvals(j);
        if (running >= threshold * total) return std::clamp(j + 1, 1, upper);
      }
      return upper;
    }
  }
  return 1;
}

Eigen::MatrixXd MixtureState::means() const {
  Eigen::MatrixXd out(size(), dim());
  for (int k = 0; k < size(); ++k) out.row(k) = components[k].mean.transpose();
  return out;
}

double MixtureState::total_weight() const {
  double sum = 0.0;
  for (const auto& c : components) sum += c.weight;
  return sum;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < m.cols(); ++k) {
      if (m(i, k) > m(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

namespace {

// Maximum-likelihood scatter about `mean`, plus floor * I.
Eigen::MatrixXd regularized_scatter(const Eigen::MatrixXd& data,
                                    const Eigen::VectorXd& weights,
                                    const Eigen::VectorXd& mean, double total,
                                    double floor) {
  // Rows with negligible responsibility change the scatter by far less than
  // the floor; skipping them keeps many-component fits linear in the
  // cluster size rather than in N.
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (weights(i) > 1e-14) rows.push_back(i);
  }
  Eigen::MatrixXd centered(static_cast<Eigen::Index>(rows.size()), data.cols());
  Eigen::VectorXd w(centered.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto at = static_cast<Eigen::Index>(r);
    centered.row(at) = data.row(rows[r]) - mean.transpose();
    w(at) = weights(rows[r]);
  }
  const Eigen::MatrixXd weighted = centered.array().colwise() * w.array();
  Eigen::MatrixXd scatter = (weighted.transpose() * centered) / total;
  scatter = 0.5 * (scatter + scatter.transpose());
  scatter.diagonal().array() += floor;
  return scatter;
}

SubspaceGaussian component_from_moments(const Eigen::MatrixXd& data,
                                        const Eigen::VectorXd& weights,
                                        double weight, double floor) {
  const double total = weights.sum();
  SubspaceGaussian g;
  g.weight = weight;
  g.mean = (data.transpose() * weights) / total;
  g.covariance = regularized_scatter(data, weights, g.mean, total, floor);
  return g;
}

struct MStepOutcome {
  MixtureState state;
  std::vector<int> starved;
};

MStepOutcome m_step_impl(const Eigen::MatrixXd& data, const Responsibilities& resp,
                         double floor) {
  const auto n = static_cast<double>(data.rows());
  MStepOutcome out;
  for (Eigen::Index k = 0; k < resp.cols(); ++k) {
    const Eigen::VectorXd w = resp.col(k);
    const double nk = w.sum();
    if (!(nk >= 1e-8 * n)) {
      out.starved.push_back(static_cast<int>(k));
      continue;
    }
    out.state.components.push_back(component_from_moments(data, w, nk / n, floor));
  }
  return out;
}

}  // namespace

MixtureState init_mixture(const Eigen::MatrixXd& data, int k0, SeededRng& rng,
                          const EmOptions& options) {
  const Eigen::Index n = data.rows();
  if (k0 < 1) fail(ErrorKind::kInsufficientSamples, "k0 must be at least 1");
  if (n < 2 * static_cast<Eigen::Index>(k0)) {
    fail(ErrorKind::kInsufficientSamples,
         std::to_string(n) + " samples cannot seed " + std::to_string(k0) +
             " components (need 2 per component)");
  }

  auto sq_dist_to = [&](Eigen::Index row) {
    return (data.rowwise() - data.row(row)).rowwise().squaredNorm().eval();
  };

  std::vector<Eigen::Index> seeds;
  seeds.push_back(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd nearest = sq_dist_to(seeds.back());
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k0)));

  for (int c = 1; c < k0; ++c) {
    const double potential = nearest.sum();
    Eigen::Index best_row = -1;
    double best_potential = 0.0;
    Eigen::VectorXd best_nearest;
    for (int t = 0; t < trials; ++t) {
      Eigen::Index row = 0;
      if (potential > 0.0) {
        const double target = rng.uniform() * potential;
        double acc = 0.0;
        row = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          acc += nearest(i);
          if (acc > target) {
            row = i;
            break;
          }
        }
      } else {
        row = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
      }
      Eigen::VectorXd candidate = nearest.cwiseMin(sq_dist_to(row));
      const double cand_potential = candidate.sum();
      if (best_row < 0 || cand_potential < best_potential) {
        best_row = row;
        best_potential = cand_potential;
        best_nearest = std::move(candidate);
      }
    }
    seeds.push_back(best_row);
    nearest = std::move(best_nearest);
  }

  // Voronoi cells of the seeds, ties to the lowest seed index.
  Eigen::MatrixXd dist(n, k0);
  for (int c = 0; c < k0; ++c) dist.col(c) = sq_dist_to(seeds[static_cast<std::size_t>(c)]);
  std::vector<int> cell(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < k0; ++c) {
      if (dist(i, c) < dist(i, best)) best = c;
    }
    cell[static_cast<std::size_t>(i)] = best;
  }

  const Eigen::VectorXd all = Eigen::VectorXd::Ones(n);
  const SubspaceGaussian global =
      component_from_moments(data, all, 1.0, options.floor);

  MixtureState state;
  for (int c = 0; c < k0; ++c) {
    Eigen::VectorXd member = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (cell[static_cast<std::size_t>(i)] == c) member(i) = 1.0;
    }
    const double count = member.sum();
    SubspaceGaussian g;
    if (count >= 2.0) {
      g = component_from_moments(data, member, 0.0, options.floor);
    } else {
      g.mean = count >= 1.0 ? Eigen::VectorXd((data.transpose() * member) / count)
                            : Eigen::VectorXd(data.row(seeds[static_cast<std::size_t>(c)]).transpose());
      g.covariance = global.covariance;
    }
    g.weight = 1.0 / k0;
    state.components.push_back(std::move(g));
  }
  state = update_subspaces(std::move(state), options.rule, options.floor);
  state.log_likelihood = log_likelihood(data, state);
  state.log_likelihood_trace = {state.log_likelihood};
  return state;
}

EStepResult e_step_with_likelihood(const Eigen::MatrixXd& data,
                                   const MixtureState& mixture) {
  const Eigen::Index n = data.rows();
  const int k = mixture.size();
  // Only non-positive variances are rejected here; the floor is enforced
  // when the subspaces are built.
  Eigen::MatrixXd log_joint = log_gaussian_pdf_matrix(
      data, mixture.components, std::numeric_limits<double>::min());
  for (int j = 0; j < k; ++j) {
    log_joint.col(j).array() += std::log(mixture.components[static_cast<std::size_t>(j)].weight);
  }
  EStepResult out;
  out.resp.resize(n, k);
  out.log_likelihood = 0.0;
  Eigen::VectorXd row(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    row = log_joint.row(i).transpose();
    const double norm = logsumexp(row);
    out.log_likelihood += norm;
    out.resp.row(i) = (row.array() - norm).exp().transpose();
  }
  return out;
}

Responsibilities e_step(const Eigen::MatrixXd& data, const MixtureState& mixture) {
  return e_step_with_likelihood(data, mixture).resp;
}

double log_likelihood(const Eigen::MatrixXd& data, const MixtureState& mixture) {
  return e_step_with_likelihood(data, mixture).log_likelihood;
}

MixtureState m_step(const Eigen::MatrixXd& data, const Responsibilities& resp,
                    double floor) {
  MStepOutcome out = m_step_impl(data, resp, floor);
  if (!out.starved.empty()) {
    fail(ErrorKind::kComponentStarved,
         "component " + std::to_string(out.starved.front()) +
             " has total responsibility below 1e-8 * N");
  }
  return std::move(out.state);
}

namespace {

void set_subspace(SubspaceGaussian& g, const EigenSystem& eig, const Eigen::VectorXd& values,
                  int kept, double floor) {
  const int dim = static_cast<int>(values.size());
  g.basis = eig.vectors.leftCols(kept);
  g.retained_eigvals = values.head(kept);
  g.tied_noise = kept < dim ? std::max(values.tail(dim - kept).mean(), floor)
                            : values(dim - 1);
}

// Subspaces from the rule, plus the alternative that keeps `previous_dims`.
// `alternative` is left empty when both choices coincide.
MixtureState update_subspaces_with_alternative(MixtureState mixture,
                                               const IntrinsicDimRule& rule, double floor,
                                               const std::vector<int>& previous_dims,
                                               MixtureState& alternative) {
  alternative.components.clear();
  bool differs = false;
  std::vector<EigenSystem> eigs;
  std::vector<Eigen::VectorXd> spectra;
  for (std::size_t k = 0; k < mixture.components.size(); ++k) {
    auto& g = mixture.components[k];
    eigs.push_back(sym_eig(SymMatrix::symmetrized(g.covariance)));
    spectra.push_back(eigs.back().values.cwiseMax(floor));
    const int kept = rule.select(spectra.back());
    set_subspace(g, eigs.back(), spectra.back(), kept, floor);
    if (k < previous_dims.size() && previous_dims[k] != kept) differs = true;
  }
  if (differs && previous_dims.size() == mixture.components.size()) {
    alternative = mixture;
    for (std::size_t k = 0; k < mixture.components.size(); ++k) {
      const int kept = std::clamp(previous_dims[k], 1, static_cast<int>(spectra[k].size()));
      set_subspace(alternative.components[k], eigs[k], spectra[k], kept, floor);
    }
  }
  return mixture;
}

}  // namespace

MixtureState update_subspaces(MixtureState mixture, const IntrinsicDimRule& rule,
                              double floor) {
  for (auto& g : mixture.components) {
    const EigenSystem eig = sym_eig(SymMatrix::symmetrized(g.covariance));
    const Eigen::VectorXd values = eig.values.cwiseMax(floor);
    set_subspace(g, eig, values, rule.select(values), floor);
  }
  return mixture;
}

MixtureState fit_em(const Eigen::MatrixXd& data, MixtureState init,
                    const EmOptions& options) {
  if (options.max_iter < 1) fail(ErrorKind::kInvalidSpec, "max_iter must be >= 1");
  if (!(options.tol > 0.0)) fail(ErrorKind::kInvalidSpec, "tol must be positive");

  MixtureState state = std::move(init);
  EStepResult current = e_step_with_likelihood(data, state);
  state.log_likelihood_trace = {current.log_likelihood};
  state.n_iters = 0;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    MStepOutcome m = m_step_impl(data, current.resp, options.floor);
    if (!m.starved.empty()) {
      if (m.state.components.empty()) {
        fail(ErrorKind::kComponentStarved, "every component starved");
      }
      // Drop starved columns and renormalize before re-running the M-step.
      std::vector<int> keep;
      for (Eigen::Index k = 0; k < current.resp.cols(); ++k) {
        if (std::find(m.starved.begin(), m.starved.end(), k) == m.starved.end()) {
          keep.push_back(static_cast<int>(k));
        }
      }
      Responsibilities trimmed(current.resp.rows(), static_cast<Eigen::Index>(keep.size()));
      for (std::size_t c = 0; c < keep.size(); ++c) {
        trimmed.col(static_cast<Eigen::Index>(c)) = current.resp.col(keep[c]);
      }
      const Eigen::VectorXd sums = trimmed.rowwise().sum();
      for (Eigen::Index i = 0; i < trimmed.rows(); ++i) {
        if (sums(i) > 0.0) trimmed.row(i) /= sums(i);
        else trimmed.row(i).setConstant(1.0 / static_cast<double>(trimmed.cols()));
      }
      m = m_step_impl(data, trimmed, options.floor);
    }
    // With the dimensions held fixed the update cannot lower the
    // likelihood, so a change of intrinsic dimension is only accepted when
    // it does at least as well.
    std::vector<int> previous_dims;
    if (m.starved.empty()) {
      for (const auto& g : state.components) previous_dims.push_back(g.intrinsic_dim());
    }
    MixtureState same_dims;
    MixtureState next = update_subspaces_with_alternative(std::move(m.state), options.rule,
                                                          options.floor, previous_dims, same_dims);
    EStepResult evaluated = e_step_with_likelihood(data, next);
    if (!same_dims.components.empty()) {
      EStepResult kept = e_step_with_likelihood(data, same_dims);
      if (kept.log_likelihood > evaluated.log_likelihood) {
        next = std::move(same_dims);
        evaluated = std::move(kept);
      }
    }

    const double previous = current.log_likelihood;
    next.log_likelihood_trace = std::move(state.log_likelihood_trace);
    next.log_likelihood_trace.push_back(evaluated.log_likelihood);
    next.n_iters = iter;
    state = std::move(next);
    current = std::move(evaluated);

    const double gain = (current.log_likelihood - previous) /
                        std::max(std::abs(previous), 1e-300);
    if (!(gain >= options.tol)) break;
  }
  state.log_likelihood = current.log_likelihood;
  return state;
}

}  // namespace dyga
