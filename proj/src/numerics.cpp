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

#include "dyga/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "dyga/error.hpp"

namespace dyga {

SymMatrix::SymMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    fail(ErrorKind::kInvalidMatrix, "symmetric matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < entries_.cols(); ++j) {
      // NaN entries are caught by sym_eig, not here.
      if (entries_(i, j) != entries_(j, i) &&
          !(std::isnan(entries_(i, j)) && std::isnan(entries_(j, i)))) {
        fail(ErrorKind::kInvalidMatrix, "matrix is not symmetric");
      }
    }
  }
}

SymMatrix SymMatrix::symmetrized(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    fail(ErrorKind::kInvalidMatrix, "symmetric matrix must be square and non-empty");
  }
  SymMatrix out;
  out.entries_ = 0.5 * (m + m.transpose());
  return out;
}

SymMatrix SymMatrix::identity(int dim) {
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

EigenSystem sym_eig(const SymMatrix& m) {
  const int n = m.dim();
  Eigen::MatrixXd a = m.entries();
  if (!a.allFinite()) fail(ErrorKind::kInvalidMatrix, "non-finite entries");

  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double norm = a.norm();
  constexpr int kMaxSweeps = 100;

  auto off_diagonal = [&] {
    double sum = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) sum += a(p, q) * a(p, q);
    return std::sqrt(2.0 * sum);
  };

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal() <= 1e-12 * norm) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t =
            std::copysign(1.0, theta) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const Eigen::VectorXd col_p = a.col(p);
        a.col(p) = c * col_p - s * a.col(q);
        a.col(q) = s * col_p + c * a.col(q);
        // The rotated matrix is symmetric: rows p, q mirror the new columns
        // except for the 2 x 2 block.
        a.row(p) = a.col(p).transpose();
        a.row(q) = a.col(q).transpose();
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        const Eigen::VectorXd v_p = v.col(p);
        v.col(p) = c * v_p - s * v.col(q);
        v.col(q) = s * v_p + c * v.col(q);
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });

  EigenSystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    out.values(j) = a(order[j], order[j]);
    Eigen::VectorXd col = v.col(order[j]);
    Eigen::Index pivot = 0;
    for (Eigen::Index k = 1; k < col.size(); ++k) {
      if (std::abs(col(k)) > std::abs(col(pivot))) pivot = k;
    }
    if (col(pivot) < 0.0) col = -col;
    out.vectors.col(j) = col;
  }
  return out;
}

Eigen::MatrixXd PcaModel::project(const Eigen::MatrixXd& data, int k) const {
  if (k < 1 || k > components.cols()) {
    fail(ErrorKind::kDimensionError,
         "requested " + std::to_string(k) + " components of " +
             std::to_string(components.cols()));
  }
  if (data.cols() != mean.size()) {
    fail(ErrorKind::kDimensionError, "data width does not match PCA model");
  }
  return (data.rowwise() - mean.transpose()) * components.leftCols(k);
}

PcaModel pca_fit(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) {
    fail(ErrorKind::kInsufficientSamples, "PCA needs at least 2 samples");
  }
  if (data.cols() < 1) fail(ErrorKind::kDimensionError, "PCA needs D >= 1");
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  EigenSystem eig = sym_eig(SymMatrix::symmetrized(cov));
  model.components = std::move(eig.vectors);
  model.explained_variance = eig.values.cwiseMax(0.0);
  return model;
}

Eigen::MatrixXd pca_reduce_unit(const Eigen::MatrixXd& features, int k) {
  if (k < 1 || k > features.cols()) {
    fail(ErrorKind::kDimensionError,
         "k=" + std::to_string(k) + " outside [1, " +
             std::to_string(features.cols()) + "]");
  }
  return pca_fit(features).project(features, k);
}

double logsumexp(std::span<const double> xs) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (xs.empty()) return kNegInf;
  const double top = *std::max_element(xs.begin(), xs.end());
  if (std::isnan(top)) return top;
  if (!std::isfinite(top)) return top;  // all -inf, or some +inf
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - top);
  return top + std::log(sum);
}

double logsumexp(const Eigen::VectorXd& xs) {
  return logsumexp(std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size())));
}

namespace {

void check_component(const SubspaceGaussian& g, Eigen::Index width, double floor) {
  if (width != g.dim()) {
    fail(ErrorKind::kDimensionError, "point dimension " + std::to_string(width) +
                                         " != component dimension " +
                                         std::to_string(g.dim()));
  }
  if (g.basis.rows() != g.dim() || g.retained_eigvals.size() != g.basis.cols()) {
    fail(ErrorKind::kDimensionError, "inconsistent subspace parameters");
  }
  const bool has_complement = g.intrinsic_dim() < g.dim();
  if ((g.retained_eigvals.size() > 0 && g.retained_eigvals.minCoeff() < floor) ||
      (has_complement && g.tied_noise < floor)) {
    fail(ErrorKind::kRegularizationRequired,
         "variance below regularization floor " + std::to_string(floor));
  }
}

}  // namespace

Eigen::VectorXd log_gaussian_pdf_rows(const Eigen::MatrixXd& data,
                                      const SubspaceGaussian& g, double floor) {
  check_component(g, data.cols(), floor);
  const int dim = g.dim();
  const int kept = g.intrinsic_dim();
  const int rest = dim - kept;

  double log_det = g.retained_eigvals.array().log().sum();
  if (rest > 0) log_det += rest * std::log(g.tied_noise);
  const double constant =
      -0.5 * (dim * std::log(2.0 * std::numbers::pi) + log_det);

  const Eigen::MatrixXd diff = data.rowwise() - g.mean.transpose();
  const Eigen::MatrixXd proj = diff * g.basis;
  const Eigen::VectorXd inv_eig = g.retained_eigvals.cwiseInverse();
  Eigen::VectorXd quad = proj.array().square().matrix() * inv_eig;
  if (rest > 0) {
    const Eigen::ArrayXd residual =
        (diff.rowwise().squaredNorm() - proj.rowwise().squaredNorm())
            .array()
            .max(0.0);
    quad.array() += residual / g.tied_noise;
  }
  return (constant - 0.5 * quad.array()).matrix();
}

Eigen::MatrixXd log_gaussian_pdf_matrix(const Eigen::MatrixXd& data,
                                        std::span<const SubspaceGaussian> components,
                                        double floor) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(components.size()));
  if (components.empty()) return out;
  const Eigen::RowVectorXd center = data.colwise().mean();
  const Eigen::MatrixXd x = data.rowwise() - center;
  const Eigen::ArrayXd sq = x.rowwise().squaredNorm().array();

  for (std::size_t c = 0; c < components.size(); ++c) {
    const SubspaceGaussian& g = components[c];
    check_component(g, data.cols(), floor);
    const int dim = g.dim();
    const int kept = g.intrinsic_dim();
    const int rest = dim - kept;
    double log_det = g.retained_eigvals.array().log().sum();
    if (rest > 0) log_det += rest * std::log(g.tied_noise);
    const double constant = -0.5 * (dim * std::log(2.0 * std::numbers::pi) + log_det);

    const Eigen::VectorXd m = g.mean - center.transpose();
    Eigen::MatrixXd cols(dim, kept + 1);
    cols.leftCols(kept) = g.basis;
    cols.col(kept) = m;
    Eigen::MatrixXd p = x * cols;
    const Eigen::RowVectorXd shift = m.transpose() * g.basis;
    p.leftCols(kept).rowwise() -= shift;

    const Eigen::ArrayXd proj_sq = p.leftCols(kept).rowwise().squaredNorm().array();
    Eigen::ArrayXd quad = (p.leftCols(kept).array().square().matrix() *
                           g.retained_eigvals.cwiseInverse()).array();
    if (rest > 0) {
      const Eigen::ArrayXd dist_sq = sq - 2.0 * p.col(kept).array() + m.squaredNorm();
      quad += (dist_sq - proj_sq).max(0.0) / g.tied_noise;
    }
    out.col(static_cast<Eigen::Index>(c)) = (constant - 0.5 * quad).matrix();
  }
  return out;
}

double log_gaussian_pdf(const Eigen::VectorXd& x, const SubspaceGaussian& g,
                        double floor) {
  return log_gaussian_pdf_rows(x.transpose(), g, floor)(0);
}

}  // namespace dyga
