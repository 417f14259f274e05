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

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "doctest.h"
#include "dyga/error.hpp"
#include "dyga/numerics.hpp"
#include "dyga/rng.hpp"
#include "helpers.hpp"

using namespace dyga;
using dyga::testing::dense_log_pdf;
using dyga::testing::gaussian_matrix;
using dyga::testing::random_spd;

namespace {

SymMatrix random_sym(int d, SeededRng& rng) {
  Eigen::MatrixXd a = gaussian_matrix(d, d, rng);
  return SymMatrix::symmetrized(a);
}

double orthonormality_error(const Eigen::MatrixXd& v) {
  return (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("SeededRng streams are reproducible and distinct") {
  SeededRng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);

  // Draw i depends only on (seed, stream, i).
  SeededRng fresh(42, 7);
  CHECK(fresh.next_u64() == SeededRng(42, 7).next_u64());
  CHECK(a.fork(3).next_u64() == SeededRng(42, 3).next_u64());
}

TEST_CASE("SeededRng draws stay in range with sane moments") {
  SeededRng rng(1);
  double sum = 0.0, sum2 = 0.0;
  std::vector<int> counts(7, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    ++counts[rng.uniform_index(7)];
    double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
  for (int c : counts) CHECK(std::abs(c / double(n) - 1.0 / 7.0) < 0.005);
}

TEST_CASE("SymMatrix rejects asymmetric and non-finite input") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2.0000001, 1;
  CHECK_THROWS_AS(SymMatrix{a}, Error);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Identity(2, 2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    sym_eig(SymMatrix(nan));
    FAIL("expected InvalidMatrix");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidMatrix);
  }
}

TEST_CASE("sym_eig on identity and diagonal matrices") {
  EigenSystem id = sym_eig(SymMatrix::identity(3));
  CHECK(id.values.isApprox(Eigen::Vector3d(1, 1, 1)));
  CHECK(orthonormality_error(id.vectors) < 1e-12);

  Eigen::MatrixXd d(2, 2);
  d << 1, 0, 0, 3;
  EigenSystem es = sym_eig(SymMatrix(d));
  CHECK(es.values(0) == doctest::Approx(3.0));
  CHECK(es.values(1) == doctest::Approx(1.0));
  CHECK(es.vectors(1, 0) == doctest::Approx(1.0));
  CHECK(es.vectors(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig matches a reference eigensolver") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 9;
    SymMatrix m = random_sym(d, rng);
    EigenSystem es = sym_eig(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m.entries());
    Eigen::VectorXd ref_values = ref.eigenvalues().reverse();
    const double scale = m.entries().norm();

    CHECK((es.values - ref_values).cwiseAbs().maxCoeff() < 1e-10 * scale);
    CHECK(orthonormality_error(es.vectors) < 1e-10);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd v = es.vectors.col(j);
      CHECK((m.entries() * v - es.values(j) * v).norm() < 1e-10 * std::max(1.0, scale));
      Eigen::Index at;
      v.cwiseAbs().maxCoeff(&at);
      CHECK(v(at) > 0.0);
      if (j > 0) CHECK(es.values(j - 1) >= es.values(j));
    }
    Eigen::MatrixXd rebuilt = es.vectors * es.values.asDiagonal() * es.vectors.transpose();
    CHECK((rebuilt - m.entries()).norm() < 1e-8 * scale);
    CHECK(std::abs(es.values.sum() - m.entries().trace()) < 1e-8 * std::max(1.0, scale));
  }
}

TEST_CASE("sym_eig keeps PSD spectra non-negative") {
  SeededRng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a = gaussian_matrix(8, 3, rng);  // rank 3
    EigenSystem es = sym_eig(SymMatrix::symmetrized(a * a.transpose()));
    CHECK(es.values.minCoeff() >= -1e-10);
  }
}

TEST_CASE("sym_eig is bit-reproducible") {
  SeededRng rng(5);
  SymMatrix m = random_sym(7, rng);
  EigenSystem a = sym_eig(m), b = sym_eig(m);
  CHECK(a.values == b.values);
  CHECK(a.vectors == b.vectors);
}

TEST_CASE("pca_fit on rank-1 data and under translation") {
  const int n = 40;
  Eigen::MatrixXd line(n, 2);
  for (int i = 0; i < n; ++i) line.row(i) = (i - 13.5) * Eigen::RowVector2d(1, 1) / std::sqrt(2.0);
  PcaModel p = pca_fit(line);
  CHECK(std::abs(std::abs(p.components(0, 0)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(std::abs(p.components(1, 0)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(p.explained_variance(1)) < 1e-12);

  SeededRng rng(3);
  Eigen::MatrixXd x = gaussian_matrix(200, 4, rng) * random_spd(4, rng);
  Eigen::MatrixXd shifted = x.rowwise() + Eigen::RowVectorXd::Constant(4, 5.0);
  PcaModel a = pca_fit(x), b = pca_fit(shifted);
  CHECK((a.components - b.components).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pca_fit on isotropic samples") {
  SeededRng rng(77);
  PcaModel p = pca_fit(gaussian_matrix(10000, 3, rng));
  for (int j = 0; j < 3; ++j) {
    CHECK(p.explained_variance(j) > 0.9);
    CHECK(p.explained_variance(j) < 1.1);
  }
}

TEST_CASE("pca preconditions") {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIoError;
  };
  CHECK(kind_of([] { pca_fit(Eigen::MatrixXd::Ones(1, 3)); }) == ErrorKind::kInsufficientSamples);
  CHECK(kind_of([] { pca_reduce_unit(Eigen::MatrixXd::Ones(5, 3), 4); }) ==
        ErrorKind::kDimensionError);
}

TEST_CASE("pca_reduce_unit projections") {
  SeededRng rng(11);
  Eigen::MatrixXd one = gaussian_matrix(30, 1, rng);
  Eigen::MatrixXd centered = one.rowwise() - one.colwise().mean();
  CHECK((pca_reduce_unit(one, 1) - centered).cwiseAbs().maxCoeff() < 1e-12);

  // Rank-1 data keeps its pairwise distances in one dimension.
  Eigen::VectorXd t = gaussian_matrix(25, 1, rng).col(0);
  Eigen::RowVectorXd dir = gaussian_matrix(1, 5, rng).row(0).normalized();
  Eigen::MatrixXd rank1 = t * dir;
  rank1.rowwise() += Eigen::RowVectorXd::Constant(5, 2.0);
  Eigen::MatrixXd z = pca_reduce_unit(rank1, 1);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 25; ++j)
      CHECK(std::abs(std::abs(z(i, 0) - z(j, 0)) - (rank1.row(i) - rank1.row(j)).norm()) < 1e-8);

  Eigen::MatrixXd x = gaussian_matrix(60, 4, rng);
  Eigen::MatrixXd full = pca_reduce_unit(x, 4);
  Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  CHECK(std::abs(full.squaredNorm() - xc.squaredNorm()) < 1e-8);
}

TEST_CASE("logsumexp matches the closed forms") {
  std::vector<double> zeros{0.0, 0.0};
  CHECK(logsumexp(zeros) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  std::vector<double> big{1000.0, 1000.0};
  CHECK(std::abs(logsumexp(big) - (1000.0 + std::log(2.0))) < 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> empty_mass{-inf, -inf};
  CHECK(logsumexp(empty_mass) == -inf);
}

TEST_CASE("logsumexp agrees with a 50-digit direct sum") {
  using big = boost::multiprecision::cpp_bin_float_50;
  SeededRng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs(100);
    const double spread = 1.0 + 50.0 * trial;
    for (double& x : xs) x = spread * (rng.uniform() - 0.5);
    big total = 0;
    for (double x : xs) total += boost::multiprecision::exp(big(x));
    double oracle = static_cast<double>(boost::multiprecision::log(total));
    CHECK(std::abs(logsumexp(xs) - oracle) < 1e-12 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("log_gaussian_pdf standard cases") {
  SubspaceGaussian g;
  g.mean = Eigen::Vector2d(0.5, -1.0);
  g.basis = Eigen::MatrixXd::Identity(2, 2);
  g.retained_eigvals = Eigen::Vector2d(1.0, 1.0);
  g.tied_noise = 1.0;
  Eigen::VectorXd x = g.mean + Eigen::Vector2d(1.0, 0.0);
  CHECK(std::abs(log_gaussian_pdf(x, g) - (-std::log(2 * std::numbers::pi) - 0.5)) < 1e-14);

  // Mode of a full Gaussian.
  SeededRng rng(4);
  Eigen::MatrixXd sigma = random_spd(4, rng);
  SubspaceGaussian full = testing::full_component(Eigen::VectorXd::Zero(4), sigma, 1.0);
  double expected = -2.0 * std::log(2 * std::numbers::pi) - 0.5 * std::log(sigma.determinant());
  CHECK(std::abs(log_gaussian_pdf(full.mean, full) - expected) < 1e-10);
}

TEST_CASE("log_gaussian_pdf matches a dense oracle in subspace form") {
  SeededRng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 6;
    const int kept = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(d)));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(d, d, rng));
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, kept);
    SubspaceGaussian g;
    g.mean = gaussian_matrix(d, 1, rng).col(0);
    g.basis = q;
    g.tied_noise = 0.05 + rng.uniform();
    g.retained_eigvals.resize(kept);
    double level = g.tied_noise;
    for (int j = kept - 1; j >= 0; --j) g.retained_eigvals(j) = (level += 2.0 * rng.uniform());
    Eigen::VectorXd x = g.mean + 1.5 * gaussian_matrix(d, 1, rng).col(0);
    CHECK(std::abs(log_gaussian_pdf(x, g) - dense_log_pdf(x, g.mean, g.dense_covariance())) < 1e-9);
  }
}

TEST_CASE("log_gaussian_pdf floors and shapes") {
  SubspaceGaussian g;
  g.mean = Eigen::Vector3d::Zero();
  g.basis = Eigen::MatrixXd::Identity(3, 1);
  g.retained_eigvals = Eigen::VectorXd::Constant(1, 2.0);
  g.tied_noise = 1e-9;
  try {
    log_gaussian_pdf(Eigen::Vector3d::Zero(), g);
    FAIL("expected RegularizationRequired");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kRegularizationRequired);
  }
  g.tied_noise = 0.5;
  CHECK_THROWS_AS(log_gaussian_pdf(Eigen::Vector2d::Zero(), g), Error);
}

TEST_CASE("log_gaussian_pdf_matrix agrees with the row-wise path") {
  SeededRng rng(8);
  const int d = 6;
  Eigen::MatrixXd data = gaussian_matrix(300, d, rng).array() + 3.0;
  std::vector<SubspaceGaussian> comps;
  for (int k = 0; k < 3; ++k) {
    SubspaceGaussian g = testing::full_component(gaussian_matrix(d, 1, rng).col(0),
                                                 random_spd(d, rng), 1.0 / 3);
    g.basis = g.basis.leftCols(k + 1).eval();
    g.retained_eigvals = g.retained_eigvals.head(k + 1).eval();
    g.tied_noise = 0.3;
    comps.push_back(g);
  }
  Eigen::MatrixXd m = log_gaussian_pdf_matrix(data, comps);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd rows = log_gaussian_pdf_rows(data, comps[static_cast<std::size_t>(k)]);
    CHECK((m.col(k) - rows).cwiseAbs().maxCoeff() < 1e-9);
  }
}
