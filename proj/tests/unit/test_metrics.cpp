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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "dyga/error.hpp"
#include "dyga/metrics.hpp"
#include "helpers.hpp"

using namespace dyga;
using dyga::testing::gaussian_matrix;

namespace {

FactorTable grid_factors(Eigen::Index n, const std::vector<int>& cards, SeededRng& rng) {
  Eigen::MatrixXi codes(n, static_cast<Eigen::Index>(cards.size()));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t f = 0; f < cards.size(); ++f)
      codes(i, static_cast<Eigen::Index>(f)) =
          static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cards[f])));
  FactorTable t;
  t.codes = codes;
  t.cardinalities = cards;
  return t;
}

// Unit u is factor u times a distinct scale.
Eigen::MatrixXd perfect_codes(const FactorTable& factors) {
  Eigen::MatrixXd codes = factors.codes.cast<double>();
  for (Eigen::Index u = 0; u < codes.cols(); ++u) codes.col(u) *= 0.5 + static_cast<double>(u);
  return codes;
}

FactorTable shuffled(const FactorTable& factors, SeededRng& rng) {
  return factors.rows(shuffled_indices(factors.samples(), rng));
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kIoError;
}

}  // namespace

TEST_CASE("binning follows equal frequency and affine maps") {
  std::vector<double> few{3.0, 1.0, 2.0, 1.0, 3.0};
  Binning b = Binning::fit(few, 20);
  CHECK(b.count() == 3);
  CHECK(b.edges() == std::vector<double>{1.5, 2.5});
  CHECK(b.bin(1.0) == 0);
  CHECK(b.bin(2.0) == 1);
  CHECK(b.bin(9.0) == 2);

  SeededRng rng(1);
  Eigen::VectorXd v = gaussian_matrix(1000, 1, rng).col(0);
  std::vector<int> labels = discretize(v, 10);
  std::vector<int> counts(10, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) CHECK(c == 100);
  CHECK(discretize((2.5 * v.array() - 4.0).matrix(), 10) == labels);
}

TEST_CASE("entropy and mutual information") {
  std::vector<int> four{0, 1, 2, 3, 0, 1, 2, 3};
  CHECK(entropy(four) == doctest::Approx(std::log(4.0)));
  CHECK(mutual_information(four, four) == doctest::Approx(std::log(4.0)));
  std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(mutual_information(a, b) == doctest::Approx(0.0));
  std::vector<int> constant(6, 2);
  CHECK(entropy(constant) == 0.0);
}

TEST_CASE("factorvae on perfect and noise codes") {
  SeededRng rng(2);
  FactorTable f = grid_factors(5000, {5, 5, 4, 3}, rng);
  SeededRng vote_rng(3);
  CHECK(factorvae_score(perfect_codes(f), f, 800, 64, vote_rng) >= 0.99);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeededRng data(100 + seed);
    FactorTable five = grid_factors(5000, {4, 4, 4, 4, 4}, data);
    SeededRng votes(seed);
    CHECK(factorvae_score(gaussian_matrix(5000, 5, data), five, 800, 64, votes) <= 0.45);
  }

  SeededRng r(4);
  CHECK(kind_of([&] { factorvae_score(Eigen::MatrixXd::Ones(5000, 4), f, 800, 64, r); }) ==
        ErrorKind::kDegenerateRepresentation);
}

TEST_CASE("dci from importance") {
  CHECK(dci_from_importance(Eigen::MatrixXd::Identity(4, 4)) == 1.0);
  CHECK(dci_from_importance(Eigen::MatrixXd::Ones(3, 3)) == doctest::Approx(0.0));
  CHECK(kind_of([] { dci_from_importance(Eigen::MatrixXd::Zero(2, 2)); }) ==
        ErrorKind::kDegenerateRepresentation);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = -1.0;
  CHECK(kind_of([&] { dci_from_importance(bad); }) == ErrorKind::kInvalidMatrix);

  // Direct evaluation of the entropy-weighted score.
  SeededRng rng(5);
  Eigen::MatrixXd r = gaussian_matrix(5, 3, rng).cwiseAbs();
  double total = r.sum(), expected = 0.0;
  for (Eigen::Index u = 0; u < 5; ++u) {
    const double row = r.row(u).sum();
    double h = 0.0;
    for (Eigen::Index f = 0; f < 3; ++f) {
      const double p = r(u, f) / row;
      if (p > 0) h -= p * std::log(p) / std::log(3.0);
    }
    expected += (row / total) * (1.0 - h);
  }
  CHECK(std::abs(dci_from_importance(r) - expected) < 1e-12);
}

TEST_CASE("dci on perfect codes") {
  SeededRng rng(6);
  FactorTable f = grid_factors(2000, {5, 5, 4, 3}, rng);
  Eigen::MatrixXd codes = perfect_codes(f);
  CHECK(dci_disentanglement(codes, f, ImportanceEstimator::kGbt).disentanglement >= 0.95);
  CHECK(dci_disentanglement(codes, f, ImportanceEstimator::kMutualInformation).disentanglement >= 0.95);
}

TEST_CASE("mig") {
  SeededRng rng(7);
  FactorTable f = grid_factors(10000, {5, 5, 4, 3}, rng);
  Eigen::MatrixXd perfect(10000, 6);
  perfect.leftCols(4) = perfect_codes(f);
  perfect.rightCols(2) = gaussian_matrix(10000, 2, rng);
  CHECK(mig(perfect, f, 5) >= 0.9);
  CHECK(mig(gaussian_matrix(10000, 4, rng), f) <= 0.05);

  // Duplicating factor 0's code removes its gap.
  FactorTable single;
  single.codes = f.codes.col(0);
  single.cardinalities = {5};
  Eigen::MatrixXd twice(10000, 2);
  twice.col(0) = perfect.col(0);
  twice.col(1) = perfect.col(0) * 3.0;
  CHECK(mig(twice, single) == doctest::Approx(0.0));

  FactorTable flat;
  flat.codes = Eigen::MatrixXi::Zero(100, 1);
  flat.cardinalities = {2};
  CHECK(kind_of([&] { mig(gaussian_matrix(100, 2, rng), flat); }) == ErrorKind::kDegenerateFactors);
}

TEST_CASE("sap") {
  SeededRng rng(8);
  FactorTable f = grid_factors(10000, {5, 4}, rng);
  Eigen::MatrixXd codes = perfect_codes(f);
  // Best unit is exact; the other unit is independent, so it only reaches
  // the majority rate.
  double expected = 0.0;
  for (int k = 0; k < 2; ++k) {
    std::vector<int> col = f.column(k);
    std::vector<int> counts(static_cast<std::size_t>(f.cardinalities[static_cast<std::size_t>(k)]), 0);
    for (std::size_t i = 0; i < col.size(); ++i)
      if (i % 5 == 4) ++counts[static_cast<std::size_t>(col[i])];
    expected += 1.0 - *std::max_element(counts.begin(), counts.end()) / 2000.0;
  }
  CHECK(sap(codes, f) == doctest::Approx(expected / 2).epsilon(0.02));
  CHECK(sap(gaussian_matrix(10000, 2, rng), f) <= 0.05);

  Eigen::MatrixXd twins(10000, 2);
  twins.col(0) = codes.col(0);
  twins.col(1) = codes.col(0);
  FactorTable first;
  first.codes = f.codes.col(0);
  first.cardinalities = {5};
  CHECK(sap(twins, first) == 0.0);
}

TEST_CASE("modularity") {
  CHECK(modularity_from_mi(Eigen::MatrixXd::Identity(3, 3)) == 1.0);
  CHECK(modularity_from_mi(Eigen::MatrixXd::Ones(2, 4)) == doctest::Approx(0.0));

  SeededRng rng(9);
  Eigen::MatrixXd m = gaussian_matrix(6, 4, rng).cwiseAbs();
  m.row(2).setZero();  // excluded from the mean
  double total = 0.0;
  int used = 0;
  for (Eigen::Index u = 0; u < 6; ++u) {
    if (m.row(u).maxCoeff() <= 0) continue;
    Eigen::Index best;
    const double top = m.row(u).maxCoeff(&best);
    double off = 0.0;
    for (Eigen::Index f = 0; f < 4; ++f)
      if (f != best) off += m(u, f) * m(u, f);
    total += 1.0 - off / (top * top * 3.0);
    ++used;
  }
  CHECK(std::abs(modularity_from_mi(m) - total / used) < 1e-12);
}

TEST_CASE("downstream efficiency") {
  SeededRng rng(10);
  FactorTable f = grid_factors(15000, {5, 4}, rng);
  DownstreamOptions options;
  options.gbt.n_rounds = 20;
  SeededRng split(1);
  DownstreamResult perfect = downstream_efficiency(perfect_codes(f), f, split, options);
  CHECK(perfect.acc >= 0.99);
  CHECK(perfect.acc_1000 >= 0.99);
  CHECK(perfect.acc_100 >= 0.99);
  CHECK(perfect.ratio_100 == doctest::Approx(1.0).epsilon(0.01));

  SeededRng split2(2);
  DownstreamResult noise = downstream_efficiency(gaussian_matrix(15000, 2, rng), f, split2, options);
  const double chance = 0.5 * (1.0 / 5 + 1.0 / 4);
  CHECK(std::abs(noise.acc - chance) < 0.03);
  CHECK(std::abs(noise.acc_100 - chance) < 0.06);

  SeededRng split3(3);
  CHECK(kind_of([&] {
          downstream_efficiency(perfect_codes(f).topRows(9000), f.rows(shuffled_indices(9000, split3)),
                                split3, options);
        }) == ErrorKind::kInsufficientSamples);
}

TEST_CASE("mean silhouette") {
  Eigen::MatrixXd pts(4, 1);
  pts << 0, 1, 10, 11;
  std::vector<int> labels{0, 0, 1, 1};
  // a = 1, b = 10 on average for every point.
  const double expected = (1 - 1.0 / 10.5) * 0.5 + (1 - 1.0 / 9.5) * 0.5;
  CHECK(mean_silhouette(pts, labels) == doctest::Approx(expected));
  std::vector<int> one(4, 0);
  CHECK(mean_silhouette(pts, one) == 0.0);
}

TEST_CASE("scores are invariant to affine rescaling and permutations") {
  SeededRng rng(11);
  FactorTable f = grid_factors(3000, {5, 4, 3}, rng);
  // Partially entangled codes so every score is away from its extremes.
  Eigen::MatrixXd codes = perfect_codes(f) + 0.8 * gaussian_matrix(3000, 3, rng);
  codes.col(1) += 0.5 * codes.col(0);

  MetricsConfig config;
  config.downstream = false;
  config.gbt.n_rounds = 10;
  MetricReport base = evaluate(Representation{codes}, f, config, 42);

  Eigen::MatrixXd scaled = codes;
  for (Eigen::Index u = 0; u < 3; ++u)
    scaled.col(u) = (scaled.col(u).array() * (0.3 + u) + 5.0 * u - 2.0).matrix();
  std::vector<MetricReport> variants;
  variants.push_back(evaluate(Representation{scaled}, f, config, 42));

  Eigen::MatrixXd units_permuted(3000, 3);
  units_permuted << codes.col(2), codes.col(0), codes.col(1);
  variants.push_back(evaluate(Representation{units_permuted}, f, config, 42));

  FactorTable factors_permuted;
  factors_permuted.codes.resize(3000, 3);
  factors_permuted.codes << f.codes.col(1), f.codes.col(2), f.codes.col(0);
  factors_permuted.cardinalities = {4, 3, 5};
  variants.push_back(evaluate(Representation{codes}, factors_permuted, config, 42));

  for (const auto& v : variants) {
    CHECK(std::abs(v.factorvae - base.factorvae) <= 1e-9);
    CHECK(std::abs(*v.dci_gbt - *base.dci_gbt) <= 1e-9);
    CHECK(std::abs(*v.dci_mi - *base.dci_mi) <= 1e-9);
    CHECK(std::abs(v.mig - base.mig) <= 1e-9);
    CHECK(std::abs(v.sap - base.sap) <= 1e-9);
    CHECK(std::abs(v.modularity - base.modularity) <= 1e-9);
  }
  for (double s : {base.factorvae, *base.dci_gbt, base.mig, base.sap, base.modularity}) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("shuffled factor rows collapse every score") {
  SeededRng rng(12);
  FactorTable f = grid_factors(10000, {5, 5, 5, 5, 5}, rng);
  Eigen::MatrixXd codes = perfect_codes(f);
  SeededRng shuffle_rng(13);
  FactorTable s = shuffled(f, shuffle_rng);
  SeededRng votes(14);
  CHECK(factorvae_score(codes, s, 800, 64, votes) <= 0.45);
  CHECK(mig(codes, s) <= 0.05);
  CHECK(sap(codes, s) <= 0.05);
}
