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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dyga/factors.hpp"
#include "dyga/gbt.hpp"
#include "dyga/rng.hpp"

namespace dyga {

// One scalar code per latent unit: N x U.
struct Representation {
  Eigen::MatrixXd codes;

  // Reduces each N x D unit to its first principal component.
  static Representation from_units(const std::vector<Eigen::MatrixXd>& units);
  int units() const { return static_cast<int>(codes.cols()); }
};

using ImportanceMatrix = Eigen::MatrixXd;  // U x F, non-negative

enum class ImportanceEstimator { kGbt, kMutualInformation };

// Equal-frequency binning. When a code takes at most `bins` distinct values,
// each distinct value gets its own bin. Edges sit halfway between
// neighbouring observed values, so the binning commutes with increasing
// affine maps.
class Binning {
 public:
  static Binning fit(std::span<const double> values, int bins);
  int bin(double x) const;
  int count() const { return static_cast<int>(edges_.size()) + 1; }
  const std::vector<double>& edges() const { return edges_; }

 private:
  std::vector<double> edges_;
};

std::vector<int> discretize(const Eigen::VectorXd& values, int bins);

// Plug-in estimates in nats.
double entropy(std::span<const int> labels);
double mutual_information(std::span<const int> a, std::span<const int> b);

// U x F matrix of I(binned code u; factor f).
Eigen::MatrixXd mutual_information_matrix(const Eigen::MatrixXd& codes,
                                          const FactorTable& factors, int bins);

// Majority-vote FactorVAE score. Votes are stratified: each factor gets
// ceil(votes / F) votes, the first 80% of them train the classifier and the
// rest are scored. Each factor's batches come from a stream keyed by its
// code column, and tied majority labels earn fractional credit, so the
// score does not depend on the order of units or factors.
double factorvae_score(const Eigen::MatrixXd& codes, const FactorTable& factors,
                       int votes, int batch, SeededRng& rng);

struct DciResult {
  double disentanglement = 0.0;
  ImportanceMatrix importance;
};

// Importance-weighted mean over units of 1 - H_F(row distribution).
double dci_from_importance(const ImportanceMatrix& importance);

DciResult dci_disentanglement(const Eigen::MatrixXd& codes, const FactorTable& factors,
                              ImportanceEstimator estimator,
                              const GbtParams& gbt = {}, int bins = 20);

double mig(const Eigen::MatrixXd& codes, const FactorTable& factors, int bins = 20);

// Per factor and unit, held-out accuracy of a classifier that predicts the
// majority factor value inside each bin of the unit's code. SAP is the mean
// over factors of the gap between the two best units. Rows with index % 5 == 4
// are held out.
double sap(const Eigen::MatrixXd& codes, const FactorTable& factors, int bins = 20);

double modularity_from_mi(const Eigen::MatrixXd& mi);
double modularity(const Eigen::MatrixXd& codes, const FactorTable& factors, int bins = 20);

struct DownstreamResult {
  double acc = 0.0;       // trained on 10000 samples
  double acc_1000 = 0.0;
  double acc_100 = 0.0;
  double ratio_1000 = 0.0;  // acc_1000 / acc
  double ratio_100 = 0.0;
};

struct DownstreamOptions {
  Eigen::Index test_size = 5000;
  Eigen::Index train_size = 10000;
  GbtParams gbt;
};

// Mean over factors of GBT test accuracy when training on the first 10000,
// 1000 and 100 rows of a shuffled training pool, tested on a disjoint
// 5000-row split.
DownstreamResult downstream_efficiency(const Eigen::MatrixXd& codes,
                                       const FactorTable& factors, SeededRng& rng,
                                       const DownstreamOptions& options = {});

// Mean silhouette coefficient of `points` grouped by `labels` (Euclidean).
double mean_silhouette(const Eigen::MatrixXd& points, std::span<const int> labels);

struct MetricsConfig {
  int votes = 800;
  int batch = 64;
  int bins = 20;
  bool dci_gbt = true;
  bool dci_mi = true;
  bool downstream = true;
  GbtParams gbt;
  DownstreamOptions downstream_options;
};

struct MetricReport {
  double factorvae = 0.0;
  std::optional<double> dci_gbt;
  std::optional<double> dci_mi;
  double mig = 0.0;
  double sap = 0.0;
  double modularity = 0.0;
  std::optional<DownstreamResult> downstream;
  std::uint64_t seed = 0;
  MetricsConfig config;

  // GBT estimate when it was computed, else the MI estimate.
  double dci() const { return dci_gbt ? *dci_gbt : dci_mi.value_or(0.0); }
};

// Runs every metric enabled in `config`. FactorVAE and the downstream split
// draw from separate forks of a generator seeded with `seed`.
MetricReport evaluate(const Representation& rep, const FactorTable& factors,
                      const MetricsConfig& config, std::uint64_t seed);

// Fisher-Yates shuffle driven by SeededRng (platform independent).
std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, SeededRng& rng);

}  // namespace dyga
