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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dyga/anchoring.hpp"
#include "dyga/factors.hpp"
#include "dyga/metrics.hpp"
#include "dyga/rng.hpp"

namespace dyga {

// One N x D matrix per latent unit.
using FeatureTensor = std::vector<Eigen::MatrixXd>;

struct FactorDef {
  std::string name;
  int cardinality = 2;
};

struct FactorSpec {
  std::vector<FactorDef> factors;

  // Factors named f0, f1, ...
  static FactorSpec from_cardinalities(const std::vector<int>& cards);
  // (5, 5, 4, 3)
  static FactorSpec benchmark();

  std::vector<int> cardinalities() const;
  long long combinations() const;
  // Every cardinality >= 2 and at least 100 combinations; else ConfigError.
  void validate() const;
};

// n tuples drawn uniformly from the factor grid, with replacement.
FactorTable sample_grid(const FactorSpec& spec, Eigen::Index n, SeededRng& rng);

struct EncoderSim {
  std::vector<int> assignment;           // unit u encodes factor assignment[u]
  std::vector<Eigen::MatrixXd> centers;  // per unit: cardinality x D, unit norm rows
  std::vector<Eigen::MatrixXd> leak_maps;  // U x U orthogonal D x D maps, row-major by (u, v)
  double mixing = 0.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  // Centers uniform on the unit sphere, redrawn until every pair within a
  // unit is at least 4 * noise_sigma apart. Identity assignment.
  static EncoderSim create(const FactorSpec& spec, int dim, double mixing,
                           double noise_sigma, std::uint64_t seed);

  int units() const { return static_cast<int>(centers.size()); }
  int dim() const { return centers.empty() ? 0 : static_cast<int>(centers.front().cols()); }
  const Eigen::MatrixXd& leak(int u, int v) const {
    return leak_maps[static_cast<std::size_t>(u * units() + v)];
  }
};

// Unit u of sample i: center(u, attribute) + mixing * sum_{v != u}
// leak(u, v) * center(v, attribute of v) + N(0, noise_sigma^2 I).
FeatureTensor encode(const FactorTable& factors, const EncoderSim& enc, SeededRng& rng);

// Fraction of samples whose unit-u feature is nearest to its own attribute
// center, averaged over units.
double nearest_center_accuracy(const FeatureTensor& features, const FactorTable& factors,
                               const EncoderSim& enc);

struct SynthConfig {
  FactorSpec spec = FactorSpec::benchmark();
  Eigen::Index train_size = 12000;
  Eigen::Index test_size = 5000;
  int dim = 32;
  double mixing = 0.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

struct Bundle {
  FeatureTensor features;
  FactorTable factors;
  EncoderSim encoder;
  SynthConfig config;

  Eigen::Index samples() const { return factors.samples(); }
};

// Pure function of the config (including its seed).
Bundle make_bundle(const SynthConfig& config);

// Mean over units of the silhouette of the unit's features grouped by the
// attribute of its assigned factor. Uses the rows listed in `rows`, or every
// row when empty.
double attribute_silhouette(const FeatureTensor& features, const FactorTable& factors,
                            const std::vector<int>& assignment,
                            const std::vector<Eigen::Index>& rows = {});

struct PipelineConfig {
  int rounds = 3;
  int r = 1;
  int workers = 0;  // 0: default_workers()
  bool metrics = true;            // run `evaluate` on raw and aligned codes
  int silhouette_samples = 1500;  // 0 disables the silhouette
  bool keep_features = false;     // retain per-round tensors in the trace
};

struct RoundRecord {
  int round = 0;
  bool selected = false;  // anchors were (re)selected this round
  bool aligned = false;   // an anchor model was applied
  std::vector<int> anchor_counts;
  std::vector<double> mean_delta;  // per unit, 0 when not aligned
  std::optional<MetricReport> raw_metrics;
  std::optional<MetricReport> aligned_metrics;
  double raw_silhouette = 0.0;
  double aligned_silhouette = 0.0;
  FeatureTensor raw;
  FeatureTensor aligned_features;
};

struct PipelineTrace {
  std::vector<RoundRecord> rounds;
  std::vector<AnchorModel> models;  // latest model per unit
};

using RoundCallback = std::function<void(const RoundRecord&, const std::vector<AnchorModel>&)>;

// Each round re-encodes the bundle's factors with fresh noise. On rounds that
// are multiples of r, anchors are selected per unit on the training rows.
// Once a model exists every round is aligned against the latest one. The
// callback sees every record with its features before they are dropped.
PipelineTrace alternating_pipeline(const Bundle& bundle, const PipelineConfig& pipeline,
                                   const DygaConfig& dyga, const AlignmentConfig& alignment,
                                   const MetricsConfig& metrics, std::uint64_t seed,
                                   const RoundCallback& on_round = {});

// Per-unit anchor selection on the first `train_rows` rows (all rows when
// train_rows <= 0). Unit u uses stream `stream_base + u` of `seed`.
std::vector<AnchorModel> fit_units(const FeatureTensor& features, const DygaConfig& config,
                                   std::uint64_t seed, std::uint64_t stream_base,
                                   int workers, Eigen::Index train_rows = 0,
                                   std::vector<double>* seconds = nullptr);

struct AlignedTensor {
  FeatureTensor features;
  std::vector<double> mean_delta;
  std::vector<double> mean_displacement;
  // Mean distance to the blended anchor each row moved toward.
  std::vector<double> anchor_distance_before;
  std::vector<double> anchor_distance_after;
};

AlignedTensor align_units(const FeatureTensor& features, const std::vector<AnchorModel>& models,
                          const AlignmentConfig& config, std::uint64_t seed,
                          std::uint64_t stream_base, int workers);

}  // namespace dyga
