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

#include "dyga/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "dyga/error.hpp"
#include "dyga/parallel.hpp"

namespace dyga {

namespace {

// Stream ids inside a run seed. The high bits keep the purposes apart.
enum StreamTag : std::uint64_t {
  kGrid = 1,
  kCenters = 2,
  kLeak = 3,
  kNoise = 4,
  kSelect = 5,
  kAlign = 6,
  kMetrics = 7,
  kSilhouette = 8,
};

std::uint64_t stream_id(StreamTag tag, std::uint64_t a, std::uint64_t b = 0) {
  return (static_cast<std::uint64_t>(tag) << 56) | (a << 24) | b;
}

Eigen::VectorXd random_unit_vector(int dim, SeededRng& rng) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  while (!(norm > 1e-12)) {
    for (int j = 0; j < dim; ++j) v(j) = rng.normal();
    norm = v.norm();
  }
  return v / norm;
}

// Gram-Schmidt on a Gaussian matrix: Haar-distributed up to column signs.
Eigen::MatrixXd random_orthogonal(int dim, SeededRng& rng) {
  Eigen::MatrixXd q(dim, dim);
  for (int c = 0; c < dim; ++c) {
    Eigen::VectorXd v;
    double norm = 0.0;
    while (!(norm > 1e-8)) {
      v.resize(dim);
      for (int j = 0; j < dim; ++j) v(j) = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (int p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
      }
      norm = v.norm();
    }
    q.col(c) = v / norm;
  }
  return q;
}

}  // namespace

int default_workers() {
  if (const char* env = std::getenv("DYGA_WORKERS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<int>(value);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

FactorSpec FactorSpec::from_cardinalities(const std::vector<int>& cards) {
  FactorSpec spec;
  for (std::size_t f = 0; f < cards.size(); ++f) {
    spec.factors.push_back({"f" + std::to_string(f), cards[f]});
  }
  return spec;
}

FactorSpec FactorSpec::benchmark() { return from_cardinalities({5, 5, 4, 3}); }

std::vector<int> FactorSpec::cardinalities() const {
  std::vector<int> out;
  for (const auto& f : factors) out.push_back(f.cardinality);
  return out;
}

long long FactorSpec::combinations() const {
  long long total = 1;
  for (const auto& f : factors) {
    total *= f.cardinality;
    if (total > (1LL << 40)) break;
  }
  return total;
}

void FactorSpec::validate() const {
  if (factors.empty()) fail(ErrorKind::kConfigError, "factor spec is empty");
  for (const auto& f : factors) {
    if (f.cardinality < 2) {
      fail(ErrorKind::kConfigError, "factor '" + f.name + "' has cardinality " +
                                        std::to_string(f.cardinality) + " (need >= 2)");
    }
  }
  if (combinations() < 100) {
    fail(ErrorKind::kConfigError,
         "factor grid has " + std::to_string(combinations()) + " combinations (need >= 100)");
  }
}

FactorTable sample_grid(const FactorSpec& spec, Eigen::Index n, SeededRng& rng) {
  if (n < 1) fail(ErrorKind::kConfigError, "sample_grid needs n >= 1");
  FactorTable table;
  table.cardinalities = spec.cardinalities();
  table.codes.resize(n, static_cast<Eigen::Index>(spec.factors.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < spec.factors.size(); ++f) {
      table.codes(i, static_cast<Eigen::Index>(f)) = static_cast<int>(
          rng.uniform_index(static_cast<std::uint64_t>(table.cardinalities[f])));
    }
  }
  return table;
}

EncoderSim EncoderSim::create(const FactorSpec& spec, int dim, double mixing,
                              double noise_sigma, std::uint64_t seed) {
  spec.validate();
  if (dim < 2) fail(ErrorKind::kConfigError, "feature dimension must be >= 2");
  if (!(mixing >= 0.0 && mixing < 1.0)) fail(ErrorKind::kConfigError, "mixing must lie in [0, 1)");
  if (!(noise_sigma >= 0.0)) fail(ErrorKind::kConfigError, "noise_sigma must be >= 0");

  EncoderSim enc;
  enc.mixing = mixing;
  enc.noise_sigma = noise_sigma;
  enc.seed = seed;
  const int units = static_cast<int>(spec.factors.size());
  const double margin = 4.0 * noise_sigma;
  for (int u = 0; u < units; ++u) {
    enc.assignment.push_back(u);
    const int card = spec.factors[static_cast<std::size_t>(u)].cardinality;
    SeededRng rng(seed, stream_id(kCenters, static_cast<std::uint64_t>(u)));
    Eigen::MatrixXd centers(card, dim);
    for (int a = 0; a < card; ++a) {
      for (int attempt = 0;; ++attempt) {
        if (attempt == 10000) {
          fail(ErrorKind::kConfigError, "cannot place centers 4 noise_sigma apart on the unit sphere");
        }
        const Eigen::VectorXd c = random_unit_vector(dim, rng);
        bool ok = true;
        for (int b = 0; b < a && ok; ++b) ok = (centers.row(b).transpose() - c).norm() >= margin;
        if (ok) {
          centers.row(a) = c.transpose();
          break;
        }
      }
    }
    enc.centers.push_back(std::move(centers));
  }
  for (int u = 0; u < units; ++u) {
    for (int v = 0; v < units; ++v) {
      if (u == v) {
        enc.leak_maps.push_back(Eigen::MatrixXd::Identity(dim, dim));
        continue;
      }
      SeededRng rng(seed, stream_id(kLeak, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v)));
      enc.leak_maps.push_back(random_orthogonal(dim, rng));
    }
  }
  return enc;
}

FeatureTensor encode(const FactorTable& factors, const EncoderSim& enc, SeededRng& rng) {
  const int units = enc.units();
  if (factors.factors() < units) {
    fail(ErrorKind::kShapeError, "factor table has fewer factors than encoder units");
  }
  const Eigen::Index n = factors.samples();
  const int dim = enc.dim();
  const std::uint64_t base = rng.next_u64();

  // Rows of the active centers per unit, then the leak terms.
  std::vector<Eigen::MatrixXd> active(static_cast<std::size_t>(units));
  for (int u = 0; u < units; ++u) {
    const int f = enc.assignment[static_cast<std::size_t>(u)];
    const Eigen::MatrixXd& c = enc.centers[static_cast<std::size_t>(u)];
    Eigen::MatrixXd rows(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) rows.row(i) = c.row(factors.codes(i, f));
    active[static_cast<std::size_t>(u)] = std::move(rows);
  }
  FeatureTensor out(static_cast<std::size_t>(units));
  for (int u = 0; u < units; ++u) {
    Eigen::MatrixXd x = active[static_cast<std::size_t>(u)];
    if (enc.mixing > 0.0) {
      for (int v = 0; v < units; ++v) {
        if (v == u) continue;
        x.noalias() += enc.mixing * active[static_cast<std::size_t>(v)] * enc.leak(u, v).transpose();
      }
    }
    if (enc.noise_sigma > 0.0) {
      SeededRng noise(base, static_cast<std::uint64_t>(u));
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) x(i, j) += enc.noise_sigma * noise.normal();
      }
    }
    out[static_cast<std::size_t>(u)] = std::move(x);
  }
  return out;
}

double nearest_center_accuracy(const FeatureTensor& features, const FactorTable& factors,
                               const EncoderSim& enc) {
  double total = 0.0;
  for (int u = 0; u < enc.units(); ++u) {
    const Eigen::MatrixXd& x = features[static_cast<std::size_t>(u)];
    const Eigen::MatrixXd& c = enc.centers[static_cast<std::size_t>(u)];
    const int f = enc.assignment[static_cast<std::size_t>(u)];
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index best = 0;
      (c.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      hits += best == factors.codes(i, f) ? 1 : 0;
    }
    total += static_cast<double>(hits) / static_cast<double>(x.rows());
  }
  return total / enc.units();
}

Bundle make_bundle(const SynthConfig& config) {
  config.spec.validate();
  if (config.train_size < 1 || config.test_size < 0) {
    fail(ErrorKind::kConfigError, "train_size must be >= 1 and test_size >= 0");
  }
  Bundle bundle;
  bundle.config = config;
  SeededRng grid_rng(config.seed, stream_id(kGrid, 0));
  bundle.factors = sample_grid(config.spec, config.train_size + config.test_size, grid_rng);
  bundle.encoder = EncoderSim::create(config.spec, config.dim, config.mixing,
                                      config.noise_sigma, config.seed);
  SeededRng noise_rng(config.seed, stream_id(kNoise, 0));
  bundle.features = encode(bundle.factors, bundle.encoder, noise_rng);
  return bundle;
}

double attribute_silhouette(const FeatureTensor& features, const FactorTable& factors,
                            const std::vector<int>& assignment,
                            const std::vector<Eigen::Index>& rows) {
  double total = 0.0;
  for (std::size_t u = 0; u < features.size(); ++u) {
    const int f = assignment[u];
    std::vector<int> labels;
    Eigen::MatrixXd points;
    if (rows.empty()) {
      points = features[u];
      labels = factors.column(f);
    } else {
      points = gather_rows(features[u], rows);
      for (Eigen::Index i : rows) labels.push_back(factors.codes(i, f));
    }
    total += mean_silhouette(points, labels);
  }
  return features.empty() ? 0.0 : total / static_cast<double>(features.size());
}

std::vector<AnchorModel> fit_units(const FeatureTensor& features, const DygaConfig& config,
                                   std::uint64_t seed, std::uint64_t stream_base, int workers,
                                   Eigen::Index train_rows, std::vector<double>* seconds) {
  std::vector<AnchorModel> models(features.size());
  std::vector<double> elapsed(features.size(), 0.0);
  parallel_for(features.size(), workers, [&](std::size_t u) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::MatrixXd& x = features[u];
    const Eigen::Index rows = train_rows > 0 ? std::min(train_rows, x.rows()) : x.rows();
    SeededRng rng(seed, stream_base + u);
    models[u] = select_anchors(x.topRows(rows), config, rng);
    models[u].unit_index = static_cast<int>(u);
    elapsed[u] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  if (seconds != nullptr) *seconds = std::move(elapsed);
  return models;
}

AlignedTensor align_units(const FeatureTensor& features, const std::vector<AnchorModel>& models,
                          const AlignmentConfig& config, std::uint64_t seed,
                          std::uint64_t stream_base, int workers) {
  if (features.size() != models.size()) {
    fail(ErrorKind::kShapeError, std::to_string(features.size()) + " feature units vs " +
                                     std::to_string(models.size()) + " models");
  }
  AlignedTensor out;
  out.features.resize(features.size());
  out.mean_delta.assign(features.size(), 0.0);
  out.mean_displacement.assign(features.size(), 0.0);
  out.anchor_distance_before.assign(features.size(), 0.0);
  out.anchor_distance_after.assign(features.size(), 0.0);
  parallel_for(features.size(), workers, [&](std::size_t u) {
    SeededRng rng(seed, stream_base + u);
    AlignedBatch batch = align_batch(features[u], models[u], config, rng);
    out.mean_delta[u] = batch.delta.size() > 0 ? batch.delta.mean() : 0.0;
    if (features[u].rows() > 0) {
      out.mean_displacement[u] = (batch.features - features[u]).rowwise().norm().mean();
      out.anchor_distance_before[u] = (batch.targets - features[u]).rowwise().norm().mean();
      out.anchor_distance_after[u] = (batch.targets - batch.features).rowwise().norm().mean();
    }
    out.features[u] = std::move(batch.features);
  });
  return out;
}

PipelineTrace alternating_pipeline(const Bundle& bundle, const PipelineConfig& pipeline,
                                   const DygaConfig& dyga, const AlignmentConfig& alignment,
                                   const MetricsConfig& metrics, std::uint64_t seed,
                                   const RoundCallback& on_round) {
  if (pipeline.rounds < 1 || pipeline.r < 1) {
    fail(ErrorKind::kConfigError, "pipeline needs rounds >= 1 and r >= 1");
  }
  dyga.validate();
  alignment.validate();

  std::vector<Eigen::Index> silhouette_rows;
  if (pipeline.silhouette_samples > 0) {
    SeededRng rng(seed, stream_id(kSilhouette, 0));
    silhouette_rows = shuffled_indices(bundle.samples(), rng);
    silhouette_rows.resize(std::min<std::size_t>(silhouette_rows.size(),
                                                 static_cast<std::size_t>(pipeline.silhouette_samples)));
  }
  const Eigen::Index train_rows = bundle.config.train_size;
  const int workers = pipeline.workers > 0 ? pipeline.workers : default_workers();

  PipelineTrace trace;
  for (int round = 1; round <= pipeline.rounds; ++round) {
    const auto r64 = static_cast<std::uint64_t>(round);
    RoundRecord rec;
    rec.round = round;
    SeededRng noise_rng(seed, stream_id(kNoise, r64));
    rec.raw = encode(bundle.factors, bundle.encoder, noise_rng);

    if (round % pipeline.r == 0) {
      trace.models = fit_units(rec.raw, dyga, seed, stream_id(kSelect, r64), workers,
                               train_rows);
      for (auto& m : trace.models) m.created_at_round = round;
      rec.selected = true;
    }
    for (const auto& m : trace.models) rec.anchor_counts.push_back(m.size());

    if (!trace.models.empty()) {
      AlignedTensor aligned = align_units(rec.raw, trace.models, alignment, seed,
                                          stream_id(kAlign, r64), workers);
      rec.aligned = true;
      rec.mean_delta = std::move(aligned.mean_delta);
      rec.aligned_features = std::move(aligned.features);
    } else {
      rec.mean_delta.assign(rec.raw.size(), 0.0);
      rec.aligned_features = rec.raw;
    }

    const std::uint64_t metric_seed = mix64(seed ^ stream_id(kMetrics, r64));
    if (pipeline.metrics) {
      rec.raw_metrics = evaluate(Representation::from_units(rec.raw), bundle.factors, metrics,
                                 metric_seed);
      rec.aligned_metrics = rec.aligned
                                ? evaluate(Representation::from_units(rec.aligned_features),
                                           bundle.factors, metrics, metric_seed)
                                : rec.raw_metrics;
    }
    if (pipeline.silhouette_samples > 0) {
      rec.raw_silhouette = attribute_silhouette(rec.raw, bundle.factors,
                                                bundle.encoder.assignment, silhouette_rows);
      rec.aligned_silhouette =
          rec.aligned ? attribute_silhouette(rec.aligned_features, bundle.factors,
                                             bundle.encoder.assignment, silhouette_rows)
                      : rec.raw_silhouette;
    }

    if (on_round) on_round(rec, trace.models);
    if (!pipeline.keep_features) {
      rec.raw.clear();
      rec.aligned_features.clear();
    }
    trace.rounds.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace dyga
