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

#include "dyga/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dyga/error.hpp"
#include "dyga/numerics.hpp"

namespace dyga {

namespace {

void check_aligned(const Eigen::MatrixXd& codes, const FactorTable& factors) {
  if (codes.rows() != factors.samples()) {
    fail(ErrorKind::kShapeError, std::to_string(codes.rows()) + " code rows vs " +
                                     std::to_string(factors.samples()) + " factor rows");
  }
  if (codes.cols() == 0) fail(ErrorKind::kDegenerateRepresentation, "no latent units");
  if (factors.factors() == 0) fail(ErrorKind::kDegenerateFactors, "no factors");
}

std::vector<double> as_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::uint64_t fingerprint(const FactorTable& factors, int f) {
  std::uint64_t h = mix64(0x6a09e667f3bcc909ULL);
  for (Eigen::Index i = 0; i < factors.samples(); ++i) {
    h = mix64(h ^ static_cast<std::uint64_t>(factors.codes(i, f) + 0x9E3779B9));
  }
  return h;
}

}  // namespace

Representation Representation::from_units(const std::vector<Eigen::MatrixXd>& units) {
  Representation rep;
  if (units.empty()) return rep;
  rep.codes.resize(units.front().rows(), static_cast<Eigen::Index>(units.size()));
  for (std::size_t u = 0; u < units.size(); ++u) {
    rep.codes.col(static_cast<Eigen::Index>(u)) = pca_reduce_unit(units[u], 1).col(0);
  }
  return rep;
}

Binning Binning::fit(std::span<const double> values, int bins) {
  if (bins < 2) fail(ErrorKind::kConfigError, "need at least 2 bins");
  Binning out;
  if (values.empty()) return out;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  if (distinct.size() <= static_cast<std::size_t>(bins)) {
    for (std::size_t j = 1; j < distinct.size(); ++j) {
      out.edges_.push_back(std::midpoint(distinct[j - 1], distinct[j]));
    }
    return out;
  }
  const std::size_t n = sorted.size();
  for (int b = 1; b < bins; ++b) {
    const std::size_t pos = static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins);
    if (pos == 0 || pos >= n) continue;
    const double lo = sorted[pos - 1];
    double hi = sorted[pos];
    if (!(lo < hi)) {
      const auto above = std::upper_bound(sorted.begin(), sorted.end(), lo);
      if (above == sorted.end()) continue;
      hi = *above;
    }
    const double edge = std::midpoint(lo, hi);
    if (out.edges_.empty() || edge > out.edges_.back()) out.edges_.push_back(edge);
  }
  return out;
}

int Binning::bin(double x) const {
  return static_cast<int>(std::lower_bound(edges_.begin(), edges_.end(), x) - edges_.begin());
}

std::vector<int> discretize(const Eigen::VectorXd& values, int bins) {
  const std::vector<double> v = as_vector(values);
  const Binning binning = Binning::fit(v, bins);
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = binning.bin(v[i]);
  return out;
}

double entropy(std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  const int top = *std::max_element(labels.begin(), labels.end());
  std::vector<double> counts(static_cast<std::size_t>(top) + 1, 0.0);
  for (int l : labels) counts[static_cast<std::size_t>(l)] += 1.0;
  const auto n = static_cast<double>(labels.size());
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return std::max(h, 0.0);
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) fail(ErrorKind::kShapeError, "label vectors differ in length");
  if (a.empty()) return 0.0;
  const auto na = static_cast<std::size_t>(*std::max_element(a.begin(), a.end())) + 1;
  const auto nb = static_cast<std::size_t>(*std::max_element(b.begin(), b.end())) + 1;
  std::vector<double> joint(na * nb, 0.0);
  std::vector<double> pa(na, 0.0);
  std::vector<double> pb(nb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = static_cast<std::size_t>(a[i]);
    const auto y = static_cast<std::size_t>(b[i]);
    joint[x * nb + y] += 1.0;
    pa[x] += 1.0;
    pb[y] += 1.0;
  }
  const auto n = static_cast<double>(a.size());
  double mi = 0.0;
  for (std::size_t x = 0; x < na; ++x) {
    for (std::size_t y = 0; y < nb; ++y) {
      const double c = joint[x * nb + y];
      if (c > 0.0) mi += (c / n) * std::log(c * n / (pa[x] * pb[y]));
    }
  }
  return std::max(mi, 0.0);
}

Eigen::MatrixXd mutual_information_matrix(const Eigen::MatrixXd& codes,
                                          const FactorTable& factors, int bins) {
  check_aligned(codes, factors);
  Eigen::MatrixXd mi(codes.cols(), factors.factors());
  std::vector<std::vector<int>> columns;
  for (int f = 0; f < factors.factors(); ++f) columns.push_back(factors.column(f));
  for (Eigen::Index u = 0; u < codes.cols(); ++u) {
    const std::vector<int> binned = discretize(codes.col(u), bins);
    for (int f = 0; f < factors.factors(); ++f) {
      mi(u, f) = mutual_information(binned, columns[static_cast<std::size_t>(f)]);
    }
  }
  return mi;
}

double factorvae_score(const Eigen::MatrixXd& codes, const FactorTable& factors,
                       int votes, int batch, SeededRng& rng) {
  check_aligned(codes, factors);
  if (votes < 1 || batch < 2) fail(ErrorKind::kConfigError, "votes >= 1 and batch >= 2 required");
  const Eigen::Index n = codes.rows();
  const int num_factors = factors.factors();

  // Prune units that are constant over the dataset.
  std::vector<Eigen::Index> active;
  std::vector<double> scale;
  for (Eigen::Index u = 0; u < codes.cols(); ++u) {
    const double mean = codes.col(u).mean();
    const double var = (codes.col(u).array() - mean).square().mean();
    if (var >= 1e-10) {
      active.push_back(u);
      scale.push_back(1.0 / std::sqrt(var));
    }
  }
  if (active.empty()) {
    fail(ErrorKind::kDegenerateRepresentation, "every unit has variance below 1e-10");
  }
  const auto units = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd normalized(n, units);
  for (Eigen::Index j = 0; j < units; ++j) {
    normalized.col(j) = codes.col(active[static_cast<std::size_t>(j)]) * scale[static_cast<std::size_t>(j)];
  }

  const int per_factor = (votes + num_factors - 1) / num_factors;
  const int train_votes = static_cast<int>(std::floor(0.8 * per_factor));
  const std::uint64_t base = rng.next_u64();

  Eigen::MatrixXd train_counts = Eigen::MatrixXd::Zero(units, num_factors);
  std::vector<std::pair<Eigen::Index, int>> eval;  // (unit, factor)
  Eigen::MatrixXd sample(batch, units);
  for (int f = 0; f < num_factors; ++f) {
    const int card = factors.cardinalities[static_cast<std::size_t>(f)];
    std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(card));
    for (Eigen::Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(factors.codes(i, f))].push_back(i);

    SeededRng stream(base, fingerprint(factors, f));
    for (int v = 0; v < per_factor; ++v) {
      const auto anchor_row = static_cast<Eigen::Index>(stream.uniform_index(static_cast<std::uint64_t>(n)));
      const auto& group = groups[static_cast<std::size_t>(factors.codes(anchor_row, f))];
      for (int b = 0; b < batch; ++b) {
        sample.row(b) = normalized.row(group[stream.uniform_index(group.size())]);
      }
      const Eigen::RowVectorXd mean = sample.colwise().mean();
      const Eigen::RowVectorXd var = (sample.rowwise() - mean).array().square().colwise().mean();
      Eigen::Index unit = 0;
      for (Eigen::Index j = 1; j < units; ++j) {
        if (var(j) < var(unit)) unit = j;
      }
      if (v < train_votes) train_counts(unit, f) += 1.0;
      else eval.emplace_back(unit, f);
    }
  }
  if (eval.empty()) fail(ErrorKind::kConfigError, "too few votes for a held-out split");

  double credit = 0.0;
  for (const auto& [unit, f] : eval) {
    const double top = train_counts.row(unit).maxCoeff();
    int ties = 0;
    for (int g = 0; g < num_factors; ++g) ties += train_counts(unit, g) == top ? 1 : 0;
    if (train_counts(unit, f) == top) credit += 1.0 / ties;
  }
  return credit / static_cast<double>(eval.size());
}

double dci_from_importance(const ImportanceMatrix& importance) {
  if ((importance.array() < 0.0).any() || !importance.allFinite()) {
    fail(ErrorKind::kInvalidMatrix, "importances must be finite and non-negative");
  }
  const double total = importance.sum();
  if (!(total > 0.0)) fail(ErrorKind::kDegenerateRepresentation, "all-zero importance matrix");
  const auto num_factors = importance.cols();
  double weighted = 0.0;
  double weight_sum = 0.0;
  for (Eigen::Index u = 0; u < importance.rows(); ++u) {
    const double row_sum = importance.row(u).sum();
    if (!(row_sum > 0.0)) continue;
    double score = 1.0;
    if (num_factors > 1) {
      double h = 0.0;
      for (Eigen::Index f = 0; f < num_factors; ++f) {
        const double p = importance(u, f) / row_sum;
        if (p > 0.0) h -= p * std::log(p);
      }
      score = std::clamp(1.0 - h / std::log(static_cast<double>(num_factors)), 0.0, 1.0);
    }
    weighted += row_sum * score;
    weight_sum += row_sum;
  }
  return weighted / weight_sum;
}

DciResult dci_disentanglement(const Eigen::MatrixXd& codes, const FactorTable& factors,
                              ImportanceEstimator estimator, const GbtParams& gbt, int bins) {
  check_aligned(codes, factors);
  DciResult out;
  if (estimator == ImportanceEstimator::kGbt) {
    out.importance = Eigen::MatrixXd::Zero(codes.cols(), factors.factors());
    for (int f = 0; f < factors.factors(); ++f) {
      const std::vector<int> labels = factors.column(f);
      out.importance.col(f) = fit_gbt(codes, labels, gbt).importances;
    }
  } else {
    out.importance = mutual_information_matrix(codes, factors, bins);
  }
  for (Eigen::Index f = 0; f < out.importance.cols(); ++f) {
    const double s = out.importance.col(f).sum();
    if (s > 0.0) out.importance.col(f) /= s;
  }
  out.disentanglement = dci_from_importance(out.importance);
  return out;
}

double mig(const Eigen::MatrixXd& codes, const FactorTable& factors, int bins) {
  const Eigen::MatrixXd mi = mutual_information_matrix(codes, factors, bins);
  double sum = 0.0;
  int scored = 0;
  for (int f = 0; f < factors.factors(); ++f) {
    const double h = entropy(factors.column(f));
    if (!(h > 0.0)) continue;
    std::vector<double> col = as_vector(mi.col(f));
    std::sort(col.begin(), col.end(), std::greater<>());
    const double second = col.size() > 1 ? col[1] : 0.0;
    sum += std::clamp((col[0] - second) / h, 0.0, 1.0);
    ++scored;
  }
  if (scored == 0) fail(ErrorKind::kDegenerateFactors, "every factor has zero entropy");
  return sum / scored;
}

double sap(const Eigen::MatrixXd& codes, const FactorTable& factors, int bins) {
  check_aligned(codes, factors);
  const Eigen::Index n = codes.rows();
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
  for (Eigen::Index i = 0; i < n; ++i) (i % 5 == 4 ? test : train).push_back(i);
  if (train.empty() || test.empty()) {
    fail(ErrorKind::kInsufficientSamples, "SAP needs at least 5 samples");
  }

  const int num_factors = factors.factors();
  Eigen::MatrixXd score = Eigen::MatrixXd::Zero(codes.cols(), num_factors);
  for (Eigen::Index u = 0; u < codes.cols(); ++u) {
    std::vector<double> train_codes;
    for (Eigen::Index i : train) train_codes.push_back(codes(i, u));
    const Binning binning = Binning::fit(train_codes, bins);
    std::vector<int> train_bin;
    for (double c : train_codes) train_bin.push_back(binning.bin(c));

    for (int f = 0; f < num_factors; ++f) {
      const auto card = static_cast<std::size_t>(factors.cardinalities[static_cast<std::size_t>(f)]);
      const auto nbins = static_cast<std::size_t>(binning.count());
      std::vector<int> counts(nbins * card, 0);
      std::vector<int> overall(card, 0);
      for (std::size_t t = 0; t < train.size(); ++t) {
        const auto label = static_cast<std::size_t>(factors.codes(train[t], f));
        ++counts[static_cast<std::size_t>(train_bin[t]) * card + label];
        ++overall[label];
      }
      const int fallback = static_cast<int>(std::max_element(overall.begin(), overall.end()) - overall.begin());
      std::vector<int> predict(nbins, fallback);
      for (std::size_t b = 0; b < nbins; ++b) {
        const auto first = counts.begin() + static_cast<std::ptrdiff_t>(b * card);
        const auto best = std::max_element(first, first + static_cast<std::ptrdiff_t>(card));
        if (*best > 0) predict[b] = static_cast<int>(best - first);
      }
      int hits = 0;
      for (Eigen::Index i : test) {
        hits += predict[static_cast<std::size_t>(binning.bin(codes(i, u)))] == factors.codes(i, f) ? 1 : 0;
      }
      score(u, f) = static_cast<double>(hits) / static_cast<double>(test.size());
    }
  }

  double sum = 0.0;
  int scored = 0;
  for (int f = 0; f < num_factors; ++f) {
    if (!(entropy(factors.column(f)) > 0.0)) continue;
    std::vector<double> col = as_vector(score.col(f));
    std::sort(col.begin(), col.end(), std::greater<>());
    sum += col[0] - (col.size() > 1 ? col[1] : 0.0);
    ++scored;
  }
  if (scored == 0) fail(ErrorKind::kDegenerateFactors, "every factor has zero entropy");
  return sum / scored;
}

double modularity_from_mi(const Eigen::MatrixXd& mi) {
  const auto num_factors = mi.cols();
  double sum = 0.0;
  int scored = 0;
  for (Eigen::Index u = 0; u < mi.rows(); ++u) {
    Eigen::Index best = 0;
    for (Eigen::Index f = 1; f < num_factors; ++f) {
      if (mi(u, f) > mi(u, best)) best = f;
    }
    const double top = mi(u, best);
    if (!(top > 0.0)) continue;
    double value = 1.0;
    if (num_factors > 1) {
      double deviation = 0.0;
      for (Eigen::Index f = 0; f < num_factors; ++f) {
        if (f != best) deviation += mi(u, f) * mi(u, f);
      }
      deviation /= top * top * static_cast<double>(num_factors - 1);
      value = std::clamp(1.0 - deviation, 0.0, 1.0);
    }
    sum += value;
    ++scored;
  }
  if (scored == 0) fail(ErrorKind::kDegenerateRepresentation, "every unit has zero mutual information");
  return sum / scored;
}

double modularity(const Eigen::MatrixXd& codes, const FactorTable& factors, int bins) {
  return modularity_from_mi(mutual_information_matrix(codes, factors, bins));
}

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, SeededRng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

DownstreamResult downstream_efficiency(const Eigen::MatrixXd& codes, const FactorTable& factors,
                                       SeededRng& rng, const DownstreamOptions& options) {
  check_aligned(codes, factors);
  const Eigen::Index needed = options.test_size + options.train_size;
  if (codes.rows() < needed) {
    fail(ErrorKind::kInsufficientSamples, "downstream efficiency needs " +
                                              std::to_string(needed) + " samples, got " +
                                              std::to_string(codes.rows()));
  }
  const std::vector<Eigen::Index> perm = shuffled_indices(codes.rows(), rng);
  const std::vector<Eigen::Index> test(perm.begin(), perm.begin() + options.test_size);
  Eigen::MatrixXd test_codes(options.test_size, codes.cols());
  for (std::size_t i = 0; i < test.size(); ++i) test_codes.row(static_cast<Eigen::Index>(i)) = codes.row(test[i]);

  auto mean_accuracy = [&](Eigen::Index size) {
    const auto start = perm.begin() + options.test_size;
    Eigen::MatrixXd train_codes(size, codes.cols());
    for (Eigen::Index i = 0; i < size; ++i) train_codes.row(i) = codes.row(start[i]);
    double total = 0.0;
    for (int f = 0; f < factors.factors(); ++f) {
      std::vector<int> train_labels(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) train_labels[static_cast<std::size_t>(i)] = factors.codes(start[i], f);
      std::vector<int> test_labels;
      for (Eigen::Index i : test) test_labels.push_back(factors.codes(i, f));
      const GbtModel model = fit_gbt(train_codes, train_labels, options.gbt);
      total += accuracy(model.predict(test_codes), test_labels);
    }
    return total / factors.factors();
  };

  DownstreamResult out;
  out.acc = mean_accuracy(options.train_size);
  out.acc_1000 = mean_accuracy(std::min<Eigen::Index>(1000, options.train_size));
  out.acc_100 = mean_accuracy(std::min<Eigen::Index>(100, options.train_size));
  out.ratio_1000 = out.acc > 0.0 ? out.acc_1000 / out.acc : 0.0;
  out.ratio_100 = out.acc > 0.0 ? out.acc_100 / out.acc : 0.0;
  return out;
}

double mean_silhouette(const Eigen::MatrixXd& points, std::span<const int> labels) {
  const Eigen::Index n = points.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) fail(ErrorKind::kShapeError, "one label per point");
  if (n == 0) return 0.0;
  const int top = *std::max_element(labels.begin(), labels.end());
  std::vector<int> sizes(static_cast<std::size_t>(top) + 1, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  const auto populated = std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
  if (populated < 2) return 0.0;

  double total = 0.0;
  std::vector<double> dist_sum(sizes.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd d = (points.rowwise() - points.row(i)).rowwise().norm();
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) dist_sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += d(j);
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (sizes[own] < 2) continue;  // singleton clusters score 0
    const double a = dist_sum[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      if (l != own && sizes[l] > 0) b = std::min(b, dist_sum[l] / sizes[l]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

MetricReport evaluate(const Representation& rep, const FactorTable& factors,
                      const MetricsConfig& config, std::uint64_t seed) {
  const SeededRng root(seed);
  MetricReport report;
  report.seed = seed;
  report.config = config;
  SeededRng vote_rng = root.fork(1);
  report.factorvae = factorvae_score(rep.codes, factors, config.votes, config.batch, vote_rng);
  if (config.dci_gbt) {
    report.dci_gbt = dci_disentanglement(rep.codes, factors, ImportanceEstimator::kGbt,
                                         config.gbt, config.bins).disentanglement;
  }
  if (config.dci_mi) {
    report.dci_mi = dci_disentanglement(rep.codes, factors, ImportanceEstimator::kMutualInformation,
                                        config.gbt, config.bins).disentanglement;
  }
  report.mig = mig(rep.codes, factors, config.bins);
  report.sap = sap(rep.codes, factors, config.bins);
  report.modularity = modularity(rep.codes, factors, config.bins);
  if (config.downstream) {
    SeededRng split_rng = root.fork(2);
    report.downstream = downstream_efficiency(rep.codes, factors, split_rng,
                                              config.downstream_options);
  }
  return report;
}

}  // namespace dyga
