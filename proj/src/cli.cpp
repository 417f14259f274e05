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

#include "dyga/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "dyga/config.hpp"
#include "dyga/error.hpp"
#include "dyga/io.hpp"
#include "dyga/parallel.hpp"
#include "dyga/skip_mask.hpp"

namespace dyga {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kFitStreams = 0x100;
constexpr std::uint64_t kAlignStreams = 0x200;
constexpr std::uint64_t kMaskStream = 0x300;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigError:
    case ErrorKind::kInvalidSpec:
      return kExitConfig;
    case ErrorKind::kIoError:
    case ErrorKind::kFormatError:
    case ErrorKind::kShapeError:
    case ErrorKind::kInsufficientSamples:
    case ErrorKind::kDimensionError:
      return kExitData;
    case ErrorKind::kInvalidMatrix:
    case ErrorKind::kRegularizationRequired:
    case ErrorKind::kComponentStarved:
    case ErrorKind::kSplitRefused:
    case ErrorKind::kDegenerateRepresentation:
    case ErrorKind::kDegenerateFactors:
      return kExitNumeric;
  }
  return kExitNumeric;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string require(const std::string& value, const std::string& what) {
  if (value.empty()) fail(ErrorKind::kConfigError, what + " is required");
  return value;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

json envelope(const RunConfig& config) {
  return {{"library_version", kLibraryVersion}, {"seed", config.seed}, {"config", to_json(config)}};
}

int workers_of(const RunConfig& config) {
  return config.pipeline.workers > 0 ? config.pipeline.workers : default_workers();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json model_file(const std::vector<AnchorModel>& models, const RunConfig& config) {
  json j = envelope(config);
  j["format"] = "dyga-anchor-model";
  j["units"] = json::array();
  for (const auto& m : models) j["units"].push_back(to_json(m));
  return j;
}

std::vector<AnchorModel> read_model_file(const fs::path& path) {
  const json j = read_json(path);
  if (!j.contains("units") || !j["units"].is_array()) {
    fail(ErrorKind::kFormatError, path.string() + ": not an anchor model file");
  }
  std::vector<AnchorModel> models;
  for (const auto& u : j["units"]) models.push_back(anchor_model_from_json(u));
  return models;
}

// --- commands -------------------------------------------------------------

void cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const fs::path dir = require(config.data.out, "data.out (--out)");
  Stopwatch clock;
  const Bundle bundle = make_bundle(config.synth);
  make_dir(dir);
  write_tensor(dir / "features.dyga", to_tensor(bundle.features));
  write_factors_csv(dir / "factors.csv", bundle.factors);
  json meta = envelope(config);
  meta["samples"] = bundle.samples();
  meta["units"] = bundle.encoder.units();
  meta["dim"] = bundle.encoder.dim();
  meta["cardinalities"] = bundle.factors.cardinalities;
  meta["assignment"] = bundle.encoder.assignment;
  meta["mixing"] = bundle.encoder.mixing;
  meta["noise_sigma"] = bundle.encoder.noise_sigma;
  meta["nearest_center_accuracy"] = nearest_center_accuracy(bundle.features, bundle.factors, bundle.encoder);
  write_json(dir / "metadata.json", meta);
  out << "wrote " << bundle.samples() << " samples to " << dir.string() << "\n";
  log << "synth: " << clock.seconds() << " s\n";
}

void cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const FeatureTensor features = from_tensor(read_tensor(require(config.data.features, "data.features (--features)")));
  const fs::path model_path = require(config.data.model, "data.model (--model)");
  std::vector<double> seconds;
  const auto models = fit_units(features, config.dyga, config.seed, kFitStreams,
                                workers_of(config), 0, &seconds);
  for (std::size_t u = 0; u < models.size(); ++u) {
    log << "fit: unit " << u << " K=" << models[u].size() << " in " << seconds[u] << " s\n";
  }
  write_json(model_path, model_file(models, config));
  out << "fitted " << models.size() << " units:";
  for (const auto& m : models) out << ' ' << m.size();
  out << "\n";
}

void cmd_align(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const FeatureTensor features = from_tensor(read_tensor(require(config.data.features, "data.features (--features)")));
  const auto models = read_model_file(require(config.data.model, "data.model (--model)"));
  const fs::path out_path = require(config.data.out, "data.out (--out)");
  for (std::size_t u = 0; u < std::min(models.size(), features.size()); ++u) {
    if (models[u].mixture.dim() != features[u].cols()) {
      fail(ErrorKind::kShapeError, "unit " + std::to_string(u) + ": model dimension " +
                                       std::to_string(models[u].mixture.dim()) + " vs features " +
                                       std::to_string(features[u].cols()));
    }
  }
  Stopwatch clock;
  const AlignedTensor aligned = align_units(features, models, config.alignment, config.seed,
                                            kAlignStreams, workers_of(config));
  write_tensor(out_path, to_tensor(aligned.features));

  json stats = envelope(config);
  stats["units"] = json::array();
  double delta_sum = 0.0;
  for (std::size_t u = 0; u < aligned.features.size(); ++u) {
    stats["units"].push_back({{"unit", u},
                              {"anchors", models[u].size()},
                              {"mean_delta", aligned.mean_delta[u]},
                              {"mean_displacement", aligned.mean_displacement[u]},
                              {"anchor_distance_before", aligned.anchor_distance_before[u]},
                              {"anchor_distance_after", aligned.anchor_distance_after[u]}});
    delta_sum += aligned.mean_delta[u];
  }
  stats["mean_delta"] = aligned.features.empty() ? 0.0 : delta_sum / aligned.features.size();
  write_json(out_path.string() + ".stats.json", stats);
  out << "aligned " << aligned.features.size() << " units, mean delta "
      << fmt(stats["mean_delta"].get<double>()) << "\n";
  log << "align: " << clock.seconds() << " s\n";
}

void cmd_metrics(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const FeatureTensor features = from_tensor(read_tensor(require(config.data.features, "data.features (--features)")));
  const FactorTable factors = read_factors_csv(require(config.data.factors, "data.factors (--factors)"));
  const fs::path out_path = require(config.data.out, "data.out (--out)");
  if (!features.empty() && features.front().rows() != factors.samples()) {
    fail(ErrorKind::kShapeError, std::to_string(features.front().rows()) + " feature rows vs " +
                                     std::to_string(factors.samples()) + " factor rows");
  }
  Stopwatch clock;
  MetricsConfig metrics = config.metrics;
  if (metrics.downstream &&
      factors.samples() < metrics.downstream_options.test_size + metrics.downstream_options.train_size) {
    log << "metrics: fewer than " << metrics.downstream_options.test_size + metrics.downstream_options.train_size
        << " samples, skipping downstream efficiency\n";
    metrics.downstream = false;
  }
  const MetricReport report = evaluate(Representation::from_units(features), factors, metrics, config.seed);
  json j = envelope(config);
  j["samples"] = factors.samples();
  j["units"] = features.size();
  j["metrics"] = to_json(report);
  write_json(out_path, j);
  out << "factorvae " << fmt(report.factorvae) << " dci " << fmt(report.dci()) << " mig "
      << fmt(report.mig) << " sap " << fmt(report.sap) << " modularity " << fmt(report.modularity)
      << "\n";
  log << "metrics: " << clock.seconds() << " s\n";
}

void cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const fs::path dir = require(config.data.out, "data.out (--out)");
  make_dir(dir);
  Stopwatch clock;
  const Bundle bundle = make_bundle(config.synth);
  write_json(dir / "config.json", envelope(config));

  std::ostringstream summary;
  summary << "round,selected,aligned,anchors,mean_delta";
  for (const char* side : {"raw", "aligned"}) {
    for (const char* name : {"factorvae", "dci", "mig", "sap", "modularity", "silhouette"}) {
      summary << ',' << side << '_' << name;
    }
  }
  summary << "\n";

  PipelineConfig pipeline = config.pipeline;
  pipeline.workers = workers_of(config);
  auto on_round = [&](const RoundRecord& rec, const std::vector<AnchorModel>& models) {
    char name[32];
    std::snprintf(name, sizeof name, "round_%03d", rec.round);
    const fs::path round_dir = dir / name;
    make_dir(round_dir);
    if (rec.selected) write_json(round_dir / "model.json", model_file(models, config));
    json metrics = envelope(config);
    metrics["round"] = rec.round;
    metrics["selected"] = rec.selected;
    metrics["aligned"] = rec.aligned;
    metrics["anchor_counts"] = rec.anchor_counts;
    metrics["mean_delta"] = rec.mean_delta;
    metrics["raw"] = rec.raw_metrics ? to_json(*rec.raw_metrics) : json(nullptr);
    metrics["aligned_metrics"] = rec.aligned_metrics ? to_json(*rec.aligned_metrics) : json(nullptr);
    metrics["raw_silhouette"] = rec.raw_silhouette;
    metrics["aligned_silhouette"] = rec.aligned_silhouette;
    write_json(round_dir / "metrics.json", metrics);

    int anchors = 0;
    for (int k : rec.anchor_counts) anchors += k;
    double delta = 0.0;
    for (double d : rec.mean_delta) delta += d;
    if (!rec.mean_delta.empty()) delta /= static_cast<double>(rec.mean_delta.size());
    summary << rec.round << ',' << rec.selected << ',' << rec.aligned << ',' << anchors << ','
            << fmt(delta);
    for (const auto* report : {&rec.raw_metrics, &rec.aligned_metrics}) {
      const double silhouette = report == &rec.raw_metrics ? rec.raw_silhouette : rec.aligned_silhouette;
      if (*report) {
        const MetricReport& m = **report;
        summary << ',' << fmt(m.factorvae) << ',' << fmt(m.dci()) << ',' << fmt(m.mig) << ','
                << fmt(m.sap) << ',' << fmt(m.modularity);
      } else {
        summary << ",,,,,";
      }
      summary << ',' << fmt(silhouette);
    }
    summary << "\n";
    log << "pipeline: round " << rec.round << " done at " << clock.seconds() << " s\n";
  };
  const PipelineTrace trace = alternating_pipeline(bundle, pipeline, config.dyga, config.alignment,
                                                   config.metrics, config.seed, on_round);
  write_text(dir / "summary.csv", summary.str());
  out << "pipeline: " << trace.rounds.size() << " rounds written to " << dir.string() << "\n";
}

void cmd_maskdemo(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const fs::path out_path = require(config.data.out, "data.out (--out)");
  ChannelTensor input;
  if (!config.data.features.empty()) {
    const Tensor t = read_tensor(config.data.features);
    if (t.dims.size() != 3) fail(ErrorKind::kFormatError, "maskdemo input must be a C x H x W tensor");
    input = ChannelTensor(t.dims[0], t.dims[1], t.dims[2]);
    std::copy(t.values.begin(), t.values.end(), input.values.begin());
  } else {
    input = ChannelTensor(config.mask_shape[0], config.mask_shape[1], config.mask_shape[2]);
    SeededRng rng(config.seed, kMaskStream);
    for (double& v : input.values) v = rng.normal();
  }
  SeededRng rng(config.seed, kMaskStream + 1);
  const SkipMaskResult result = skip_dropout(input, config.mask, rng);

  Tensor t;
  t.dims = {result.tensor.channels, result.tensor.height, result.tensor.width};
  t.values.assign(result.tensor.values.begin(), result.tensor.values.end());
  write_tensor(out_path, t);

  const auto trials = static_cast<double>(result.keep.size());
  const double p = config.mask.keep_prob;
  json stats = envelope(config);
  stats["trials"] = result.keep.size();
  stats["keep_fraction"] = result.keep_fraction();
  stats["expected_keep_fraction"] = p;
  stats["binomial_std"] = std::sqrt(p * (1.0 - p) / trials);
  write_json(out_path.string() + ".stats.json", stats);
  out << "keep fraction " << fmt(result.keep_fraction()) << " over " << result.keep.size()
      << (config.mask.granularity == MaskGranularity::kPerChannel ? " channels\n" : " elements\n");
  log << "maskdemo: done\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"Dynamic Gaussian anchoring toolkit", "dyga"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kLibraryVersion);

  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int workers = 0;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "Override a config value, e.g. dyga.phi=0.4");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* workers_opt = app.add_option("--workers", workers, "Worker threads (default: DYGA_WORKERS or cores)");

  // Flags shared by several subcommands; each overrides the config file.
  std::string features, factors, model, out_path;
  double mixing = 0.0, noise = 0.0, lambda = 0.0, keep_prob = 0.0;
  long long train = 0, test = 0;
  std::vector<int> cards;
  int rounds = 0, r = 0;
  std::string granularity;
  std::vector<std::size_t> shape;
  std::vector<CLI::Option*> opts;

  auto add = [&](CLI::App* sub, const std::string& name, auto& target, const std::string& help) {
    opts.push_back(sub->add_option(name, target, help));
    return opts.back();
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature/factor bundle");
  add(synth, "--out", out_path, "Output directory");
  add(synth, "--mixing", mixing, "Cross-unit leakage in [0, 1)");
  add(synth, "--noise", noise, "Per-dimension noise sigma");
  add(synth, "--train", train, "Training samples");
  add(synth, "--test", test, "Test samples");
  add(synth, "--cards", cards, "Factor cardinalities")->delimiter(',');

  auto* fit = app.add_subcommand("fit", "Select anchors for every unit of a feature tensor");
  add(fit, "--features", features, "N x U x D tensor")->required();
  add(fit, "--model", model, "Output model JSON")->required();

  auto* align = app.add_subcommand("align", "Align features toward their anchors");
  add(align, "--features", features, "N x U x D tensor")->required();
  add(align, "--model", model, "Model JSON from `fit`")->required();
  add(align, "--out", out_path, "Output tensor")->required();
  add(align, "--lambda", lambda, "Maximum alignment step");

  auto* metrics = app.add_subcommand("metrics", "Score a representation against its factors");
  add(metrics, "--features", features, "N x U x D tensor")->required();
  add(metrics, "--factors", factors, "Factor CSV")->required();
  add(metrics, "--out", out_path, "Output report JSON")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Run synth, anchor selection and alignment rounds");
  add(pipeline, "--out", out_path, "Output directory");
  add(pipeline, "--rounds", rounds, "Number of rounds");
  add(pipeline, "-r,--every", r, "Select anchors every r rounds");
  add(pipeline, "--mixing", mixing, "Cross-unit leakage in [0, 1)");
  add(pipeline, "--lambda", lambda, "Maximum alignment step");

  auto* mask = app.add_subcommand("maskdemo", "Apply skip dropout to a tensor");
  add(mask, "--input", features, "C x H x W tensor (random when omitted)");
  add(mask, "--out", out_path, "Output tensor")->required();
  add(mask, "--keep-prob", keep_prob, "Keep probability in (0, 1]");
  add(mask, "--granularity", granularity, "channel or element")->check(CLI::IsMember({"channel", "element"}));
  add(mask, "--shape", shape, "C,H,W of the generated tensor")->delimiter(',')->expected(3);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kLibraryVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    if (seed_opt->count() > 0) apply_json(config, {{"seed", seed}});
    if (workers_opt->count() > 0) apply_json(config, {{"pipeline", {{"workers", workers}}}});

    auto given = [&](const std::string& name) {
      for (auto* o : opts) {
        if (o->count() > 0 && o->check_lname(name)) return true;
      }
      return false;
    };
    json patch = json::object();
    if (given("out")) patch["data"]["out"] = out_path;
    if (given("features") || given("input")) patch["data"]["features"] = features;
    if (given("factors")) patch["data"]["factors"] = factors;
    if (given("model")) patch["data"]["model"] = model;
    if (given("mixing")) patch["data"]["mixing"] = mixing;
    if (given("noise")) patch["data"]["noise_sigma"] = noise;
    if (given("train")) patch["data"]["train_size"] = train;
    if (given("test")) patch["data"]["test_size"] = test;
    if (given("cards")) patch["data"]["cardinalities"] = cards;
    if (given("lambda")) patch["dyga"]["lambda"] = lambda;
    if (given("rounds")) patch["pipeline"]["rounds"] = rounds;
    if (given("every")) patch["pipeline"]["r"] = r;
    if (given("keep-prob")) patch["mask"]["keep_prob"] = keep_prob;
    if (given("granularity")) patch["mask"]["granularity"] = granularity;
    if (given("shape")) patch["mask"]["shape"] = shape;
    apply_json(config, patch);
    config.validate();

    if (synth->parsed()) cmd_synth(config, out, log);
    else if (fit->parsed()) cmd_fit(config, out, log);
    else if (align->parsed()) cmd_align(config, out, log);
    else if (metrics->parsed()) cmd_metrics(config, out, log);
    else if (pipeline->parsed()) cmd_pipeline(config, out, log);
    else if (mask->parsed()) cmd_maskdemo(config, out, log);
    return kExitOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace dyga
