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

#include "dyga/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "dyga/error.hpp"

namespace dyga {

using nlohmann::json;

namespace {

const std::map<GumbelMode, std::string> kGumbelNames = {
    {GumbelMode::kTemperedLogits, "tempered_logits"},
    {GumbelMode::kLiteral, "literal"},
    {GumbelMode::kLogResponsibility, "log_responsibility"},
};

const std::map<IntrinsicDimRule::Kind, std::string> kRuleNames = {
    {IntrinsicDimRule::Kind::kScree, "scree"},
    {IntrinsicDimRule::Kind::kVariance, "variance"},
    {IntrinsicDimRule::Kind::kFull, "full"},
    {IntrinsicDimRule::Kind::kFixed, "fixed"},
};

template <typename Enum>
Enum enum_from(const std::map<Enum, std::string>& names, const std::string& key,
               const std::string& value) {
  for (const auto& [e, name] : names) {
    if (name == value) return e;
  }
  std::string allowed;
  for (const auto& [e, name] : names) allowed += (allowed.empty() ? "" : ", ") + name;
  fail(ErrorKind::kConfigError, key + ": '" + value + "' is not one of " + allowed);
}

std::string estimator_name(const MetricsConfig& m) {
  if (m.dci_gbt && m.dci_mi) return "both";
  if (m.dci_gbt) return "gbt";
  if (m.dci_mi) return "mi";
  return "none";
}

using Setter = std::function<void(const json&)>;

template <typename T>
Setter bind(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

void apply_section(const std::string& section, const json& values,
                   const std::map<std::string, Setter>& setters) {
  if (!values.is_object()) fail(ErrorKind::kConfigError, "section '" + section + "' must be an object");
  for (const auto& [key, value] : values.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorKind::kConfigError, "unknown key '" + section + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      fail(ErrorKind::kConfigError, section + "." + key + ": " + e.what());
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  dyga.validate();
  alignment.validate();
  if (metrics.votes < 1) fail(ErrorKind::kConfigError, "metrics.votes must be >= 1");
  if (metrics.batch < 2) fail(ErrorKind::kConfigError, "metrics.batch must be >= 2");
  if (metrics.bins < 2) fail(ErrorKind::kConfigError, "metrics.bins must be >= 2");
  if (metrics.gbt.max_depth < 1 || metrics.gbt.n_rounds < 1 || !(metrics.gbt.learning_rate > 0.0)) {
    fail(ErrorKind::kConfigError, "metrics.gbt_* must be positive");
  }
  if (pipeline.rounds < 1) fail(ErrorKind::kConfigError, "pipeline.rounds must be >= 1");
  if (pipeline.r < 1) fail(ErrorKind::kConfigError, "pipeline.r must be >= 1");
  if (pipeline.workers < 0) fail(ErrorKind::kConfigError, "pipeline.workers must be >= 0");
  if (pipeline.silhouette_samples < 0) {
    fail(ErrorKind::kConfigError, "pipeline.silhouette_samples must be >= 0");
  }
  synth.spec.validate();
  if (synth.train_size < 1 || synth.test_size < 0) {
    fail(ErrorKind::kConfigError, "data.train_size must be >= 1 and data.test_size >= 0");
  }
  if (synth.dim < 2) fail(ErrorKind::kConfigError, "data.dim must be >= 2");
  if (!(synth.mixing >= 0.0 && synth.mixing < 1.0)) {
    fail(ErrorKind::kConfigError, "data.mixing must lie in [0, 1)");
  }
  if (!(synth.noise_sigma >= 0.0)) fail(ErrorKind::kConfigError, "data.noise_sigma must be >= 0");
  if (mask_shape.size() != 3) fail(ErrorKind::kConfigError, "mask.shape must have 3 entries");
  for (auto d : mask_shape) {
    if (d == 0) fail(ErrorKind::kConfigError, "mask.shape entries must be positive");
  }
}

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) fail(ErrorKind::kConfigError, "config must be a JSON object");
  for (const auto& [section, values] : j.items()) {
    if (section == "seed") {
      try {
        c.seed = values.get<std::uint64_t>();
      } catch (const json::exception& e) {
        fail(ErrorKind::kConfigError, std::string("seed: ") + e.what());
      }
    } else if (section == "dyga") {
      apply_section(section, values,
                    {{"phi", bind(c.dyga.phi)},
                     {"psi", bind(c.dyga.psi)},
                     {"k0", bind(c.dyga.k0)},
                     {"random_split_prob", bind(c.dyga.random_split_prob)},
                     {"min_cluster_fraction", bind(c.dyga.min_cluster_fraction)},
                     {"max_split_rounds", bind(c.dyga.max_split_rounds)},
                     {"lambda", bind(c.alignment.lambda)},
                     {"tau", bind(c.alignment.tau)},
                     {"ratio_epsilon", bind(c.alignment.ratio_epsilon)},
                     {"hard_select", bind(c.alignment.hard_select)},
                     {"gumbel_mode", [&](const json& v) {
                        c.alignment.mode = enum_from(kGumbelNames, "dyga.gumbel_mode", v.get<std::string>());
                      }}});
    } else if (section == "em") {
      auto& rule = c.dyga.em.rule;
      apply_section(section, values,
                    {{"max_iter", bind(c.dyga.em.max_iter)},
                     {"tol", bind(c.dyga.em.tol)},
                     {"floor", bind(c.dyga.em.floor)},
                     {"intrinsic_dim", [&](const json& v) {
                        rule.kind = enum_from(kRuleNames, "em.intrinsic_dim", v.get<std::string>());
                      }},
                     {"intrinsic_threshold", bind(rule.threshold)},
                     {"intrinsic_fixed", bind(rule.fixed_dim)}});
    } else if (section == "metrics") {
      auto& m = c.metrics;
      apply_section(section, values,
                    {{"votes", bind(m.votes)},
                     {"batch", bind(m.batch)},
                     {"bins", bind(m.bins)},
                     {"estimator", [&](const json& v) {
                        const auto name = v.get<std::string>();
                        if (name != "both" && name != "gbt" && name != "mi" && name != "none") {
                          fail(ErrorKind::kConfigError, "metrics.estimator: '" + name +
                                                            "' is not one of both, gbt, mi, none");
                        }
                        m.dci_gbt = name == "both" || name == "gbt";
                        m.dci_mi = name == "both" || name == "mi";
                      }},
                     {"downstream", bind(m.downstream)},
                     {"gbt_depth", bind(m.gbt.max_depth)},
                     {"gbt_rounds", bind(m.gbt.n_rounds)},
                     {"gbt_learning_rate", bind(m.gbt.learning_rate)}});
      m.downstream_options.gbt = m.gbt;
    } else if (section == "pipeline") {
      apply_section(section, values,
                    {{"rounds", bind(c.pipeline.rounds)},
                     {"r", bind(c.pipeline.r)},
                     {"workers", bind(c.pipeline.workers)},
                     {"metrics", bind(c.pipeline.metrics)},
                     {"silhouette_samples", bind(c.pipeline.silhouette_samples)}});
    } else if (section == "data") {
      apply_section(section, values,
                    {{"features", bind(c.data.features)},
                     {"factors", bind(c.data.factors)},
                     {"model", bind(c.data.model)},
                     {"out", bind(c.data.out)},
                     {"cardinalities", [&](const json& v) {
                        c.synth.spec = FactorSpec::from_cardinalities(v.get<std::vector<int>>());
                      }},
                     {"train_size", bind(c.synth.train_size)},
                     {"test_size", bind(c.synth.test_size)},
                     {"dim", bind(c.synth.dim)},
                     {"mixing", bind(c.synth.mixing)},
                     {"noise_sigma", bind(c.synth.noise_sigma)}});
    } else if (section == "mask") {
      apply_section(section, values,
                    {{"keep_prob", bind(c.mask.keep_prob)},
                     {"granularity", [&](const json& v) {
                        const auto name = v.get<std::string>();
                        if (name == "channel") c.mask.granularity = MaskGranularity::kPerChannel;
                        else if (name == "element") c.mask.granularity = MaskGranularity::kPerElement;
                        else fail(ErrorKind::kConfigError, "mask.granularity must be channel or element");
                      }},
                     {"rescale", bind(c.mask.rescale)},
                     {"shape", bind(c.mask_shape)}});
    } else {
      fail(ErrorKind::kConfigError, "unknown config section '" + section + "'");
    }
  }
  c.synth.seed = c.seed;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfigError, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfigError, path + ": " + e.what());
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

json to_json(const RunConfig& c) {
  const auto& rule = c.dyga.em.rule;
  return {
      {"seed", c.seed},
      {"dyga",
       {{"phi", c.dyga.phi},
        {"psi", c.dyga.psi},
        {"k0", c.dyga.k0},
        {"random_split_prob", c.dyga.random_split_prob},
        {"min_cluster_fraction", c.dyga.min_cluster_fraction},
        {"max_split_rounds", c.dyga.max_split_rounds},
        {"lambda", c.alignment.lambda},
        {"tau", c.alignment.tau},
        {"ratio_epsilon", c.alignment.ratio_epsilon},
        {"hard_select", c.alignment.hard_select},
        {"gumbel_mode", kGumbelNames.at(c.alignment.mode)}}},
      {"em",
       {{"max_iter", c.dyga.em.max_iter},
        {"tol", c.dyga.em.tol},
        {"floor", c.dyga.em.floor},
        {"intrinsic_dim", kRuleNames.at(rule.kind)},
        {"intrinsic_threshold", rule.threshold},
        {"intrinsic_fixed", rule.fixed_dim}}},
      {"metrics",
       {{"votes", c.metrics.votes},
        {"batch", c.metrics.batch},
        {"bins", c.metrics.bins},
        {"estimator", estimator_name(c.metrics)},
        {"downstream", c.metrics.downstream},
        {"gbt_depth", c.metrics.gbt.max_depth},
        {"gbt_rounds", c.metrics.gbt.n_rounds},
        {"gbt_learning_rate", c.metrics.gbt.learning_rate}}},
      {"pipeline",
       {{"rounds", c.pipeline.rounds},
        {"r", c.pipeline.r},
        {"workers", c.pipeline.workers},
        {"metrics", c.pipeline.metrics},
        {"silhouette_samples", c.pipeline.silhouette_samples}}},
      {"data",
       {{"features", c.data.features},
        {"factors", c.data.factors},
        {"model", c.data.model},
        {"out", c.data.out},
        {"cardinalities", c.synth.spec.cardinalities()},
        {"train_size", c.synth.train_size},
        {"test_size", c.synth.test_size},
        {"dim", c.synth.dim},
        {"mixing", c.synth.mixing},
        {"noise_sigma", c.synth.noise_sigma}}},
      {"mask",
       {{"keep_prob", c.mask.keep_prob},
        {"granularity", c.mask.granularity == MaskGranularity::kPerChannel ? "channel" : "element"},
        {"rescale", c.mask.rescale},
        {"shape", c.mask_shape}}},
  };
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorKind::kConfigError, "override '" + assignment + "' is not key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const auto dot = path.find('.');
  json patch;
  if (dot == std::string::npos) patch[path] = value;
  else patch[path.substr(0, dot)][path.substr(dot + 1)] = value;
  apply_json(config, patch);
}

}  // namespace dyga
