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

#include <fstream>
#include <string>

#include "doctest.h"
#include "dyga/config.hpp"
#include "dyga/error.hpp"
#include "helpers.hpp"

using namespace dyga;
using nlohmann::json;

namespace {

bool config_error(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == ErrorKind::kConfigError;
  }
  return false;
}

}  // namespace

TEST_CASE("defaults validate and echo round-trips") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  const json echo = to_json(c);
  for (const char* section : {"seed", "dyga", "em", "metrics", "pipeline", "data", "mask"})
    CHECK(echo.contains(section));
  RunConfig d;
  apply_json(d, echo);
  CHECK(to_json(d) == echo);
}

TEST_CASE("partial sections keep the other values") {
  RunConfig c;
  const double psi = c.dyga.psi;
  apply_json(c, {{"dyga", {{"phi", 0.4}, {"gumbel_mode", "literal"}}}, {"em", {{"intrinsic_dim", "full"}}}});
  CHECK(c.dyga.phi == 0.4);
  CHECK(c.dyga.psi == psi);
  CHECK(c.alignment.mode == GumbelMode::kLiteral);
  CHECK(c.dyga.em.rule.kind == IntrinsicDimRule::Kind::kFull);
  apply_json(c, {{"seed", 17}});
  CHECK(c.synth.seed == 17);
}

TEST_CASE("unknown keys and bad values are config errors") {
  RunConfig c;
  CHECK(config_error([&] { apply_json(c, {{"dyga", {{"phii", 0.4}}}}); }));
  CHECK(config_error([&] { apply_json(c, {{"solver", {{"x", 1}}}}); }));
  CHECK(config_error([&] { apply_json(c, {{"dyga", 3}}); }));
  CHECK(config_error([&] { apply_json(c, {{"dyga", {{"phi", "high"}}}}); }));
  CHECK(config_error([&] { apply_json(c, {{"em", {{"intrinsic_dim", "bic"}}}}); }));
  CHECK(config_error([&] { apply_json(c, {{"metrics", {{"estimator", "lasso"}}}}); }));
  CHECK(config_error([&] { apply_json(c, {{"mask", {{"granularity", "pixel"}}}}); }));
  CHECK(config_error([&] { apply_json(c, json::array()); }));
}

TEST_CASE("validate rejects out-of-range settings") {
  auto invalid = [](const json& patch) {
    RunConfig c;
    apply_json(c, patch);
    return config_error([&] { c.validate(); });
  };
  CHECK(invalid({{"pipeline", {{"rounds", 0}}}}));
  CHECK(invalid({{"pipeline", {{"r", 0}}}}));
  CHECK(invalid({{"data", {{"mixing", 1.0}}}}));
  CHECK(invalid({{"data", {{"noise_sigma", -0.1}}}}));
  CHECK(invalid({{"data", {{"dim", 1}}}}));
  CHECK(invalid({{"data", {{"cardinalities", {1, 5}}}}}));
  CHECK(invalid({{"metrics", {{"bins", 1}}}}));
  CHECK(invalid({{"mask", {{"shape", {4, 4}}}}}));
  CHECK(invalid({{"dyga", {{"phi", 1.5}}}}));
  CHECK(invalid({{"dyga", {{"lambda", -0.1}}}}));
  CHECK_FALSE(invalid({{"dyga", {{"lambda", 0.0}}}}));
}

TEST_CASE("overrides parse JSON values and bare strings") {
  RunConfig c;
  apply_override(c, "dyga.phi=0.35");
  apply_override(c, "data.cardinalities=[3,4]");
  apply_override(c, "em.intrinsic_dim=variance");
  apply_override(c, "seed=9");
  apply_override(c, "metrics.downstream=false");
  CHECK(c.dyga.phi == 0.35);
  CHECK(c.synth.spec.cardinalities() == std::vector<int>{3, 4});
  CHECK(c.dyga.em.rule.kind == IntrinsicDimRule::Kind::kVariance);
  CHECK(c.seed == 9);
  CHECK_FALSE(c.metrics.downstream);
  CHECK(config_error([&] { apply_override(c, "dyga.phi"); }));
  CHECK(config_error([&] { apply_override(c, "=3"); }));
  CHECK(config_error([&] { apply_override(c, "dyga.nope=3"); }));
}

TEST_CASE("load_config reads files") {
  dyga::testing::TempDir dir("config");
  std::ofstream(dir / "c.json") << R"({"seed": 4, "pipeline": {"rounds": 7}})";
  const RunConfig c = load_config((dir / "c.json").string());
  CHECK(c.seed == 4);
  CHECK(c.pipeline.rounds == 7);
  std::ofstream(dir / "broken.json") << "{seed: 4";
  CHECK(config_error([&] { load_config((dir / "broken.json").string()); }));
  CHECK(config_error([&] { load_config((dir / "missing.json").string()); }));
}
