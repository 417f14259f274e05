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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dyga/cli.hpp"
#include "dyga/io.hpp"
#include "helpers.hpp"

using namespace dyga;
using dyga::testing::slurp;
using dyga::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string log;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, log;
  const int code = run_cli(args, out, log);
  return {code, out.str(), log.str()};
}

// Every regular file below `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

const std::vector<std::string> kSmall = {"--set", "data.train_size=500", "--set", "data.test_size=100",
                                         "--set", "data.dim=6", "--workers", "2"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST_CASE("parse and config failures exit with 2") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"bogus"}).code == kExitConfig);
  CHECK(cli({"fit", "--features"}).code == kExitConfig);
  CHECK(cli({"synth", "--out", "/tmp/x", "--set", "dyga.nope=1"}).code == kExitConfig);
  CHECK(cli({"synth", "--out", "/tmp/x", "--cards", "1,200"}).code == kExitConfig);
  CHECK(cli({"synth", "--out", "/tmp/x", "--mixing", "1.5"}).code == kExitConfig);
  CHECK(cli({"synth"}).code == kExitConfig);
  CHECK(cli({"--version"}).code == kExitOk);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("missing or malformed data exits with 3") {
  TempDir dir("cli_data");
  CHECK(cli({"fit", "--features", (dir / "none.dyga").string(), "--model", (dir / "m.json").string()}).code ==
        kExitData);
  std::ofstream(dir / "junk.dyga") << "not a tensor";
  const Run r = cli({"fit", "--features", (dir / "junk.dyga").string(), "--model", (dir / "m.json").string()});
  CHECK(r.code == kExitData);
  CHECK(r.log.find("FormatError") != std::string::npos);
}

TEST_CASE("degenerate factors exit with 4") {
  TempDir dir("cli_numeric");
  REQUIRE(cli(with_small({"synth", "--out", dir.path().string(), "--seed", "1"})).code == kExitOk);
  std::ostringstream csv;
  csv << "sample_id,f0\n";
  for (int i = 0; i < 600; ++i) csv << i << ",0\n";
  std::ofstream(dir / "flat.csv") << csv.str();
  const Run r = cli({"metrics", "--features", (dir / "features.dyga").string(), "--factors",
                     (dir / "flat.csv").string(), "--out", (dir / "m.json").string()});
  CHECK(r.code == kExitNumeric);
}

TEST_CASE("every command is byte-reproducible") {
  TempDir dir("cli_repro");
  const std::string d = dir.path().string();
  const std::vector<std::vector<std::string>> commands = {
      with_small({"synth", "--out", d + "/data", "--seed", "5", "--mixing", "0.3"}),
      with_small({"fit", "--features", d + "/data/features.dyga", "--model", d + "/model.json", "--seed", "5"}),
      with_small({"align", "--features", d + "/data/features.dyga", "--model", d + "/model.json", "--out",
                  d + "/aligned.dyga", "--seed", "5"}),
      with_small({"metrics", "--features", d + "/aligned.dyga", "--factors", d + "/data/factors.csv", "--out",
                  d + "/metrics.json", "--seed", "5", "--set", "metrics.gbt_rounds=5"}),
      with_small({"pipeline", "--out", d + "/pipe", "--rounds", "2", "--seed", "5", "--set",
                  "metrics.gbt_rounds=5", "--set", "metrics.downstream=false"}),
      {"maskdemo", "--out", d + "/mask.dyga", "--seed", "5", "--keep-prob", "0.7"},
  };
  std::vector<std::string> stdout_first;
  for (const auto& c : commands) {
    const Run r = cli(c);
    REQUIRE_MESSAGE(r.code == kExitOk, c.front() << ": " << r.log);
    stdout_first.push_back(r.out);
  }
  const auto first = snapshot(dir.path());
  CHECK(first.count("pipe/summary.csv") == 1);
  CHECK(first.count("pipe/round_001/model.json") == 1);
  for (std::size_t i = 0; i < commands.size(); ++i) CHECK(cli(commands[i]).out == stdout_first[i]);
  CHECK(snapshot(dir.path()) == first);

  // Worker count is echoed in the config but must not change the anchors.
  std::vector<std::string> fit = commands[1];
  fit.back() = "1";
  CHECK(cli(fit).code == kExitOk);
  CHECK(read_json(dir / "model.json")["units"] == nlohmann::json::parse(first.at("model.json"))["units"]);
}

TEST_CASE("align with lambda 0 and maskdemo with keep_prob 1 are identities") {
  TempDir dir("cli_identity");
  const std::string d = dir.path().string();
  REQUIRE(cli(with_small({"synth", "--out", d, "--seed", "2"})).code == kExitOk);
  REQUIRE(cli(with_small({"fit", "--features", d + "/features.dyga", "--model", d + "/m.json"})).code ==
          kExitOk);
  REQUIRE(cli({"align", "--features", d + "/features.dyga", "--model", d + "/m.json", "--out",
               d + "/same.dyga", "--lambda", "0"})
              .code == kExitOk);
  CHECK(slurp(dir / "same.dyga") == slurp(dir / "features.dyga"));

  Tensor t;
  t.dims = {4, 3, 2};
  for (int i = 0; i < 24; ++i) t.values.push_back(0.25f * static_cast<float>(i) - 2.0f);
  write_tensor(dir / "in.dyga", t);
  REQUIRE(cli({"maskdemo", "--input", d + "/in.dyga", "--out", d + "/out.dyga", "--keep-prob", "1"}).code ==
          kExitOk);
  CHECK(slurp(dir / "out.dyga") == slurp(dir / "in.dyga"));
}

TEST_CASE("align rejects a model of the wrong width") {
  TempDir dir("cli_shape");
  const std::string d = dir.path().string();
  REQUIRE(cli(with_small({"synth", "--out", d + "/a", "--seed", "3"})).code == kExitOk);
  REQUIRE(cli(with_small({"fit", "--features", d + "/a/features.dyga", "--model", d + "/m.json"})).code ==
          kExitOk);
  REQUIRE(cli({"synth", "--out", d + "/b", "--set", "data.train_size=100", "--set", "data.test_size=0", "--set",
               "data.dim=4"})
              .code == kExitOk);
  CHECK(cli({"align", "--features", d + "/b/features.dyga", "--model", d + "/m.json", "--out", d + "/x.dyga"})
            .code == kExitData);
}
