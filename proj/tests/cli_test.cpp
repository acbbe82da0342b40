// Copyright 2026 The fusenas Authors.
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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fusenas/arch.hpp"
#include "fusenas/cli.hpp"
#include "fusenas/error.hpp"
#include "fusenas/experiment.hpp"

using namespace fusenas;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fusenas");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fusenas_cli_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

// Small enough to run the whole pipeline in a few seconds.
const char* kTinyConfig = R"({
  "seed": 3,
  "candidate_filters": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
  "synthetic": {"num_classes": 3, "segment_samples": 600, "rest_samples": 50},
  "synthetic_subsets": 2,
  "search": {"population": 2, "rough_generations": 1, "transfer_generations": 1,
             "search_epochs": 1},
  "train": {"epochs": 3}
})";

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("decode prints the architecture summary") {
  const std::string ref = "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,1";
  const Run r = cli({"decode", ref});
  CHECK(r.code == 0);
  const GeneSpace s = GeneSpace::Default();
  CHECK(r.out == summarize(decode(deserialize(ref, s), s)));
  CHECK(r.out.rfind("depth 4\n", 0) == 0);
  CHECK(r.out.find("0 OrdinaryConv @16 [semg]") != std::string::npos);

  const Run bad = cli({"decode", "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0"});
  CHECK(bad.code == 2);
  CHECK(bad.err == "error: config: genome has 19 genes, expected 20\n");
  CHECK(cli({"decode", "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,10"}).code == 2);
}

TEST_CASE("usage and config errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"bogus"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  const Run missing = cli({"-c", "/nonexistent/config.json", "features"});
  CHECK(missing.code == 2);
  CHECK(missing.err.rfind("error: config: ", 0) == 0);

  const fs::path dir = scratch("errors");
  const Run typo = cli({"-c", write_config(dir, R"({"serch": {}})").string(), "features"});
  CHECK(typo.code == 2);
  CHECK(typo.err.find("unknown config key config.serch") != std::string::npos);
  CHECK(cli({"-c", write_config(dir, R"({"search": {"population": "x"}})").string(),
             "features"}).code == 2);
  CHECK(cli({"-c", write_config(dir, R"({"search": {"population": 7}})").string(),
             "features"}).code == 2);
  CHECK(cli({"-c", write_config(dir, "{not json").string(), "features"}).code == 2);

  // No recordings yet: a data error.
  const Run nodata = cli({"-o", (dir / "out").string(), "features"});
  CHECK(nodata.code == 3);
  CHECK(nodata.err.rfind("error: data: ", 0) == 0);
  CHECK(std::count(nodata.err.begin(), nodata.err.end(), '\n') == 1);
  fs::remove_all(dir);
}

TEST_CASE("config file, flags and hashing") {
  const fs::path dir = scratch("config");
  const fs::path p = write_config(dir, kTinyConfig);
  const ExperimentConfig c = load_config(p);
  CHECK(c.seed == 3);
  CHECK(c.search.seed == 3);
  CHECK(c.search.population == 2);
  CHECK(c.search.crossover_rate == 0.9);  // default kept
  CHECK(c.candidate_filters[9] == 10);

  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  ExperimentConfig other = c;
  other.seed = 4;
  other.propagate_seed();
  CHECK(config_hash(other) != config_hash(c));
  ExperimentConfig moved = c;
  moved.output_dir = "/elsewhere";
  moved.search.jobs = 4;
  CHECK(config_hash(moved) == config_hash(c));  // neither changes results

  // Flags win over the file: decode with the file's filters, then with a
  // seed override that must show up in artifacts.
  const Run r = cli({"-c", p.string(), "decode", "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,1"});
  CHECK(r.out.find("@2 [semg]") != std::string::npos);
  const Run s = cli({"-c", p.string(), "-o", (dir / "out").string(), "--seed", "9", "synth"});
  REQUIRE(s.code == 0);
  nlohmann::json meta;
  read_recordings(dir / "out" / "data" / "subset_0.rec", &meta);
  CHECK(meta["seed"] == 9);
  CHECK(meta["config"]["search"]["population"] == 2);
  fs::remove_all(dir);
}

TEST_CASE("tiny pipeline end to end") {
  const fs::path dir = scratch("pipeline");
  const std::string cfg = write_config(dir, kTinyConfig).string();
  const std::string out = (dir / "out").string();
  auto step = [&](std::vector<std::string> args) {
    std::vector<std::string> full = {"-c", cfg, "-o", out};
    full.insert(full.end(), args.begin(), args.end());
    const Run r = cli(full);
    INFO(r.err);
    REQUIRE(r.code == 0);
    return r;
  };
  step({"synth", "--csv"});
  CHECK(fs::exists(dir / "out" / "data" / "subset_1.csv"));
  const Run f = step({"features"});
  CHECK(f.out.find("subset_1: ") != std::string::npos);
  const Run s = step({"search"});
  CHECK(s.out.find("subset_0 ") == 0);
  step({"train"});
  const Run e = step({"eval"});
  CHECK(e.out.find("subset_0 accuracy_percent ") == 0);
  step({"eval", "--fine-tune", "--subset", "1"});
  const Run rep = step({"report"});
  CHECK(rep.out.find("subset  fine_tune  accuracy_%") != std::string::npos);

  const ExperimentConfig c = load_config(cfg);
  const std::string hash = config_hash(c);
  for (const char* rel : {"search/report.json", "train/subset_0_history.json",
                          "eval/subset_0.json", "eval/subset_1_ft.json"}) {
    const auto j = read_json(dir / "out" / rel);
    CHECK(j["config_hash"] == hash);
    CHECK(j["seed"] == 3);
    CHECK(j["config"] == config_to_json(c));
  }
  const auto ev = read_json(dir / "out" / "eval" / "subset_1_ft.json");
  CHECK(ev["adaptation_windows"].get<int>() > 0);
  CHECK(ev["fine_tuned"] == true);
  const auto hist = read_json(dir / "out" / "train" / "subset_0_history.json");
  CHECK(hist["history"].size() == 3);

  // A rerun into a second directory gives the same search payload.
  const std::string out2 = (dir / "out2").string();
  for (const char* cmd : {"synth", "features", "search"}) {
    REQUIRE(cli({"-c", cfg, "-o", out2, "--jobs", "2", cmd}).code == 0);
  }
  auto a = read_json(dir / "out" / "search" / "report.json");
  auto b = read_json(dir / "out2" / "search" / "report.json");
  a.erase("timings");
  b.erase("timings");
  CHECK(a.dump() == b.dump());

  // A given genome instead of the search result.
  step({"train", "--subset", "0", "--genome", "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,1",
        "--epochs", "1"});
  CHECK(read_json(dir / "out" / "train" / "subset_0_history.json")["history"].size() == 1);
  CHECK(cli({"-c", cfg, "-o", out, "eval", "--subset", "5"}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("numeric failures exit with 4") {
  const fs::path dir = scratch("numeric");
  const std::string cfg = write_config(dir, R"({
    "seed": 3,
    "candidate_filters": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    "synthetic": {"num_classes": 3, "segment_samples": 600, "rest_samples": 50},
    "synthetic_subsets": 1,
    "train": {"epochs": 2, "learning_rate": 1e300}
  })").string();
  const std::string out = (dir / "out").string();
  REQUIRE(cli({"-c", cfg, "-o", out, "synth"}).code == 0);
  REQUIRE(cli({"-c", cfg, "-o", out, "features"}).code == 0);
  const Run r = cli({"-c", cfg, "-o", out, "train", "--genome",
                     "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,1"});
  CHECK(r.code == 4);
  CHECK(r.err.rfind("error: numeric: ", 0) == 0);
  fs::remove_all(dir);
}
