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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. An optional argument names the scratch directory.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "feature_oracle.hpp"
#include "fusenas/arch.hpp"
#include "fusenas/cli.hpp"
#include "fusenas/data.hpp"
#include "fusenas/error.hpp"
#include "fusenas/genome.hpp"
#include "fusenas/net/network.hpp"
#include "fusenas/net/trainer.hpp"
#include "fusenas/search.hpp"
#include "fusenas/signal.hpp"
#include "gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fusenas;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return json::parse(in);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path g_scratch;

int cli(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "fusenas");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, errs;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, errs);
  if (err) *err = errs.str();
  return code;
}

// ---------------------------------------------------------------------------

Outcome genome_validity() {
  Stopwatch sw;
  const GeneSpace s = GeneSpace::Default();
  Rng rng(20260101);
  int valid = 0, in_range = 0;
  for (int i = 0; i < 10000; ++i) {
    const Genome g = random_genome(s, rng);
    try {
      validate(g, s);
      ++valid;
    } catch (const std::exception&) {
    }
    const int d = main_path_depth(decode(g, s));
    in_range += d >= 4 && d <= 6 && d == g.main_path_depth();
  }
  const double t = sw.seconds();
  return {valid == 10000 && in_range == 10000 && t < 5.0,
          std::to_string(valid) + "/10000 valid, " + std::to_string(in_range) +
              "/10000 depth in [4,6], " + fmt(t) + " s"};
}

Outcome decode_totality() {
  const GeneSpace s = GeneSpace::Default();
  Rng rng(77);
  int ok = 0;
  for (int i = 0; i < 5000; ++i) {
    const Genome g = random_genome(s, rng);
    const Genome copy = deserialize(serialize(g), s);
    try {
      const ArchGraph a = decode(g, s);
      check_invariants(a);
      ok += summarize(a) == summarize(decode(copy, s));
    } catch (const std::exception&) {
    }
  }
  // Every filter and insertion choice around the reference genome too.
  Genome ref = reference_genome();
  int exhaustive = 0, total = 0;
  for (int idx = 0; idx < kGenomeLength; ++idx) {
    for (int v = s.ranges[idx].lo; v <= s.ranges[idx].hi; ++v) {
      Genome g = ref;
      g[idx] = v;
      g = repair(g, s);
      ++total;
      try {
        check_invariants(decode(g, s));
        ++exhaustive;
      } catch (const std::exception&) {
      }
    }
  }
  return {ok == 5000 && exhaustive == total,
          std::to_string(ok) + "/5000 random decoded with equal summaries, " +
              std::to_string(exhaustive) + "/" + std::to_string(total) +
              " single-gene variants"};
}

Outcome feature_oracle() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  bool shapes = true;
  for (int i = 0; i < 1000; ++i) {
    const Mat x = testing::random_window(kWindowLength, rng);
    const FeatureStreams f = extract_features(x, kFeatureEpsilon);
    const testing::OracleMaps o = testing::oracle_features(x, kFeatureEpsilon);
    shapes = shapes && f.semg.rows() == 6 && f.semg.cols() == 12 && f.acc.rows() == 18 &&
             f.acc.cols() == 12 && f.fused.rows() == 24 && f.fused.cols() == 12 &&
             f.fused.topRows(6) == f.semg && f.fused.bottomRows(18) == f.acc;
    worst = std::max(worst, testing::max_relative_error(f.semg, o.semg));
    worst = std::max(worst, testing::max_relative_error(unreshape_acc(f.acc), o.acc));
  }
  return {shapes && worst < 1e-9,
          "max relative error " + [&] {
            std::ostringstream s;
            s << worst;
            return s.str();
          }() + (shapes ? ", shapes 6x12 18x12 24x12" : ", shape mismatch")};
}

Outcome window_law() {
  bool ok = true;
  std::string detail;
  for (Eigen::Index n : {399, 400, 401, 10000}) {
    const Eigen::Index expect = n < 400 ? 0 : (n - 400) / 20 + 1;
    Segment seg;
    seg.data = Mat::Zero(kTotalChannels, n);
    seg.stimulus = 1;
    const auto w = slide_windows(seg);
    const bool good = window_count(n) == expect && static_cast<Eigen::Index>(w.size()) == expect;
    ok = ok && good;
    if (!w.empty()) ok = ok && w.back().start + 400 <= n;
    if (!detail.empty()) detail += " ";
    detail += std::to_string(n) + "->" + std::to_string(w.size());
  }
  ok = ok && window_count(10000) == 481;
  return {ok, detail};
}

Outcome gradient_checks() {
  Stopwatch sw;
  const Shape in{5, 4, 3};
  double worst = 0.0;
  std::size_t checked = 0;
  int kinds = 0;
  for (BlockKind kind : kAllBlockKinds) {
    const auto r = testing::grad_check_block(testing::spec_for(kind, 4), in, 10,
                                             100 + static_cast<int>(kind));
    worst = std::max(worst, r.max_error());
    checked += r.checked;
    kinds += r.checked > 0;
  }
  const double t = sw.seconds();
  std::ostringstream d;
  d << kinds << " kinds x 10 inputs, " << checked << " entries, max relative error "
    << worst << ", " << fmt(t) << " s";
  return {kinds == 6 && worst < 1e-4 && t < 60.0, d.str()};
}

Outcome training_sanity() {
  Stopwatch sw;
  SyntheticSpec spec;
  spec.num_classes = 5;
  spec.segment_samples = 2000;  // 1 s per trial keeps an epoch near 7 s
  spec.seed = 1;
  const RecordingSet rs = synthesize(spec);
  const Split split = split_by_trials(rs);
  const PreparedData prep = preprocess(split.train, split.test, PreprocessConfig{}, 0);

  const GeneSpace s = GeneSpace::Default();
  net::Network network(decode(reference_genome(), s), spec.num_classes, 1);
  net::TrainConfig cfg;  // 25 epochs, 0.001 divided by 10 after 12 and 20
  cfg.seed = 1;
  const net::History h = net::train(network, prep.train, {}, cfg);
  const double acc = net::evaluate_accuracy(network, prep.train);
  const double t = sw.seconds();
  return {acc >= 95.0 && static_cast<int>(h.size()) == 25 && t < 300.0,
          "train accuracy " + fmt(acc) + "% on " + std::to_string(prep.train.size()) +
              " windows, final loss " + fmt(h.back().train_loss, 4) + ", " + fmt(t, 1) + " s"};
}

Outcome ga_effectiveness() {
  Stopwatch sw;
  const GeneSpace s = GeneSpace::Default();
  const SurrogateEvaluator ev;
  int close = 0, wins = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SearchConfig cfg;
    cfg.population = 20;
    cfg.rough_generations = 30;
    cfg.seed = seed;
    const PhaseResult r = rough_search(cfg, s, {}, ev);
    const double best = r.final.best().fitness;
    worst = std::max(worst, best);
    close += best <= 1.05 * SurrogateEvaluator::kOptimum;
    wins += best <= random_search(cfg, s, {}, ev, r.evaluations).fitness;
  }
  const double t = sw.seconds();
  return {close >= 9 && wins >= 9 && t < 10.0,
          std::to_string(close) + "/10 within 5% of optimum (worst " + fmt(worst, 4) + "), " +
              std::to_string(wins) + "/10 beat random, " + fmt(t) + " s"};
}

// End-to-end smoke run shared by criteria 8, 9, 10 and 12.
struct Smoke {
  bool ran = false;
  bool ok = false;
  double seconds = 0.0;
  std::string error;
  fs::path dir;
};
Smoke g_smoke;

const Smoke& smoke() {
  if (g_smoke.ran) return g_smoke;
  g_smoke.ran = true;
  g_smoke.dir = g_scratch / "smoke";
  fs::remove_all(g_smoke.dir);
  const std::string cfg = std::string(FUSENAS_SOURCE_DIR) + "/configs/smoke.json";
  Stopwatch sw;
  for (const char* cmd : {"synth", "features", "search", "train", "eval"}) {
    std::string err;
    if (cli({"-c", cfg, "-o", g_smoke.dir.string(), "--jobs", "1", cmd}, &err) != 0) {
      g_smoke.error = std::string(cmd) + ": " + err;
      return g_smoke;
    }
  }
  g_smoke.seconds = sw.seconds();
  g_smoke.ok = true;
  return g_smoke;
}

bool non_increasing(const json& generations, std::string* where) {
  for (std::size_t k = 1; k < generations.size(); ++k) {
    if (generations[k]["best_loss"].get<double>() >
        generations[k - 1]["best_loss"].get<double>()) {
      *where = "generation " + std::to_string(k);
      return false;
    }
  }
  return true;
}

Outcome elitist_monotonicity() {
  const Smoke& sm = smoke();
  if (!sm.ok) return {false, "smoke run failed: " + sm.error};
  const json rep = read_json(sm.dir / "search" / "report.json")["search_report"];
  int logs = 0;
  std::string where;
  if (!non_increasing(rep["rough"]["generations"], &where)) {
    return {false, "rough search rises at " + where};
  }
  ++logs;
  for (const json& t : rep["transfer"]) {
    if (!non_increasing(t["generations"], &where)) {
      return {false, "transfer " + t["subset"].dump() + " rises at " + where};
    }
    ++logs;
  }
  // And in an independent surrogate run with many generations.
  SearchConfig cfg;
  cfg.rough_generations = 30;
  cfg.seed = 99;
  const json gens = stats_to_json(rough_search(cfg, GeneSpace::Default(), {},
                                               SurrogateEvaluator{}).log);
  if (!non_increasing(gens, &where)) return {false, "surrogate run rises at " + where};
  ++logs;
  return {logs == 5, std::to_string(logs) + " search logs non-increasing"};
}

Outcome transfer_composition() {
  const Smoke& sm = smoke();
  if (!sm.ok) return {false, "smoke run failed: " + sm.error};
  const json rep = read_json(sm.dir / "search" / "report.json")["search_report"];
  bool ok = rep["search"]["population"] == 8 && rep["transfer"].size() == 3;
  std::string detail;
  for (const json& t : rep["transfer"]) {
    ok = ok && t["start"]["carried"] == 4 && t["start"]["fresh"] == 4;
    if (!detail.empty()) detail += " ";
    detail += t["start"]["carried"].dump() + "+" + t["start"]["fresh"].dump();
  }
  // The carried half is exactly the best half of the rough population.
  SearchConfig cfg;
  cfg.population = 8;
  cfg.rough_generations = 3;
  cfg.transfer_generations = 1;
  cfg.seed = 4;
  const GeneSpace s = GeneSpace::Default();
  const SurrogateEvaluator ev;
  const PhaseResult rough = rough_search(cfg, s, {}, ev);
  const PhaseResult t = transfer_search(cfg, s, rough.final, {}, ev, 0);
  std::vector<Individual> ranked = rough.final.members;
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.fitness < b.fitness;
  });
  int carried = 0, fresh = 0;
  for (std::size_t i = 0; i < t.start.members.size(); ++i) {
    const Individual& m = t.start.members[i];
    if (m.origin == Origin::kCarried) {
      ++carried;
      bool found = false;
      for (int j = 0; j < 4; ++j) found = found || ranked[j].genome == m.genome;
      ok = ok && found;
    } else if (m.origin == Origin::kRandom) {
      ++fresh;
    }
  }
  ok = ok && carried == 4 && fresh == 4;
  return {ok, "smoke subsets " + detail + "; direct " + std::to_string(carried) + "+" +
                  std::to_string(fresh)};
}

Outcome smoke_end_to_end() {
  const Smoke& sm = smoke();
  if (!sm.ok) return {false, "smoke run failed: " + sm.error};
  bool ok = sm.seconds < 900.0;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const json e = read_json(sm.dir / "eval" / ("subset_" + std::to_string(k) + ".json"));
    const double acc = e["accuracy_percent"].get<double>();
    const double base = e["majority_baseline_percent"].get<double>();
    ok = ok && acc >= base + 30.0;
    detail += "subset_" + std::to_string(k) + " " + fmt(acc, 1) + "% vs " + fmt(base, 1) +
              "% baseline; ";
  }
  return {ok, detail + fmt(sm.seconds, 1) + " s"};
}

Outcome metric_exactness() {
  const std::vector<int> pred{0, 1, 2, 1}, truth{0, 1, 2, 2};
  const double a = net::accuracy_percent(pred, truth);
  const std::vector<int> p8{0, 0, 0, 0, 0, 0, 0, 1}, t8(8, 0);
  const double b = net::accuracy_percent(p8, t8);
  const double c = net::accuracy_percent(truth, truth);
  const double d = net::accuracy_percent(std::vector<int>{1, 1}, std::vector<int>{0, 0});
  std::ostringstream shown;
  shown << a;
  return {a == 75.0 && b == 87.5 && c == 100.0 && d == 0.0 && shown.str() == "75",
          "3/4 -> " + fmt(a, 17) + ", 7/8 -> " + fmt(b, 1) + ", 4/4 -> " + fmt(c, 1) +
              ", 0/2 -> " + fmt(d, 1)};
}

Outcome reproducibility() {
  const Smoke& sm = smoke();
  if (!sm.ok) return {false, "smoke run failed: " + sm.error};
  const fs::path again = g_scratch / "smoke_again";
  fs::remove_all(again);
  const std::string cfg = std::string(FUSENAS_SOURCE_DIR) + "/configs/smoke.json";
  for (const char* cmd : {"synth", "features", "search"}) {
    std::string err;
    if (cli({"-c", cfg, "-o", again.string(), "--jobs", "1", cmd}, &err) != 0) {
      return {false, std::string(cmd) + ": " + err};
    }
  }
  json a = read_json(sm.dir / "search" / "report.json");
  json b = read_json(again / "search" / "report.json");
  a.erase("timings");
  b.erase("timings");
  const bool report_same = a.dump() == b.dump();
  bool caches_same = true;
  for (int k = 0; k < 3; ++k) {
    const std::string f = "subset_" + std::to_string(k) + "_train.feat";
    caches_same = caches_same &&
                  read_bytes(sm.dir / "features" / f) == read_bytes(again / "features" / f);
  }
  const bool genomes_same = read_bytes(sm.dir / "search" / "genomes.txt") ==
                            read_bytes(again / "search" / "genomes.txt");
  return {report_same && caches_same && genomes_same,
          std::string("report payload ") + (report_same ? "identical" : "differs") +
              ", feature caches " + (caches_same ? "identical" : "differ") + ", genomes " +
              (genomes_same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  g_scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "fusenas_acceptance";
  fs::create_directories(g_scratch);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"genome validity", genome_validity},
      {"decode determinism and totality", decode_totality},
      {"feature oracle", feature_oracle},
      {"window count law", window_law},
      {"block gradient checks", gradient_checks},
      {"training sanity", training_sanity},
      {"GA effectiveness", ga_effectiveness},
      {"elitist monotonicity", elitist_monotonicity},
      {"transfer composition", transfer_composition},
      {"end-to-end smoke", smoke_end_to_end},
      {"metric exactness", metric_exactness},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
