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

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fusenas/arch.hpp"
#include "fusenas/cli.hpp"
#include "fusenas/error.hpp"
#include "fusenas/experiment.hpp"

namespace fusenas {

namespace {

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

int fail(std::ostream& err, const char* kind, const std::string& msg, int code) {
  err << "error: " << kind << ": " << one_line(msg) << '\n';
  return code;
}

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> population;
  std::optional<int> rough_generations;
  std::optional<int> transfer_generations;
  std::optional<int> search_epochs;
  std::optional<int> epochs;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.out) c.output_dir = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.search.jobs = *o.jobs;
  if (o.population) c.search.population = *o.population;
  if (o.rough_generations) c.search.rough_generations = *o.rough_generations;
  if (o.transfer_generations) c.search.transfer_generations = *o.transfer_generations;
  if (o.search_epochs) c.search.search_epochs = *o.search_epochs;
  if (o.epochs) c.train.epochs = *o.epochs;
  c.propagate_seed();
  c.validate();
  return c;
}

std::vector<int> subsets_of(const ExperimentConfig& c, std::optional<int> k) {
  if (k) return {*k};
  std::vector<int> all;
  for (int i = 0; i < c.subset_count(); ++i) all.push_back(i);
  return all;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolutionary architecture search for multimodal sEMG/ACC gesture networks",
               "fusenas"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config, "JSON experiment config");
  app.add_option("-o,--out", o.out, "output directory (overrides config)");
  app.add_option("--seed", o.seed, "master seed (overrides config)");
  app.add_option("--jobs", o.jobs, "concurrent fitness evaluations (default 1)");

  auto* synth = app.add_subcommand("synth", "generate the synthetic sub-datasets");
  bool csv = false;
  synth->add_flag("--csv", csv, "also export each sub-dataset as CSV");

  app.add_subcommand("features", "window, extract and cache features");

  auto* search = app.add_subcommand("search", "rough and transfer search");
  search->add_option("--population", o.population, "population size S (even)");
  search->add_option("--rough-generations", o.rough_generations, "generations on the mixed data");
  search->add_option("--transfer-generations", o.transfer_generations,
                     "generations per sub-dataset");
  search->add_option("--search-epochs", o.search_epochs, "training epochs per fitness evaluation");

  auto* decode_cmd = app.add_subcommand("decode", "print the architecture of a genome");
  std::string genome_text;
  decode_cmd->add_option("genome", genome_text, "20 comma-separated genes")->required();

  auto* train_cmd = app.add_subcommand("train", "train the searched (or given) genome");
  std::optional<int> subset;
  std::optional<std::string> train_genome;
  train_cmd->add_option("--subset", subset, "sub-dataset index (default: all)");
  train_cmd->add_option("--genome", train_genome, "genome text instead of the search result");
  train_cmd->add_option("--epochs", o.epochs, "training epochs (overrides config)");

  auto* eval_cmd = app.add_subcommand("eval", "test accuracy of trained checkpoints");
  bool tune = false;
  eval_cmd->add_option("--subset", subset, "sub-dataset index (default: all)");
  eval_cmd->add_flag("--fine-tune", tune, "adapt on a share of the test windows first");

  app.add_subcommand("report", "tabulate the eval results");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, "config", e.what(), 2);
  }

  try {
    const ExperimentConfig cfg = resolve(o);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") {
      for (const auto& p : run_synth(cfg, csv)) out << "wrote " << p.string() << '\n';
    } else if (cmd == "features") {
      const auto doc = run_features(cfg);
      for (const auto& s : doc["subsets"]) {
        out << subset_name(s["subset"].get<int>()) << ": " << s["train_windows"]
            << " train windows, " << s["test_windows"] << " test windows\n";
      }
    } else if (cmd == "search") {
      const auto doc = run_search_stage(cfg);
      const auto& best = doc["search_report"]["best_genomes"];
      for (std::size_t k = 0; k < best.size(); ++k) {
        out << subset_name(static_cast<int>(k)) << " " << best[k].get<std::string>() << '\n';
      }
    } else if (cmd == "decode") {
      const GeneSpace space = cfg.gene_space();
      out << summarize(decode(deserialize(genome_text, space), space));
    } else if (cmd == "train") {
      std::optional<Genome> g;
      if (train_genome) g = deserialize(*train_genome, cfg.gene_space());
      for (int k : subsets_of(cfg, subset)) {
        const auto doc = run_train(cfg, k, g);
        out << subset_name(k) << " " << doc["genome"].get<std::string>()
            << " train_accuracy_percent " << doc["train_accuracy_percent"].get<double>()
            << '\n';
      }
    } else if (cmd == "eval") {
      for (int k : subsets_of(cfg, subset)) {
        const auto doc = run_eval(cfg, k, tune);
        out << subset_name(k) << " accuracy_percent "
            << doc["accuracy_percent"].get<double>() << " majority_baseline_percent "
            << doc["majority_baseline_percent"].get<double>() << '\n';
      }
    } else if (cmd == "report") {
      out << run_report(cfg);
    }
  } catch (const ConfigError& e) {
    return fail(err, "config", e.what(), 2);
  } catch (const DataError& e) {
    return fail(err, "data", e.what(), 3);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(err, "data", e.what(), 3);
  } catch (const NumericError& e) {
    return fail(err, "numeric", e.what(), 4);
  } catch (const std::exception& e) {
    return fail(err, "internal", e.what(), 1);
  }
  return 0;
}

}  // namespace fusenas
