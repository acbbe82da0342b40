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

#include "fusenas/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fusenas/arch.hpp"
#include "fusenas/error.hpp"
#include "fusenas/net/network.hpp"
#include "fusenas/seed.hpp"

namespace fusenas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed stream tags for the pipeline stages.
enum : std::uint64_t { kSynthStream = 10, kNetStream = 20, kTrainStream = 21, kTuneStream = 22 };

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown config key " + section + "." + key);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

int ExperimentConfig::subset_count() const {
  return datasets.empty() ? synthetic_subsets : static_cast<int>(datasets.size());
}

GeneSpace ExperimentConfig::gene_space() const {
  return GeneSpace::WithFilters(candidate_filters);
}

void ExperimentConfig::propagate_seed() {
  search.seed = seed;
  train.seed = seed;
  fine_tune.seed = seed;
}

void ExperimentConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (datasets.empty()) {
    if (synthetic_subsets < 1) throw ConfigError("synthetic_subsets must be >= 1");
    synthetic.validate();
  }
  gene_space();
  split.validate();
  if (search_valid_repetitions.empty()) {
    throw ConfigError("search_valid_repetitions must not be empty");
  }
  std::set<int> valid(search_valid_repetitions.begin(), search_valid_repetitions.end());
  for (int r : valid) {
    if (std::find(split.train.begin(), split.train.end(), r) == split.train.end()) {
      throw ConfigError("search validation repetition " + std::to_string(r) +
                        " is not a training repetition");
    }
  }
  if (valid.size() >= split.train.size()) {
    throw ConfigError("search validation must leave training repetitions for fitness");
  }
  if (!(preprocess.trim_fraction >= 0.0) || preprocess.trim_fraction >= 0.5) {
    throw ConfigError("trim_fraction must lie in [0, 0.5)");
  }
  if (preprocess.window_length < 2 || preprocess.window_stride < 1) {
    throw ConfigError("window length must be >= 2 and stride >= 1");
  }
  if (!(preprocess.eps >= 0.0)) throw ConfigError("feature eps must be >= 0");
  search.validate();
  train.validate();
  if (fine_tune.fraction < 0.0 || fine_tune.fraction >= 1.0) {
    throw ConfigError("fine_tune.fraction must lie in [0, 1)");
  }
  if (fine_tune.epochs < 0 || fine_tune.batch_size < 1 || !(fine_tune.learning_rate > 0.0)) {
    throw ConfigError("fine_tune needs epochs >= 0, batch_size >= 1 and a positive rate");
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["datasets"] = json::array();
  for (const fs::path& p : c.datasets) j["datasets"].push_back(p.string());
  j["synthetic"] = c.synthetic;
  j["synthetic_subsets"] = c.synthetic_subsets;
  j["candidate_filters"] = c.candidate_filters;
  j["split"] = {{"train", c.split.train}, {"test", c.split.test}};
  j["search_valid_repetitions"] = c.search_valid_repetitions;
  j["preprocess"] = {{"trim_fraction", c.preprocess.trim_fraction},
                     {"window_length", c.preprocess.window_length},
                     {"window_stride", c.preprocess.window_stride},
                     {"eps", c.preprocess.eps},
                     {"standardize_features", c.preprocess.standardize_features}};
  j["search"] = c.search;
  j["search"].erase("seed");
  j["train"] = {{"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"decay_epochs", c.train.decay_epochs},
                {"decay_factor", c.train.decay_factor},
                {"batch_size", c.train.batch_size}};
  j["fine_tune"] = {{"fraction", c.fine_tune.fraction},
                    {"epochs", c.fine_tune.epochs},
                    {"learning_rate", c.fine_tune.learning_rate},
                    {"batch_size", c.fine_tune.batch_size}};
  return j;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  try {
    reject_unknown(j,
                   {"seed", "output_dir", "datasets", "synthetic", "synthetic_subsets",
                    "candidate_filters", "split", "search_valid_repetitions", "preprocess",
                    "search", "train", "fine_tune"},
                   "config");
    read(j, "seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("datasets")) {
      c.datasets.clear();
      for (const auto& p : j.at("datasets")) c.datasets.emplace_back(p.get<std::string>());
    }
    if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      reject_unknown(s, {"num_classes", "repetitions", "segment_samples", "rest_samples",
                         "noise", "seed", "subject"},
                     "synthetic");
      from_json(s, c.synthetic);
    }
    read(j, "synthetic_subsets", c.synthetic_subsets);
    read(j, "candidate_filters", c.candidate_filters);
    if (j.contains("split")) {
      const json& s = j.at("split");
      reject_unknown(s, {"train", "test"}, "split");
      read(s, "train", c.split.train);
      read(s, "test", c.split.test);
    }
    read(j, "search_valid_repetitions", c.search_valid_repetitions);
    if (j.contains("preprocess")) {
      const json& p = j.at("preprocess");
      reject_unknown(p, {"trim_fraction", "window_length", "window_stride", "eps",
                         "standardize_features"},
                     "preprocess");
      read(p, "trim_fraction", c.preprocess.trim_fraction);
      read(p, "window_length", c.preprocess.window_length);
      read(p, "window_stride", c.preprocess.window_stride);
      read(p, "eps", c.preprocess.eps);
      read(p, "standardize_features", c.preprocess.standardize_features);
    }
    if (j.contains("search")) {
      const json& s = j.at("search");
      reject_unknown(s, {"population", "rough_generations", "transfer_generations",
                         "crossover_rate", "mutation_rate", "search_epochs", "batch_size",
                         "learning_rate", "rough_fraction", "jobs"},
                     "search");
      const std::uint64_t keep = c.search.seed;
      from_json(s, c.search);
      c.search.seed = keep;
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t, {"epochs", "learning_rate", "decay_epochs", "decay_factor",
                         "batch_size"},
                     "train");
      read(t, "epochs", c.train.epochs);
      read(t, "learning_rate", c.train.learning_rate);
      read(t, "decay_epochs", c.train.decay_epochs);
      read(t, "decay_factor", c.train.decay_factor);
      read(t, "batch_size", c.train.batch_size);
    }
    if (j.contains("fine_tune")) {
      const json& f = j.at("fine_tune");
      reject_unknown(f, {"fraction", "epochs", "learning_rate", "batch_size"}, "fine_tune");
      read(f, "fraction", c.fine_tune.fraction);
      read(f, "epochs", c.fine_tune.epochs);
      read(f, "learning_rate", c.fine_tune.learning_rate);
      read(f, "batch_size", c.fine_tune.batch_size);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.propagate_seed();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json provenance(const ExperimentConfig& c) {
  return {{"config_hash", config_hash(c)}, {"seed", c.seed}, {"config", config_to_json(c)}};
}

fs::path artifact(const ExperimentConfig& c, const std::string& rel) {
  return c.output_dir / rel;
}

std::string subset_name(int k) { return "subset_" + std::to_string(k); }

// ---- stages ----

namespace {

SyntheticSpec subset_spec(const ExperimentConfig& c, int k) {
  SyntheticSpec s = c.synthetic;
  s.seed = derive_seed(c.synthetic.seed, {kSynthStream, static_cast<std::uint64_t>(k)});
  s.subject = k;
  return s;
}

RecordingSet load_recordings(const ExperimentConfig& c, int k) {
  if (!c.datasets.empty()) return ingest_csv(c.datasets.at(static_cast<std::size_t>(k)), k);
  const fs::path p = artifact(c, "data/" + subset_name(k) + ".rec");
  if (!fs::exists(p)) throw DataError(p.string() + " not found; run synth first");
  return read_recordings(p);
}

fs::path feature_path(const ExperimentConfig& c, int k, const char* part) {
  return artifact(c, "features/" + subset_name(k) + "_" + part + ".feat");
}

Dataset load_features(const ExperimentConfig& c, int k, const char* part, json* meta) {
  const fs::path p = feature_path(c, k, part);
  if (!fs::exists(p)) throw DataError(p.string() + " not found; run features first");
  return read_feature_cache(p, meta);
}

void check_subset(const ExperimentConfig& c, int k) {
  if (k < 0 || k >= c.subset_count()) {
    throw ConfigError("subset " + std::to_string(k) + " out of range 0.." +
                      std::to_string(c.subset_count() - 1));
  }
}

}  // namespace

std::vector<fs::path> run_synth(const ExperimentConfig& c, bool csv) {
  c.validate();
  if (!c.datasets.empty()) {
    throw ConfigError("config names CSV datasets; synth only applies to synthetic runs");
  }
  std::vector<fs::path> out;
  for (int k = 0; k < c.subset_count(); ++k) {
    const SyntheticSpec spec = subset_spec(c, k);
    const RecordingSet rs = synthesize(spec);
    json meta = provenance(c);
    meta["subset"] = k;
    meta["synthetic"] = spec;
    const fs::path rec = artifact(c, "data/" + subset_name(k) + ".rec");
    write_recordings(rec, rs, meta);
    out.push_back(rec);
    if (csv) {
      const fs::path p = artifact(c, "data/" + subset_name(k) + ".csv");
      export_csv(rs, p);
      out.push_back(p);
    }
  }
  return out;
}

json run_features(const ExperimentConfig& c) {
  c.validate();
  json summary = provenance(c);
  summary["subsets"] = json::array();
  for (int k = 0; k < c.subset_count(); ++k) {
    const RecordingSet rs = load_recordings(c, k);
    const Split sp = split_by_trials(rs, c.split);
    if (sp.train.empty() || sp.test.empty()) {
      throw DataError(subset_name(k) + " has no gesture segments in the train or test trials");
    }
    const PreparedData p = preprocess(sp.train, sp.test, c.preprocess, k);
    if (p.train.empty() || p.test.empty()) {
      throw DataError(subset_name(k) + ": segments are shorter than one window");
    }
    json meta = provenance(c);
    meta["subset"] = k;
    meta["num_classes"] = rs.num_classes;
    write_feature_cache(feature_path(c, k, "train"), p.train, meta);
    write_feature_cache(feature_path(c, k, "test"), p.test, meta);
    summary["subsets"].push_back({{"subset", k},
                                  {"num_classes", rs.num_classes},
                                  {"train_windows", p.train.size()},
                                  {"test_windows", p.test.size()}});
  }
  return summary;
}

FitnessData load_fitness_data(const ExperimentConfig& c, int k) {
  check_subset(c, k);
  json meta;
  Dataset all = load_features(c, k, "train", &meta);
  FitnessData d;
  d.num_classes = meta.value("num_classes", 0);
  const auto& held = c.search_valid_repetitions;
  for (Example& e : all) {
    const bool valid = std::find(held.begin(), held.end(), e.repetition) != held.end();
    (valid ? d.valid : d.train).push_back(std::move(e));
  }
  if (d.train.empty() || d.valid.empty()) {
    throw DataError(subset_name(k) + ": fitness split left no training or validation windows");
  }
  return d;
}

json run_search_stage(const ExperimentConfig& c) {
  c.validate();
  std::vector<FitnessData> subsets;
  for (int k = 0; k < c.subset_count(); ++k) subsets.push_back(load_fitness_data(c, k));
  const GeneSpace space = c.gene_space();
  const TrainerEvaluator ev(space, c.search.search_epochs, c.search.batch_size,
                            c.search.learning_rate);
  const SearchReport rep = run_search(c.search, space, subsets, ev);
  json doc = provenance(c);
  doc["search_report"] = rep.to_json(c.search);
  doc["timings"] = rep.timings;
  write_json(artifact(c, "search/report.json"), doc);

  std::ofstream g(artifact(c, "search/genomes.txt"), std::ios::trunc);
  for (const Individual& b : rep.best) g << serialize(b.genome) << '\n';
  if (!g) throw DataError("failed writing search/genomes.txt");
  return doc;
}

Genome searched_genome(const ExperimentConfig& c, int k) {
  check_subset(c, k);
  const fs::path p = artifact(c, "search/genomes.txt");
  std::ifstream in(p);
  if (!in) throw DataError(p.string() + " not found; run search first or pass --genome");
  std::string line;
  for (int i = 0; std::getline(in, line); ++i) {
    if (i == k) return deserialize(line, c.gene_space());
  }
  throw DataError(p.string() + " has no genome for " + subset_name(k));
}

json run_train(const ExperimentConfig& c, int k, std::optional<Genome> genome) {
  c.validate();
  check_subset(c, k);
  const GeneSpace space = c.gene_space();
  const Genome g = genome ? *genome : searched_genome(c, k);
  validate(g, space);
  json meta;
  const Dataset train = load_features(c, k, "train", &meta);
  const int classes = meta.value("num_classes", 0);
  const auto k64 = static_cast<std::uint64_t>(k);
  const std::uint64_t net_seed = derive_seed(c.seed, {kNetStream, k64});
  net::Network n(decode(g, space), classes, net_seed);
  net::TrainConfig tc = c.train;
  tc.seed = derive_seed(c.seed, {kTrainStream, k64});
  const net::History h = net::train(n, train, {}, tc);

  json head = provenance(c);
  head["subset"] = k;
  head["genome"] = serialize(g);
  head["candidate_filters"] = space.candidate_filters;
  head["num_classes"] = classes;
  head["network_seed"] = net_seed;
  net::save_checkpoint(artifact(c, "train/" + subset_name(k) + ".ckpt"), n, head);

  json doc = provenance(c);
  doc["subset"] = k;
  doc["genome"] = serialize(g);
  doc["parameters"] = n.parameter_count();
  doc["history"] = net::history_to_json(h);
  doc["train_accuracy_percent"] = net::evaluate_accuracy(n, train);
  write_json(artifact(c, "train/" + subset_name(k) + "_history.json"), doc);
  return doc;
}

json run_eval(const ExperimentConfig& c, int k, bool fine_tune) {
  c.validate();
  check_subset(c, k);
  const fs::path ck = artifact(c, "train/" + subset_name(k) + ".ckpt");
  if (!fs::exists(ck)) throw DataError(ck.string() + " not found; run train first");
  const net::Checkpoint cp = net::read_checkpoint(ck);
  GeneSpace space;
  Genome g;
  int classes = 0;
  std::uint64_t net_seed = 0;
  try {
    space = GeneSpace::WithFilters(cp.header.at("candidate_filters"));
    g = deserialize(cp.header.at("genome").get<std::string>(), space);
    classes = cp.header.at("num_classes").get<int>();
    net_seed = cp.header.at("network_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(ck.string() + ": incomplete checkpoint header: " + e.what());
  }
  net::Network n(decode(g, space), classes, net_seed);
  n.load_parameters(cp.params);

  Dataset test = load_features(c, k, "test", nullptr);
  Dataset adapt;
  net::History tune;
  if (fine_tune) {
    const std::uint64_t s = derive_seed(c.seed, {kTuneStream, static_cast<std::uint64_t>(k)});
    std::tie(adapt, test) = net::adaptation_split(test, c.fine_tune.fraction, s);
    net::FineTuneConfig fc = c.fine_tune;
    fc.seed = splitmix64(s);
    tune = net::fine_tune(n, adapt, test, fc);
  }
  json doc = provenance(c);
  doc["subset"] = k;
  doc["genome"] = serialize(g);
  doc["checkpoint_config_hash"] = cp.header.value("config_hash", "");
  doc["fine_tuned"] = fine_tune;
  doc["adaptation_windows"] = adapt.size();
  doc["evaluated_windows"] = test.size();
  doc["accuracy_percent"] = net::evaluate_accuracy(n, test);
  doc["majority_baseline_percent"] = net::majority_baseline_percent(test);
  if (fine_tune) doc["fine_tune_history"] = net::history_to_json(tune);
  write_json(artifact(c, "eval/" + subset_name(k) + (fine_tune ? "_ft" : "") + ".json"), doc);
  return doc;
}

std::string run_report(const ExperimentConfig& c) {
  std::ostringstream out;
  const fs::path search = artifact(c, "search/report.json");
  if (fs::exists(search)) {
    const json doc = read_json(search);
    const json& rough = doc.at("search_report").at("rough").at("generations");
    out << "rough search: " << rough.size() - 1 << " generations, best loss "
        << std::setprecision(6) << rough.back().at("best_loss").get<double>() << "\n";
  }
  std::vector<json> evals;
  const fs::path dir = artifact(c, "eval");
  if (fs::exists(dir)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) evals.push_back(read_json(p));
  }
  if (evals.empty() && out.str().empty()) {
    throw DataError("no search or eval artifacts under " + c.output_dir.string());
  }
  const std::vector<std::string> head = {"subset", "fine_tune", "accuracy_%", "baseline_%",
                                         "windows", "genome"};
  std::vector<std::vector<std::string>> rows;
  for (const json& e : evals) {
    auto fixed = [](double v) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(2) << v;
      return s.str();
    };
    rows.push_back({std::to_string(e.at("subset").get<int>()),
                    e.at("fine_tuned").get<bool>() ? "yes" : "no",
                    fixed(e.at("accuracy_percent").get<double>()),
                    fixed(e.at("majority_baseline_percent").get<double>()),
                    std::to_string(e.at("evaluated_windows").get<std::size_t>()),
                    e.at("genome").get<std::string>()});
  }
  if (!rows.empty()) {
    std::vector<std::size_t> width(head.size());
    for (std::size_t i = 0; i < head.size(); ++i) width[i] = head[i].size();
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        out << std::left << std::setw(static_cast<int>(width[i])) << r[i] << "  ";
      }
      out << r.back() << '\n';
    };
    line(head);
    for (const auto& r : rows) line(r);
  }
  return out.str();
}

}  // namespace fusenas
