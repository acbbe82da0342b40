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

#include "fusenas/net/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

#include "../binary_io.hpp"
#include "fusenas/error.hpp"

namespace fusenas::net {

namespace {

constexpr std::string_view kCheckpointMagic = "FNASCKPT";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr int kEvalBatch = 256;

std::vector<int> labels_of(std::span<const Example* const> batch) {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const Example* e : batch) out.push_back(e->label);
  return out;
}

double run_epoch(Network& net, Adam& opt, std::span<const Example> data,
                 int batch_size, double lr, Rng& rng) {
  std::vector<const Example*> order;
  order.reserve(data.size());
  for (const Example& e : data) order.push_back(&e);
  std::shuffle(order.begin(), order.end(), rng);

  double total = 0.0;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    const std::span<const Example* const> batch(order.data() + start, end - start);
    total += train_step(net, opt, batch, lr) * static_cast<double>(batch.size());
  }
  return order.empty() ? 0.0 : total / static_cast<double>(order.size());
}

template <typename Fn>
void for_each_batch(std::span<const Example> data, Fn fn) {
  for (std::size_t start = 0; start < data.size(); start += kEvalBatch) {
    const std::size_t len = std::min<std::size_t>(kEvalBatch, data.size() - start);
    fn(data.subspan(start, len));
  }
}

}  // namespace

void Adam::step(std::span<Param* const> params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * p->grad;
    p->v = cfg_.beta2 * p->v + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    if (lr == 0.0) continue;
    p->value.array() -=
        lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + cfg_.epsilon);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(decay_factor > 0.0)) throw ConfigError("decay factor must be > 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  double lr = cfg.learning_rate;
  for (int d : cfg.decay_epochs) {
    if (epoch > d) lr /= cfg.decay_factor;
  }
  return lr;
}

double train_step(Network& net, Adam& opt, std::span<const Example* const> batch,
                  double lr) {
  net.zero_grad();
  const Mat probs = net.forward(make_batch(batch));
  const std::vector<int> labels = labels_of(batch);
  const LossAndGrad lg = cross_entropy(probs, labels);
  if (!std::isfinite(lg.loss)) {
    throw NumericError("non-finite training loss (" + std::to_string(lg.loss) +
                       ") on a batch of " + std::to_string(batch.size()));
  }
  net.backward(lg.dlogits);
  std::vector<Param*> ps = net.params();
  opt.step(ps, lr);
  return lg.loss;
}

double mean_loss(Network& net, std::span<const Example> data) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for_each_batch(data, [&](std::span<const Example> chunk) {
    const Mat probs = net.forward(make_batch(chunk));
    std::vector<int> labels;
    for (const Example& e : chunk) labels.push_back(e.label);
    total += cross_entropy(probs, labels).loss * static_cast<double>(chunk.size());
  });
  return total / static_cast<double>(data.size());
}

History train(Network& net, std::span<const Example> train_set,
              std::span<const Example> valid_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  Rng rng(cfg.seed);
  Adam opt;
  History history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = run_epoch(net, opt, train_set, cfg.batch_size, lr, rng);
    rec.valid_loss = mean_loss(net, valid_set);
    if (!valid_set.empty() && !std::isfinite(rec.valid_loss)) {
      throw NumericError("non-finite validation loss at epoch " +
                         std::to_string(epoch));
    }
    history.push_back(rec);
  }
  return history;
}

std::vector<int> predict(Network& net, std::span<const Example> data) {
  std::vector<int> out;
  out.reserve(data.size());
  for_each_batch(data, [&](std::span<const Example> chunk) {
    const Mat probs = net.forward(make_batch(chunk));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      Eigen::Index arg = 0;
      probs.row(r).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
  });
  return out;
}

double accuracy_percent(std::span<const int> predicted,
                        std::span<const int> actual) {
  if (predicted.empty()) throw DataError("accuracy of an empty set");
  if (predicted.size() != actual.size()) {
    throw DataError("prediction and label counts differ");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == actual[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(predicted.size());
}

double evaluate_accuracy(Network& net, std::span<const Example> data) {
  if (data.empty()) throw DataError("evaluation set is empty");
  const std::vector<int> pred = predict(net, data);
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const Example& e : data) labels.push_back(e.label);
  return accuracy_percent(pred, labels);
}

double majority_baseline_percent(std::span<const Example> data) {
  if (data.empty()) throw DataError("baseline of an empty set");
  std::map<int, std::size_t> counts;
  for (const Example& e : data) ++counts[e.label];
  std::size_t best = 0;
  for (const auto& [label, n] : counts) best = std::max(best, n);
  return 100.0 * static_cast<double>(best) / static_cast<double>(data.size());
}

std::pair<Dataset, Dataset> adaptation_split(std::span<const Example> test,
                                             double fraction,
                                             std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw ConfigError("adaptation fraction must lie in [0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < test.size(); ++i) by_class[test[i].label].push_back(i);
  Rng rng(seed);
  std::vector<bool> chosen(test.size(), false);
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < take; ++k) chosen[idx[k]] = true;
  }
  Dataset adapt;
  Dataset rest;
  for (std::size_t i = 0; i < test.size(); ++i) {
    (chosen[i] ? adapt : rest).push_back(test[i]);
  }
  return {std::move(adapt), std::move(rest)};
}

History fine_tune(Network& net, std::span<const Example> adaptation,
                  std::span<const Example> evaluation,
                  const FineTuneConfig& cfg) {
  std::unordered_set<std::uint64_t> eval_ids;
  for (const Example& e : evaluation) eval_ids.insert(e.id);
  for (const Example& e : adaptation) {
    if (eval_ids.contains(e.id)) {
      throw DataError("adaptation sample " + std::to_string(e.id) +
                      " also appears in the evaluation set");
    }
  }
  History history;
  if (cfg.epochs <= 0 || adaptation.empty()) return history;
  Rng rng(cfg.seed);
  Adam opt;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cfg.learning_rate;
    rec.train_loss =
        run_epoch(net, opt, adaptation, cfg.batch_size, cfg.learning_rate, rng);
    rec.valid_loss = std::numeric_limits<double>::quiet_NaN();
    history.push_back(rec);
  }
  return history;
}

nlohmann::json history_to_json(const History& h) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EpochRecord& r : h) {
    nlohmann::json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"lr", r.lr}};
    if (std::isfinite(r.valid_loss)) {
      j["valid_loss"] = r.valid_loss;
    } else {
      j["valid_loss"] = nullptr;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

void save_checkpoint(const std::filesystem::path& path, Network& net,
                     const nlohmann::json& header) {
  io::Writer w(path);
  w.header(kCheckpointMagic, kCheckpointVersion, header);
  const std::vector<Param*> ps = net.params();
  w.pod(static_cast<std::uint64_t>(ps.size()));
  for (const Param* p : ps) w.matrix(p->value);
  w.close();
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  io::Reader r(path);
  Checkpoint ck;
  ck.header = r.header(kCheckpointMagic, kCheckpointVersion);
  const auto count = r.pod<std::uint64_t>();
  if (count > 100000) throw DataError(path.string() + ": implausible parameter count");
  ck.params.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) ck.params.push_back(r.matrix());
  return ck;
}

}  // namespace fusenas::net
