// trainer.cc
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

#include "fieldasr/trainer.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "fieldasr/checkpoint.h"
#include "fieldasr/ctc.h"
#include "fieldasr/evaluation.h"
#include "fieldasr/random.h"

namespace fieldasr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void SplitRatios::validate() const {
  for (double r : {train, dev, test}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("split ratios must lie in [0, 1]");
  }
  if (std::abs(train + dev + test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1, got " +
                      std::to_string(train + dev + test));
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (patience < 0) {
    throw ConfigError("patience must be >= 0");
  }
  if (!(adam.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(adam.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  split.validate();
}

CorpusSplit split_corpus(const std::vector<std::string> &ids,
                         const SplitRatios &ratios, std::uint64_t seed) {
  ratios.validate();
  const std::size_t n = ids.size();
  if (n < 3) {
    throw RangeError("corpus has " + std::to_string(n) +
                     " utterances; splitting needs at least 3");
  }
  std::vector<std::string> order = ids;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  auto n_train = static_cast<std::size_t>(std::llround(ratios.train * double(n)));
  auto n_dev = static_cast<std::size_t>(std::llround(ratios.dev * double(n)));
  n_train = std::min(n_train, n);
  n_dev = std::min(n_dev, n - n_train);
  CorpusSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.dev.assign(order.begin() + n_train, order.begin() + n_train + n_dev);
  split.test.assign(order.begin() + n_train + n_dev, order.end());
  return split;
}

std::vector<Batch> make_batches(const std::vector<Index> &lengths, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lengths[a] < lengths[b];
  });
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < order.size(); i += std::size_t(batch_size)) {
    Batch b;
    const std::size_t end = std::min(order.size(), i + std::size_t(batch_size));
    for (std::size_t k = i; k < end; ++k) {
      b.members.push_back(order[k]);
      b.lengths.push_back(lengths[order[k]]);
      b.padded_length = std::max(b.padded_length, lengths[order[k]]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

void check_ctc_feasible(const std::vector<TrainingExample> &examples) {
  for (const auto &ex : examples) {
    const Index need = std::max<Index>(ctc_min_frames(ex.labels), 1);
    if (ex.features.rows() < need) {
      throw InfeasibleTargetError("utterance " + ex.id + " has " +
                                  std::to_string(ex.features.rows()) +
                                  " frames but its target needs " +
                                  std::to_string(need));
    }
  }
}

namespace {

constexpr char kStateMagic[] = "FASRSTAT";
constexpr std::uint32_t kStateVersion = 1;

ordered_json epoch_json(const EpochRecord &r, bool with_seconds) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["dev_ler"] = r.dev_ler;
  if (with_seconds) j["seconds"] = r.seconds;
  j["lr"] = r.learning_rate;
  j["improved"] = r.improved;
  return j;
}

void write_log(const fs::path &path, const std::vector<EpochRecord> &log,
               bool with_seconds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto &r : log) out << epoch_json(r, with_seconds).dump() << '\n';
}

}  // namespace

void save_train_state(const fs::path &path, const TrainState &state) {
  BinaryWriter w;
  w.bytes(std::string_view(kStateMagic, 8));
  w.u32(kStateVersion);
  w.u32(static_cast<std::uint32_t>(state.epoch));
  w.f64(state.best_dev_ler);
  w.u32(static_cast<std::uint32_t>(state.best_epoch));
  w.u32(static_cast<std::uint32_t>(state.epochs_since_improvement));
  w.u64(state.seed);
  w.u64(state.adam.step);
  w.u64(static_cast<std::uint64_t>(state.adam.first_moment.size()));
  for (Index i = 0; i < state.adam.first_moment.size(); ++i) {
    w.f64(state.adam.first_moment[i]);
  }
  for (Index i = 0; i < state.adam.second_moment.size(); ++i) {
    w.f64(state.adam.second_moment[i]);
  }
  w.u32(static_cast<std::uint32_t>(state.log.size()));
  for (const auto &r : state.log) {
    w.u32(static_cast<std::uint32_t>(r.epoch));
    w.f64(r.train_loss);
    w.f64(r.dev_ler);
    w.f64(r.learning_rate);
    w.u32(r.improved ? 1 : 0);
    w.f64(r.seconds);
  }
  w.save(path);
}

TrainState load_train_state(const fs::path &path) {
  BinaryReader r = BinaryReader::open(path);
  if (r.bytes(8) != std::string_view(kStateMagic, 8)) {
    throw FormatError(path.string() + ": not a training state file");
  }
  if (const auto v = r.u32(); v != kStateVersion) {
    throw FormatError(path.string() + ": unsupported state version " + std::to_string(v));
  }
  TrainState s;
  s.epoch = static_cast<int>(r.u32());
  s.best_dev_ler = r.f64();
  s.best_epoch = static_cast<int>(r.u32());
  s.epochs_since_improvement = static_cast<int>(r.u32());
  s.seed = r.u64();
  const std::uint64_t step = r.u64();
  const auto size = static_cast<Index>(r.u64());
  s.adam = AdamState(size);
  s.adam.step = step;
  for (Index i = 0; i < size; ++i) s.adam.first_moment[i] = r.f64();
  for (Index i = 0; i < size; ++i) s.adam.second_moment[i] = r.f64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    EpochRecord e;
    e.epoch = static_cast<int>(r.u32());
    e.train_loss = r.f64();
    e.dev_ler = r.f64();
    e.learning_rate = r.f64();
    e.improved = r.u32() != 0;
    e.seconds = r.f64();
    s.log.push_back(e);
  }
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return s;
}

double dev_label_error_rate(const ModelParameters<double> &model,
                            const std::vector<TrainingExample> &examples) {
  std::vector<std::pair<LabelSequence, LabelSequence>> pairs;
  pairs.reserve(examples.size());
  for (const auto &ex : examples) {
    const Matrix<double> logits = forward(model, ex.features);
    pairs.push_back({{ex.id, ex.labels}, {ex.id, greedy_decode<double>(logits).labels}});
  }
  return corpus_ler(pairs);
}

double train_epoch(ModelParameters<double> &params, AdamState &adam,
                   const std::vector<TrainingExample> &train,
                   const TrainConfig &config, int epoch) {
  std::vector<Index> lengths;
  lengths.reserve(train.size());
  for (const auto &ex : train) lengths.push_back(ex.features.rows());
  std::vector<Batch> batches = make_batches(lengths, config.batch_size);
  Rng rng(derive_seed(config.seed, "batching", static_cast<std::uint64_t>(epoch)));
  rng.shuffle(batches);

  ModelParameters<double> grads(params.config());
  ForwardCache<double> cache;
  double total_loss = 0.0;
  for (const Batch &batch : batches) {
    grads.set_zero();
    double batch_loss = 0.0;
    for (std::size_t m : batch.members) {
      const TrainingExample &ex = train[m];
      const Matrix<double> logits = forward(params, ex.features, &cache);
      const CtcResult<double> ctc = ctc_loss<double>(logits, ex.labels);
      if (!std::isfinite(ctc.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            " on utterance " + ex.id);
      }
      batch_loss += ctc.loss;
      accumulate_gradients(params, cache, ctc.grad, grads);
    }
    total_loss += batch_loss;
    grads.values() /= double(batch.members.size());
    adam_step(params, grads, adam, config.adam);
  }
  return total_loss / double(train.size());
}

TrainResult train(const std::vector<TrainingExample> &train_set,
                  const std::vector<TrainingExample> &dev_set,
                  const ModelConfig &model_config, const LabelVocabulary &vocab,
                  const TrainConfig &config, const TrainOptions &options) {
  config.validate();
  model_config.validate();
  if (train_set.empty()) throw RangeError("training split is empty");
  if (dev_set.empty()) throw RangeError("dev split is empty");
  if (model_config.vocab_size != vocab.num_labels()) {
    throw ConfigError("model vocab_size does not match the label vocabulary");
  }
  check_ctc_feasible(train_set);
  check_ctc_feasible(dev_set);

  const bool persist = !options.run_dir.empty();
  if (persist) fs::create_directories(options.run_dir);
  const fs::path best_path = options.run_dir / "best.ckpt";
  const fs::path last_path = options.run_dir / "last.ckpt";
  const fs::path state_path = options.run_dir / "train_state.bin";
  const fs::path log_path = options.run_dir / "train_log.jsonl";
  const fs::path timing_path = options.run_dir / "timing.jsonl";

  TrainResult result;
  TrainState &state = result.state;
  ModelParameters<double> params;
  if (options.resume) {
    if (!persist) throw UsageError("resume needs a run directory");
    state = load_train_state(state_path);
    if (state.seed != config.seed) {
      throw ConfigError("resume seed differs from the original run");
    }
    Checkpoint last = load_checkpoint(last_path);
    if (!(last.params.config() == model_config) || !(last.vocab == vocab)) {
      throw ConfigError("resume checkpoint does not match the model config");
    }
    params = std::move(last.params);
    result.best = state.best_epoch > 0 ? load_checkpoint(best_path).params : params;
  } else {
    params = init_parameters(model_config, derive_seed(config.seed, "init"));
    state.seed = config.seed;
    state.adam = AdamState(params.size());
    result.best = params;
  }

  auto should_stop = [&]() -> std::string {
    if (config.stop_at_zero_ler && state.best_epoch > 0 && state.best_dev_ler == 0.0) {
      return "dev LER reached zero";
    }
    if (state.epochs_since_improvement > config.patience) {
      return "no dev improvement for " + std::to_string(state.epochs_since_improvement) +
             " epochs";
    }
    if (state.epoch >= config.max_epochs) return "max_epochs reached";
    return {};
  };

  std::ofstream timing;
  if (persist) {
    timing.open(timing_path, options.resume ? std::ios::app : std::ios::trunc);
  }
  while ((result.stop_reason = should_stop()).empty()) {
    const int epoch = state.epoch + 1;
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = config.adam.learning_rate;
    rec.train_loss = train_epoch(params, state.adam, train_set, config, epoch);
    rec.dev_ler = dev_label_error_rate(params, dev_set);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    state.epoch = epoch;
    if (rec.dev_ler < state.best_dev_ler) {
      rec.improved = true;
      state.best_dev_ler = rec.dev_ler;
      state.best_epoch = epoch;
      state.epochs_since_improvement = 0;
      result.best = params;
      if (persist) save_checkpoint(best_path, params, vocab);
    } else {
      ++state.epochs_since_improvement;
    }
    state.log.push_back(rec);
    if (persist) {
      save_checkpoint(last_path, params, vocab);
      save_train_state(state_path, state);
      write_log(log_path, state.log, config.log_seconds);
      timing << ordered_json{{"epoch", epoch}, {"seconds", rec.seconds}}.dump() << '\n';
      timing.flush();
    }
    if (options.on_epoch) options.on_epoch(rec);
  }
  result.last = std::move(params);
  return result;
}

}  // namespace fieldasr
