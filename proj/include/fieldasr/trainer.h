// fieldasr/trainer.h
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

#ifndef FIELDASR_TRAINER_H_
#define FIELDASR_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fieldasr/bilstm.h"
#include "fieldasr/optimizer.h"
#include "fieldasr/transcript.h"

namespace fieldasr {

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
  void validate() const;
};

struct TrainConfig {
  int batch_size = 16;
  AdamConfig adam;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 1;
  SplitRatios split;
  // Stop as soon as the dev LER reaches zero.
  bool stop_at_zero_ler = true;
  // Adds wall-clock seconds to the epoch log, which breaks byte-identical
  // logs across runs. Timing always goes to timing.jsonl.
  bool log_seconds = false;
  void validate() const;
};

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

// Seeded shuffle, then train / dev / test blocks of round(ratio * N)
// utterances; test takes the remainder.
CorpusSplit split_corpus(const std::vector<std::string> &ids,
                         const SplitRatios &ratios, std::uint64_t seed);

struct Batch {
  std::vector<std::size_t> members;  // indices into the input list
  std::vector<Index> lengths;        // true frame counts, for masking
  Index padded_length = 0;
};

// Sort by (length, index) and chunk.
std::vector<Batch> make_batches(const std::vector<Index> &lengths, int batch_size);

struct TrainingExample {
  std::string id;
  Matrix<double> features;  // T x D
  std::vector<int> labels;
};

// Throws InfeasibleTargetError naming the first utterance whose target needs
// more frames than it has.
void check_ctc_feasible(const std::vector<TrainingExample> &examples);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_ler = 0.0;
  double learning_rate = 0.0;
  bool improved = false;
  double seconds = 0.0;
};

struct TrainState {
  int epoch = 0;  // completed epochs
  double best_dev_ler = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_improvement = 0;
  std::uint64_t seed = 0;
  AdamState adam;
  std::vector<EpochRecord> log;
};

void save_train_state(const std::filesystem::path &path, const TrainState &state);
TrainState load_train_state(const std::filesystem::path &path);

struct TrainOptions {
  // Empty: nothing is written.
  std::filesystem::path run_dir;
  // Continue from run_dir/last.ckpt and run_dir/train_state.bin.
  bool resume = false;
  std::function<void(const EpochRecord &)> on_epoch;
};

struct TrainResult {
  ModelParameters<double> best;
  ModelParameters<double> last;
  TrainState state;
  std::string stop_reason;
};

// Greedy-decoded micro LER of `model` on `examples`.
double dev_label_error_rate(const ModelParameters<double> &model,
                            const std::vector<TrainingExample> &examples);

// One epoch of mini-batch Adam. Returns the mean per-utterance CTC loss.
double train_epoch(ModelParameters<double> &params, AdamState &adam,
                   const std::vector<TrainingExample> &train,
                   const TrainConfig &config, int epoch);

// Files under run_dir: best.ckpt, last.ckpt, train_state.bin,
// train_log.jsonl, timing.jsonl.
TrainResult train(const std::vector<TrainingExample> &train_set,
                  const std::vector<TrainingExample> &dev_set,
                  const ModelConfig &model_config, const LabelVocabulary &vocab,
                  const TrainConfig &config, const TrainOptions &options = {});

}  // namespace fieldasr

#endif  // FIELDASR_TRAINER_H_
