// fieldasr/experiment.h
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

#ifndef FIELDASR_EXPERIMENT_H_
#define FIELDASR_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fieldasr/bilstm.h"
#include "fieldasr/corpus.h"
#include "fieldasr/evaluation.h"
#include "fieldasr/features.h"
#include "fieldasr/trainer.h"
#include "fieldasr/transcript.h"

namespace fieldasr {

struct DecoderConfig {
  std::string type = "greedy";  // greedy | beam
  int beam_width = 8;
  void validate() const;
};

struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  std::string name;
  std::filesystem::path corpus;  // output directory of `prepare`
  std::filesystem::path runs_dir = "runs";
  TranscriptVariant variant = TranscriptVariant::kOrigNoSpaces;
  std::filesystem::path g2p_rules;
  std::filesystem::path alignments;
  double pause_threshold_s = 0.150;
  DecoderConfig decoder;
  FeatureConfig features;
  ModelConfig model;  // input_dim and vocab_size are filled in at run time
  TrainConfig train;
  std::uint64_t seed = 1;
  std::vector<std::size_t> subset_sizes;

  std::filesystem::path run_dir() const { return runs_dir / name; }
  void validate() const;
};

// Relative paths resolve against `base_dir`. Unknown keys, a missing or
// unsupported schema_version and an unknown variant are ConfigErrors.
ExperimentConfig parse_experiment_config(std::istream &in,
                                         const std::filesystem::path &base_dir,
                                         const std::string &source_name);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);
// Canonical form with absolute paths, as written into run directories.
std::string experiment_config_json(const ExperimentConfig &config);

// Model size used by --fast.
void apply_fast_model(ExperimentConfig &config);

struct ResultsRow {
  std::string experiment;
  std::size_t utterances = 0;
  double minutes = 0.0;
  double ler = 0.0;
};

// Columns Experiment, Utterances, Minutes, LER separated by two spaces and
// right-aligned to the widest cell; minutes as integers, LER to 3 decimals.
std::string emit_results_table(const std::vector<ResultsRow> &rows);
void append_results(const std::filesystem::path &path, const ResultsRow &row);
std::vector<ResultsRow> read_results(const std::filesystem::path &path);

// A prepared corpus encoded for one transcript variant.
class ExperimentData {
 public:
  explicit ExperimentData(const ExperimentConfig &config);

  const ExperimentConfig &config() const { return config_; }
  const PreparedCorpus &corpus() const { return corpus_; }
  const LabelVocabulary &vocab() const { return vocab_; }
  std::vector<std::string> ids() const;
  const UtteranceRecord &record(const std::string &id) const;
  const std::vector<int> &labels(const std::string &id) const;
  double minutes(const std::vector<std::string> &ids) const;

  // Features are computed once and kept on disk under `cache_dir`.
  std::vector<TrainingExample> examples(const std::vector<std::string> &ids,
                                        const std::filesystem::path &cache_dir) const;

 private:
  ExperimentConfig config_;
  PreparedCorpus corpus_;
  LabelVocabulary vocab_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<int>> labels_;
};

struct RunSummary {
  ResultsRow row;
  CorpusSplit split;
  EvaluationReport test_report;
  std::string stop_reason;
};

struct RunOptions {
  bool resume = false;
  bool quiet = false;
  std::ostream *log = nullptr;
};

// prepare-ed corpus -> train -> evaluate on test. Artifacts under
// config.run_dir(); the row is appended to runs_dir/results.jsonl.
RunSummary run_experiment(const ExperimentConfig &config, const RunOptions &options = {});

// Nested subsets of the train split from one seeded shuffle; dev and test
// identical across rows. Each row runs under run_dir()/sweep-<size>.
std::vector<RunSummary> augmentation_sweep(const ExperimentConfig &config,
                                           const std::vector<std::size_t> &sizes,
                                           const RunOptions &options = {});

// First `size` ids of the subset shuffle, returned in `train` order.
std::vector<std::string> nested_subset(const std::vector<std::string> &train,
                                       std::size_t size, std::uint64_t seed);

// Re-scores the best checkpoint of a run directory on one split and writes
// report_<split>.json.
RunSummary evaluate_run(const std::filesystem::path &run_dir, const std::string &split);

struct TranscribeResult {
  std::filesystem::path path;
  std::string text;
  std::string error;  // non-empty when the file failed
};

// beam_width 0 uses the run's configured decoder.
std::vector<TranscribeResult> transcribe_files(const std::filesystem::path &run_dir,
                                               const std::vector<std::filesystem::path> &wavs,
                                               int beam_width = 0);

std::string error_report(const std::filesystem::path &run_dir, std::size_t top_k,
                         const std::string &split = "test");

}  // namespace fieldasr

#endif  // FIELDASR_EXPERIMENT_H_
