// tools/fieldasr.cc
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
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fieldasr/corpus.h"
#include "fieldasr/experiment.h"
#include "fieldasr/synthetic.h"

namespace fs = std::filesystem;
using namespace fieldasr;

namespace {

enum ExitCode { kOk = 0, kConfigExit = 1, kDataExit = 2, kTrainingExit = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kUsage:
      return kConfigExit;
    case ErrorKind::kData:
      return kDataExit;
    case ErrorKind::kTraining:
      return kTrainingExit;
  }
  return kDataExit;
}

std::vector<std::size_t> parse_sizes(const std::string &text) {
  std::vector<std::size_t> sizes;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ConfigError("bad subset size \"" + item + "\"");
    }
    sizes.push_back(static_cast<std::size_t>(v));
  }
  return sizes;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"fieldasr: character-level speech recognition for small corpora"};
  app.require_subcommand(1);

  std::string corpus_dir, out_dir;
  std::vector<std::string> tiers;
  auto *prepare = app.add_subcommand("prepare", "Clean a corpus into a manifest");
  prepare->add_option("corpus-dir", corpus_dir, "Directory with *.eaf and/or manifest.jsonl")
      ->required();
  prepare->add_option("--out", out_dir, "Output directory")->required();
  prepare->add_option("--tier", tiers, "Keep only these tier ids");

  std::string config_path;
  bool fast = false, resume = false, quiet = false;
  auto *train = app.add_subcommand("train", "Train and evaluate one experiment");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train->add_flag("--fast", fast, "Use a 2x64 model");
  train->add_flag("--resume", resume, "Continue from the run's last checkpoint");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  std::string run_dir, split = "test";
  auto *evaluate = app.add_subcommand("evaluate", "Score a run's best checkpoint");
  evaluate->add_option("--run", run_dir, "Run directory")->required();
  evaluate->add_option("--split", split, "train, dev or test");

  std::vector<std::string> wavs;
  int beam = 0;
  std::string text_out;
  auto *transcribe = app.add_subcommand("transcribe", "Decode WAV files");
  transcribe->add_option("--run", run_dir, "Run directory")->required();
  transcribe->add_option("wav", wavs, "Mono PCM16 WAV files")->required();
  transcribe->add_option("--beam", beam, "Prefix beam search with this width");
  transcribe->add_option("--out", text_out, "Also write <stem>.txt files here");

  std::string sizes_text;
  auto *sweep = app.add_subcommand("sweep", "Train on nested subsets of the train split");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--sizes", sizes_text, "Comma-separated utterance counts");
  sweep->add_flag("--fast", fast, "Use a 2x64 model");
  sweep->add_flag("--quiet", quiet, "No per-epoch progress");

  std::size_t top_k = 10;
  auto *report = app.add_subcommand("error-report", "Most frequent label confusions");
  report->add_option("--run", run_dir, "Run directory")->required();
  report->add_option("--top-k", top_k, "Number of rows");
  report->add_option("--split", split, "Report to read");

  SyntheticConfig synth_config;
  auto *synth = app.add_subcommand("synth", "Write a synthetic tone corpus");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--utterances", synth_config.num_utterances, "Number of utterances");
  synth->add_option("--seed", synth_config.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigExit;
  }

  try {
    if (*prepare) {
      PrepareOptions opts;
      opts.tiers = tiers;
      const CorpusManifest m = prepare_corpus(corpus_dir, out_dir, opts);
      std::cout << stats_table(m.stats);
    } else if (*train) {
      ExperimentConfig config = load_experiment_config(config_path);
      if (fast) apply_fast_model(config);
      RunOptions opts;
      opts.resume = resume;
      opts.quiet = quiet;
      const RunSummary s = run_experiment(config, opts);
      std::cout << emit_results_table({s.row});
    } else if (*evaluate) {
      const RunSummary s = evaluate_run(run_dir, split);
      std::cout << emit_results_table({s.row});
    } else if (*transcribe) {
      std::vector<fs::path> paths(wavs.begin(), wavs.end());
      if (!text_out.empty()) fs::create_directories(text_out);
      bool failed = false;
      for (const auto &r : transcribe_files(run_dir, paths, beam)) {
        if (!r.error.empty()) {
          std::cerr << "error: " << r.error << '\n';
          failed = true;
          continue;
        }
        std::cout << r.path.string() << '\t' << r.text << '\n';
        if (!text_out.empty()) {
          std::ofstream(fs::path(text_out) / (r.path.stem().string() + ".txt")) << r.text
                                                                                << '\n';
        }
      }
      return failed ? kDataExit : kOk;
    } else if (*sweep) {
      ExperimentConfig config = load_experiment_config(config_path);
      if (fast) apply_fast_model(config);
      const std::vector<std::size_t> sizes =
          sizes_text.empty() ? config.subset_sizes : parse_sizes(sizes_text);
      RunOptions opts;
      opts.quiet = quiet;
      std::vector<ResultsRow> rows;
      for (const auto &s : augmentation_sweep(config, sizes, opts)) rows.push_back(s.row);
      std::cout << emit_results_table(rows);
    } else if (*report) {
      std::cout << error_report(run_dir, top_k, split);
    } else if (*synth) {
      const auto corpus = write_synthetic_corpus(out_dir, synth_config);
      std::cout << "wrote " << corpus.size() << " utterances to " << out_dir << '\n';
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataExit;
  }
  return kOk;
}
