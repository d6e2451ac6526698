// experiment.cc
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

#include "fieldasr/experiment.h"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fieldasr/audio.h"
#include "fieldasr/checkpoint.h"
#include "fieldasr/ctc.h"
#include "fieldasr/random.h"

namespace fieldasr {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json &obj, const std::set<std::string> &allowed,
                const std::string &where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto &item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
    }
  }
}

template <typename T>
void read_key(const json &obj, const char *key, T &out, const std::string &where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception &) {
    throw ConfigError(where + ": key \"" + key + "\" has the wrong type");
  }
}

fs::path resolve(const fs::path &base, const std::string &p) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return fs::absolute(path).lexically_normal();
}

json read_json_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

template <typename F>
auto in_stage(const std::string &stage, F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error &e) {
    throw Error(e.kind(), stage + ": " + e.what());
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kData, stage + ": " + e.what());
  }
}

DecodedSequence decode(const Matrix<double> &logits, const DecoderConfig &decoder) {
  if (decoder.type == "beam") return beam_decode<double>(logits, decoder.beam_width);
  return greedy_decode<double>(logits);
}

}  // namespace

void DecoderConfig::validate() const {
  if (type != "greedy" && type != "beam") {
    throw ConfigError("decoder type must be greedy or beam, got " + type);
  }
  if (beam_width < 1) throw ConfigError("beam_width must be at least 1");
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("experiment name is empty");
  if (corpus.empty()) throw ConfigError("corpus path is empty");
  decoder.validate();
  features.validate();
  train.validate();
  if (model.num_layers < 1 || model.hidden_units < 1) {
    throw ConfigError("model needs at least one layer and one hidden unit");
  }
  if ((variant == TranscriptVariant::kIpaNoSpaces ||
       variant == TranscriptVariant::kIpaPauseBoundaries) &&
      g2p_rules.empty()) {
    throw ConfigError(std::string(variant_name(variant)) + " needs g2p_rules");
  }
  if (variant == TranscriptVariant::kIpaPauseBoundaries && alignments.empty()) {
    throw ConfigError("ipa-pause-boundaries needs alignments");
  }
  if (!(pause_threshold_s >= 0.0)) throw ConfigError("pause_threshold_s must be >= 0");
  for (std::size_t i = 1; i < subset_sizes.size(); ++i) {
    if (subset_sizes[i] <= subset_sizes[i - 1]) {
      throw ConfigError("subset_sizes must be strictly ascending");
    }
  }
}

ExperimentConfig parse_experiment_config(std::istream &in, const fs::path &base_dir,
                                         const std::string &source_name) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  const std::string where = source_name;
  check_keys(j,
             {"schema_version", "name", "corpus", "runs_dir", "variant", "g2p_rules",
              "alignments", "pause_threshold_s", "decoder", "features", "model", "train",
              "seed", "subset_sizes"},
             where);
  if (!j.contains("schema_version")) throw ConfigError(where + ": missing schema_version");
  int version = 0;
  read_key(j, "schema_version", version, where);
  if (version != ExperimentConfig::kSchemaVersion) {
    throw ConfigError(where + ": unsupported schema_version " + std::to_string(version));
  }
  for (const char *key : {"name", "corpus", "variant"}) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
  }

  ExperimentConfig c;
  std::string s;
  read_key(j, "name", c.name, where);
  read_key(j, "corpus", s, where);
  c.corpus = resolve(base_dir, s);
  s = "runs";
  read_key(j, "runs_dir", s, where);
  c.runs_dir = resolve(base_dir, s);
  s.clear();
  read_key(j, "variant", s, where);
  const auto variant = parse_variant(s);
  if (!variant) throw ConfigError(where + ": unknown transcript variant \"" + s + "\"");
  c.variant = *variant;
  s.clear();
  read_key(j, "g2p_rules", s, where);
  c.g2p_rules = resolve(base_dir, s);
  s.clear();
  read_key(j, "alignments", s, where);
  c.alignments = resolve(base_dir, s);
  read_key(j, "pause_threshold_s", c.pause_threshold_s, where);
  read_key(j, "seed", c.seed, where);
  read_key(j, "subset_sizes", c.subset_sizes, where);

  if (j.contains("decoder")) {
    const json &d = j["decoder"];
    check_keys(d, {"type", "beam_width"}, where + ".decoder");
    read_key(d, "type", c.decoder.type, where);
    read_key(d, "beam_width", c.decoder.beam_width, where);
  }
  if (j.contains("features")) {
    const json &f = j["features"];
    const std::string w = where + ".features";
    check_keys(f,
               {"sample_rate", "frame_length_s", "frame_shift_s", "nfft", "num_mel",
                "f_min", "f_max", "preemphasis", "use_energy", "delta_order",
                "delta_window", "log_floor", "cmvn"},
               w);
    FeatureConfig &fc = c.features;
    read_key(f, "sample_rate", fc.sample_rate, w);
    read_key(f, "frame_length_s", fc.frame_length_s, w);
    read_key(f, "frame_shift_s", fc.frame_shift_s, w);
    read_key(f, "nfft", fc.nfft, w);
    read_key(f, "num_mel", fc.num_mel, w);
    read_key(f, "f_min", fc.f_min, w);
    read_key(f, "f_max", fc.f_max, w);
    read_key(f, "preemphasis", fc.preemphasis, w);
    read_key(f, "use_energy", fc.use_energy, w);
    read_key(f, "delta_order", fc.delta_order, w);
    read_key(f, "delta_window", fc.delta_window, w);
    read_key(f, "log_floor", fc.log_floor, w);
    read_key(f, "cmvn", fc.cmvn, w);
  }
  if (j.contains("model")) {
    const json &m = j["model"];
    check_keys(m, {"num_layers", "hidden_units"}, where + ".model");
    read_key(m, "num_layers", c.model.num_layers, where);
    read_key(m, "hidden_units", c.model.hidden_units, where);
  }
  if (j.contains("train")) {
    const json &t = j["train"];
    const std::string w = where + ".train";
    check_keys(t,
               {"batch_size", "learning_rate", "beta1", "beta2", "epsilon", "max_epochs",
                "patience", "grad_clip_norm", "weight_decay", "split",
                "stop_at_zero_ler", "log_seconds"},
               w);
    TrainConfig &tc = c.train;
    read_key(t, "batch_size", tc.batch_size, w);
    read_key(t, "learning_rate", tc.adam.learning_rate, w);
    read_key(t, "beta1", tc.adam.beta1, w);
    read_key(t, "beta2", tc.adam.beta2, w);
    read_key(t, "epsilon", tc.adam.epsilon, w);
    read_key(t, "max_epochs", tc.max_epochs, w);
    read_key(t, "patience", tc.patience, w);
    read_key(t, "grad_clip_norm", tc.adam.clip_norm, w);
    read_key(t, "weight_decay", tc.adam.weight_decay, w);
    read_key(t, "stop_at_zero_ler", tc.stop_at_zero_ler, w);
    read_key(t, "log_seconds", tc.log_seconds, w);
    if (t.contains("split")) {
      const json &sp = t["split"];
      check_keys(sp, {"train", "dev", "test"}, w + ".split");
      read_key(sp, "train", tc.split.train, w);
      read_key(sp, "dev", tc.split.dev, w);
      read_key(sp, "test", tc.split.test, w);
    }
  }
  c.train.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_experiment_config(in, fs::absolute(path).parent_path(), path.string());
}

std::string experiment_config_json(const ExperimentConfig &c) {
  ordered_json j;
  j["schema_version"] = ExperimentConfig::kSchemaVersion;
  j["name"] = c.name;
  j["corpus"] = c.corpus.string();
  j["runs_dir"] = c.runs_dir.string();
  j["variant"] = std::string(variant_name(c.variant));
  if (!c.g2p_rules.empty()) j["g2p_rules"] = c.g2p_rules.string();
  if (!c.alignments.empty()) j["alignments"] = c.alignments.string();
  j["pause_threshold_s"] = c.pause_threshold_s;
  j["decoder"] = {{"type", c.decoder.type}, {"beam_width", c.decoder.beam_width}};
  const FeatureConfig &f = c.features;
  j["features"] = {{"sample_rate", f.sample_rate},   {"frame_length_s", f.frame_length_s},
                   {"frame_shift_s", f.frame_shift_s}, {"nfft", f.nfft},
                   {"num_mel", f.num_mel},           {"f_min", f.f_min},
                   {"f_max", f.f_max},               {"preemphasis", f.preemphasis},
                   {"use_energy", f.use_energy},     {"delta_order", f.delta_order},
                   {"delta_window", f.delta_window}, {"log_floor", f.log_floor},
                   {"cmvn", f.cmvn}};
  j["model"] = {{"num_layers", c.model.num_layers}, {"hidden_units", c.model.hidden_units}};
  const TrainConfig &t = c.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"learning_rate", t.adam.learning_rate},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"epsilon", t.adam.epsilon},
                {"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"grad_clip_norm", t.adam.clip_norm},
                {"weight_decay", t.adam.weight_decay},
                {"split", {{"train", t.split.train}, {"dev", t.split.dev}, {"test", t.split.test}}},
                {"stop_at_zero_ler", t.stop_at_zero_ler},
                {"log_seconds", t.log_seconds}};
  j["seed"] = c.seed;
  j["subset_sizes"] = c.subset_sizes;
  return j.dump(2) + "\n";
}

void apply_fast_model(ExperimentConfig &config) {
  config.model.num_layers = 2;
  config.model.hidden_units = 64;
}

std::string emit_results_table(const std::vector<ResultsRow> &rows) {
  std::ostringstream out;
  out << "Experiment  Utterances  Minutes  LER\n";
  std::vector<std::array<std::string, 4>> cells;
  std::array<std::size_t, 4> width{};
  for (const auto &r : rows) {
    std::ostringstream ler;
    ler << std::fixed << std::setprecision(3) << r.ler;
    std::array<std::string, 4> c{r.experiment, std::to_string(r.utterances),
                                 std::to_string(std::llround(r.minutes)), ler.str()};
    for (std::size_t i = 0; i < 4; ++i) width[i] = std::max(width[i], c[i].size());
    cells.push_back(std::move(c));
  }
  for (const auto &c : cells) {
    out << std::left << std::setw(int(width[0])) << c[0] << std::right;
    for (std::size_t i = 1; i < 4; ++i) out << "  " << std::setw(int(width[i])) << c[i];
    out << '\n';
  }
  return out.str();
}

void append_results(const fs::path &path, const ResultsRow &row) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << ordered_json{{"experiment", row.experiment},
                      {"utterances", row.utterances},
                      {"minutes", row.minutes},
                      {"ler", row.ler}}
             .dump()
      << '\n';
}

std::vector<ResultsRow> read_results(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ResultsRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    rows.push_back({j.at("experiment").get<std::string>(), j.at("utterances").get<std::size_t>(),
                    j.at("minutes").get<double>(), j.at("ler").get<double>()});
  }
  return rows;
}

ExperimentData::ExperimentData(const ExperimentConfig &config) : config_(config) {
  corpus_ = load_prepared_corpus(config.corpus);
  if (corpus_.sample_rate != 0 && corpus_.sample_rate != config.features.sample_rate) {
    throw ConfigError("corpus is sampled at " + std::to_string(corpus_.sample_rate) +
                      " Hz but features expect " +
                      std::to_string(config.features.sample_rate) + " Hz");
  }
  std::optional<G2PRuleSet> g2p;
  std::map<std::string, WordAlignment> alignments;
  VariantResources res;
  res.pause_threshold_s = config.pause_threshold_s;
  if (!config.g2p_rules.empty()) {
    g2p = G2PRuleSet::from_file(config.g2p_rules);
    res.g2p = &*g2p;
  }
  if (!config.alignments.empty()) {
    alignments = read_alignments_file(config.alignments);
    res.alignments = &alignments;
  }
  std::vector<std::vector<std::string>> units;
  units.reserve(corpus_.records.size());
  for (std::size_t i = 0; i < corpus_.records.size(); ++i) {
    const UtteranceRecord &r = corpus_.records[i];
    index_[r.id] = i;
    units.push_back(variant_units(r.id, r.transcript, config.variant, res));
  }
  vocab_ = LabelVocabulary::build(units);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const std::string &id = corpus_.records[i].id;
    labels_[id] = encode_units(units[i], vocab_, id).labels;
  }
}

std::vector<std::string> ExperimentData::ids() const {
  std::vector<std::string> out;
  out.reserve(corpus_.records.size());
  for (const auto &r : corpus_.records) out.push_back(r.id);
  return out;
}

const UtteranceRecord &ExperimentData::record(const std::string &id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ReferenceError("unknown utterance " + id);
  return corpus_.records[it->second];
}

const std::vector<int> &ExperimentData::labels(const std::string &id) const {
  const auto it = labels_.find(id);
  if (it == labels_.end()) throw ReferenceError("unknown utterance " + id);
  return it->second;
}

double ExperimentData::minutes(const std::vector<std::string> &ids) const {
  double seconds = 0.0;
  for (const auto &id : ids) seconds += record(id).duration();
  return seconds / 60.0;
}

std::vector<TrainingExample> ExperimentData::examples(const std::vector<std::string> &ids,
                                                      const fs::path &cache_dir) const {
  const std::string fingerprint = [&] {
    ExperimentConfig c;
    c.features = config_.features;
    return json::parse(experiment_config_json(c))["features"].dump();
  }();
  if (!cache_dir.empty()) {
    const fs::path stamp = cache_dir / "features.json";
    std::string existing;
    if (std::ifstream in(stamp); in) std::getline(in, existing);
    if (existing != fingerprint) {
      fs::remove_all(cache_dir);
      fs::create_directories(cache_dir);
      write_text(stamp, fingerprint + "\n");
    }
  }

  const FeatureExtractor extractor(config_.features);
  std::vector<TrainingExample> out(ids.size());
  std::string session_path;
  AudioBuffer session;
  // Group reads by session file so each recording is decoded once.
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return record(ids[a]).audio < record(ids[b]).audio;
  });
  for (std::size_t k : order) {
    const UtteranceRecord &r = record(ids[k]);
    TrainingExample &ex = out[k];
    ex.id = r.id;
    ex.labels = labels(r.id);
    const fs::path cached = cache_dir.empty() ? fs::path() : cache_dir / (r.id + ".feat");
    if (!cached.empty() && fs::exists(cached)) {
      ex.features = read_feature_cache(cached).frames.cast<double>();
      continue;
    }
    const fs::path audio_path = corpus_.audio_path(r);
    if (audio_path.string() != session_path) {
      session = read_wav(audio_path);
      session_path = audio_path.string();
    }
    const FeatureMatrix<double> feats =
        extractor.compute(slice_audio(session, r.start(), r.end()));
    if (!cached.empty()) write_feature_cache(cached, feats);
    // Rounded through f32 so cached and fresh features agree bit for bit.
    ex.features = feats.frames.cast<float>().cast<double>();
  }
  return out;
}

std::vector<std::string> nested_subset(const std::vector<std::string> &train,
                                       std::size_t size, std::uint64_t seed) {
  if (size > train.size()) {
    throw ConfigError("subset size " + std::to_string(size) +
                      " exceeds the training split (max " + std::to_string(train.size()) +
                      ")");
  }
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "subset"));
  rng.shuffle(order);
  order.resize(size);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  out.reserve(size);
  for (std::size_t i : order) out.push_back(train[i]);
  return out;
}

namespace {

ordered_json split_json(const CorpusSplit &split) {
  return {{"train", split.train}, {"dev", split.dev}, {"test", split.test}};
}

CorpusSplit read_split(const fs::path &path) {
  const json j = read_json_file(path);
  CorpusSplit s;
  s.train = j.at("train").get<std::vector<std::string>>();
  s.dev = j.at("dev").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  return s;
}

const std::vector<std::string> &split_ids(const CorpusSplit &split, const std::string &name) {
  if (name == "train") return split.train;
  if (name == "dev") return split.dev;
  if (name == "test") return split.test;
  throw ConfigError("split must be train, dev or test, got " + name);
}

EvaluationReport score(const ModelParameters<double> &model,
                       const std::vector<TrainingExample> &examples,
                       const LabelVocabulary &vocab, const ExperimentConfig &config) {
  std::vector<LabelSequence> refs, hyps;
  for (const auto &ex : examples) {
    refs.push_back({ex.id, ex.labels});
    hyps.push_back({ex.id, decode(forward(model, ex.features), config.decoder).labels});
  }
  EvaluationReport report = evaluate(refs, hyps, vocab);
  report.decoder = config.decoder.type == "beam"
                       ? "beam:" + std::to_string(config.decoder.beam_width)
                       : "greedy";
  report.variant = std::string(variant_name(config.variant));
  return report;
}

void write_vocab(const fs::path &path, const LabelVocabulary &vocab) {
  write_text(path, ordered_json(vocab.labels()).dump() + "\n");
}

fs::path feature_cache_dir(const ExperimentConfig &config) {
  return config.run_dir() / "features";
}

std::ostream &log_stream(const RunOptions &options) {
  static std::ostringstream sink;
  if (options.quiet) {
    sink.str({});
    return sink;
  }
  return options.log ? *options.log : std::cerr;
}

RunSummary train_and_evaluate(const ExperimentConfig &config, const ExperimentData &data,
                              const CorpusSplit &split, const fs::path &run_dir,
                              const std::string &experiment_id, const RunOptions &options) {
  std::ostream &log = log_stream(options);
  fs::create_directories(run_dir);
  write_text(run_dir / "config.json", experiment_config_json(config));
  write_vocab(run_dir / "vocab.json", data.vocab());
  write_text(run_dir / "splits.json", split_json(split).dump(2) + "\n");

  const fs::path cache = feature_cache_dir(config);
  std::vector<TrainingExample> train_ex, dev_ex, test_ex;
  in_stage("features", [&] {
    train_ex = data.examples(split.train, cache);
    dev_ex = data.examples(split.dev, cache);
    test_ex = data.examples(split.test, cache);
  });

  ModelConfig model = config.model;
  model.input_dim = config.features.dims();
  model.vocab_size = data.vocab().num_labels();
  TrainConfig tc = config.train;
  tc.seed = config.seed;

  TrainOptions topt;
  topt.run_dir = run_dir;
  topt.resume = options.resume;
  topt.on_epoch = [&](const EpochRecord &r) {
    log << experiment_id << " epoch " << r.epoch << " loss " << std::fixed
        << std::setprecision(4) << r.train_loss << " dev_ler " << r.dev_ler
        << (r.improved ? " *" : "") << '\n'
        << std::defaultfloat;
  };
  TrainResult result = in_stage("train", [&] {
    return fieldasr::train(train_ex, dev_ex, model, data.vocab(), tc, topt);
  });

  RunSummary summary;
  summary.split = split;
  summary.stop_reason = result.stop_reason;
  summary.test_report = in_stage("evaluate", [&] {
    return score(result.best, test_ex, data.vocab(), config);
  });
  write_text(run_dir / "report_test.json", report_to_json(summary.test_report));
  write_text(run_dir / "confusions_test.txt", confusion_report(summary.test_report, 20));

  summary.row = {experiment_id, split.train.size(), data.minutes(split.train),
                 summary.test_report.ler};
  ordered_json run;
  run["experiment"] = experiment_id;
  run["variant"] = std::string(variant_name(config.variant));
  run["seed"] = config.seed;
  run["sub_seeds"] = {{"split", derive_seed(config.seed, "split")},
                      {"init", derive_seed(config.seed, "init")},
                      {"batching", derive_seed(config.seed, "batching")},
                      {"subset", derive_seed(config.seed, "subset")}};
  run["model"] = {{"num_layers", model.num_layers},
                  {"hidden_units", model.hidden_units},
                  {"input_dim", model.input_dim},
                  {"vocab_size", model.vocab_size}};
  run["train_utterances"] = summary.row.utterances;
  run["train_minutes"] = summary.row.minutes;
  run["dev_utterances"] = split.dev.size();
  run["test_utterances"] = split.test.size();
  run["epochs"] = result.state.epoch;
  run["best_epoch"] = result.state.best_epoch;
  run["best_dev_ler"] = result.state.best_dev_ler;
  run["stop_reason"] = result.stop_reason;
  run["test_ler"] = summary.row.ler;
  run["feature_cache"] = cache.string();
  write_text(run_dir / "run.json", run.dump(2) + "\n");
  append_results(config.runs_dir / "results.jsonl", summary.row);
  log << experiment_id << " stopped: " << result.stop_reason << "; test LER "
      << std::fixed << std::setprecision(3) << summary.row.ler << '\n'
      << std::defaultfloat;
  return summary;
}

ExperimentConfig load_run_config(const fs::path &run_dir) {
  const fs::path path = run_dir / "config.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("not a run directory (missing config.json): " + run_dir.string());
  return parse_experiment_config(in, run_dir, path.string());
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig &config, const RunOptions &options) {
  config.validate();
  const ExperimentData data = in_stage("load", [&] { return ExperimentData(config); });
  const CorpusSplit split = in_stage("split", [&] {
    return split_corpus(data.ids(), config.train.split, config.seed);
  });
  return train_and_evaluate(config, data, split, config.run_dir(), config.name, options);
}

std::vector<RunSummary> augmentation_sweep(const ExperimentConfig &config,
                                           const std::vector<std::size_t> &sizes,
                                           const RunOptions &options) {
  config.validate();
  if (sizes.empty()) throw ConfigError("sweep needs at least one subset size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ConfigError("subset sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw ConfigError("subset sizes must be strictly ascending");
    }
  }
  const ExperimentData data = in_stage("load", [&] { return ExperimentData(config); });
  const CorpusSplit full = in_stage("split", [&] {
    return split_corpus(data.ids(), config.train.split, config.seed);
  });
  if (sizes.back() > full.train.size()) {
    throw ConfigError("subset size " + std::to_string(sizes.back()) +
                      " exceeds the training split (max " +
                      std::to_string(full.train.size()) + ")");
  }
  std::vector<RunSummary> rows;
  for (std::size_t size : sizes) {
    CorpusSplit split = full;
    split.train = nested_subset(full.train, size, config.seed);
    const std::string tag = "sweep-" + std::to_string(size);
    rows.push_back(train_and_evaluate(config, data, split, config.run_dir() / tag,
                                      config.name + "-" + std::to_string(size), options));
  }
  return rows;
}

RunSummary evaluate_run(const fs::path &run_dir, const std::string &split_name) {
  const ExperimentConfig config = load_run_config(run_dir);
  const json run = read_json_file(run_dir / "run.json");
  const CorpusSplit split = read_split(run_dir / "splits.json");
  const auto &ids = split_ids(split, split_name);
  const ExperimentData data = in_stage("load", [&] { return ExperimentData(config); });
  const Checkpoint ckpt = load_checkpoint(run_dir / "best.ckpt");
  if (!(ckpt.vocab == data.vocab())) {
    throw SchemaError("checkpoint vocabulary differs from the corpus vocabulary");
  }
  const fs::path cache = run.value("feature_cache", feature_cache_dir(config).string());
  std::vector<TrainingExample> examples =
      in_stage("features", [&] { return data.examples(ids, cache); });
  RunSummary summary;
  summary.split = split;
  summary.stop_reason = run.value("stop_reason", "");
  summary.test_report = in_stage("evaluate", [&] {
    return score(ckpt.params, examples, ckpt.vocab, config);
  });
  write_text(run_dir / ("report_" + split_name + ".json"),
             report_to_json(summary.test_report));
  summary.row = {run.at("experiment").get<std::string>(),
                 run.at("train_utterances").get<std::size_t>(),
                 run.at("train_minutes").get<double>(), summary.test_report.ler};
  return summary;
}

std::vector<TranscribeResult> transcribe_files(const fs::path &run_dir,
                                               const std::vector<fs::path> &wavs,
                                               int beam_width) {
  ExperimentConfig config = load_run_config(run_dir);
  if (beam_width > 0) config.decoder = {"beam", beam_width};
  const Checkpoint ckpt = load_checkpoint(run_dir / "best.ckpt");
  const FeatureExtractor extractor(config.features);
  std::vector<TranscribeResult> out;
  for (const auto &path : wavs) {
    TranscribeResult r;
    r.path = path;
    try {
      const FeatureMatrix<double> feats = extractor.compute(read_wav(path));
      const Matrix<double> x = feats.frames.cast<float>().cast<double>();
      r.text = decode_labels(decode(forward(ckpt.params, x), config.decoder).labels,
                             ckpt.vocab);
    } catch (const Error &e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string error_report(const fs::path &run_dir, std::size_t top_k,
                         const std::string &split) {
  const fs::path path = run_dir / ("report_" + split + ".json");
  std::ifstream in(path);
  if (!in) throw IoError("missing " + path.string() + "; run evaluate first");
  return confusion_report(report_from_json(in), top_k);
}

}  // namespace fieldasr
