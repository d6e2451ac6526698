// synthetic.cc
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

#include "fieldasr/synthetic.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace fieldasr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void SyntheticConfig::validate() const {
  if (num_utterances < 1) throw ConfigError("num_utterances must be positive");
  if (min_tones < 1 || max_tones < min_tones) throw ConfigError("bad tone count range");
  if (frequencies.size() != labels.size() || frequencies.size() < 2) {
    throw ConfigError("need one label per frequency and at least two of each");
  }
  for (double f : frequencies) {
    if (!(f > 0.0 && f < sample_rate / 2.0)) {
      throw ConfigError("tone frequency outside (0, Nyquist)");
    }
  }
  if (!(tone_s > 2 * ramp_s) || ramp_s < 0.0) throw ConfigError("ramps exceed the tone");
  if (!(pause_min_s <= pause_max_s) || pause_min_s < 0.0) {
    throw ConfigError("bad pause range");
  }
  if (sample_rate < 1) throw ConfigError("sample_rate must be positive");
}

namespace {

Index samples_for(double seconds, int rate) {
  return static_cast<Index>(std::llround(seconds * rate));
}

}  // namespace

SyntheticUtterance synthesize_utterance(const SyntheticConfig &config, Rng &rng,
                                        const std::string &id) {
  const int rate = config.sample_rate;
  const int n_tones = config.min_tones +
                      static_cast<int>(rng.below(std::uint64_t(config.max_tones -
                                                               config.min_tones + 1)));
  std::vector<int> tones;
  for (int i = 0; i < n_tones; ++i) {
    int k;
    do {
      k = static_cast<int>(rng.below(config.frequencies.size()));
    } while (!tones.empty() && k == tones.back());
    tones.push_back(k);
  }
  std::vector<bool> break_after(n_tones, false);
  std::vector<Index> pause_after(n_tones, 0);
  for (int i = 0; i + 1 < n_tones; ++i) {
    break_after[i] = rng.uniform() < config.word_break_probability;
    if (break_after[i] && rng.uniform() < config.pause_probability) {
      pause_after[i] =
          samples_for(rng.uniform(config.pause_min_s, config.pause_max_s), rate);
    }
  }

  const Index edge = samples_for(config.edge_silence_s, rate);
  const Index tone_len = samples_for(config.tone_s, rate);
  const Index ramp = samples_for(config.ramp_s, rate);
  Index total = 2 * edge + n_tones * tone_len;
  for (Index p : pause_after) total += p;
  const Index per_ms = std::max<Index>(1, rate / 1000);
  total = (total + per_ms - 1) / per_ms * per_ms;

  SyntheticUtterance u;
  u.id = id;
  u.audio.sample_rate = rate;
  u.audio.samples = Vector<double>::Zero(total);
  u.alignment.utterance_id = id;

  Index pos = edge;
  std::string word;
  double word_start = 0.0;
  for (int i = 0; i < n_tones; ++i) {
    const double freq = config.frequencies[tones[i]];
    if (word.empty()) word_start = double(pos) / rate;
    for (Index s = 0; s < tone_len; ++s) {
      double gain = 1.0;
      if (ramp > 0 && s < ramp) {
        gain = 0.5 * (1.0 - std::cos(std::numbers::pi * double(s) / double(ramp)));
      } else if (ramp > 0 && s >= tone_len - ramp) {
        gain = 0.5 * (1.0 - std::cos(std::numbers::pi * double(tone_len - 1 - s) /
                                     double(ramp)));
      }
      u.audio.samples[pos + s] = config.amplitude * gain *
                                 std::sin(2.0 * std::numbers::pi * freq * double(s) / rate);
    }
    pos += tone_len;
    word += config.labels[tones[i]];
    if (i + 1 == n_tones || break_after[i]) {
      u.alignment.words.push_back({word, word_start, double(pos) / rate});
      if (!u.transcript.empty()) u.transcript += ' ';
      u.transcript += word;
      word.clear();
      pos += pause_after[i];
    }
  }
  for (Index s = 0; s < total; ++s) u.audio.samples[s] += config.noise_sigma * rng.normal();
  return u;
}

std::vector<SyntheticUtterance> synthesize_corpus(const SyntheticConfig &config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "synthetic"));
  std::vector<SyntheticUtterance> out;
  const int width = static_cast<int>(std::to_string(config.num_utterances).size());
  for (int i = 0; i < config.num_utterances; ++i) {
    std::ostringstream id;
    id << "syn" << std::setw(width) << std::setfill('0') << i;
    out.push_back(synthesize_utterance(config, rng, id.str()));
  }
  return out;
}

std::vector<SyntheticUtterance> write_synthetic_corpus(const fs::path &dir,
                                                       const SyntheticConfig &config) {
  std::vector<SyntheticUtterance> corpus = synthesize_corpus(config);
  fs::create_directories(dir / "wav");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary);
  std::ofstream alignments(dir / "alignments.jsonl", std::ios::binary);
  if (!manifest || !alignments) throw IoError("cannot write into " + dir.string());
  for (const auto &u : corpus) {
    const std::string audio = "wav/" + u.id + ".wav";
    write_wav(dir / audio, u.audio);
    manifest << ordered_json{{"id", u.id},
                             {"audio", audio},
                             {"start_s", 0.0},
                             {"end_s", u.audio.duration()},
                             {"transcript", u.transcript},
                             {"speaker", "synth"}}
                    .dump()
             << '\n';
    ordered_json words = ordered_json::array();
    for (const auto &w : u.alignment.words) {
      words.push_back({{"w", w.word}, {"start_s", w.start_s}, {"end_s", w.end_s}});
    }
    alignments << ordered_json{{"id", u.id}, {"words", words}}.dump() << '\n';
  }
  return corpus;
}

}  // namespace fieldasr
