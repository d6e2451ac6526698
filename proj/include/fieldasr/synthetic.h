// fieldasr/synthetic.h
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

#ifndef FIELDASR_SYNTHETIC_H_
#define FIELDASR_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldasr/audio.h"
#include "fieldasr/random.h"
#include "fieldasr/transcript.h"

namespace fieldasr {

// Toy corpus of concatenated pure tones, one label per frequency.
struct SyntheticConfig {
  int num_utterances = 300;
  int min_tones = 1;
  int max_tones = 5;
  double tone_s = 0.2;
  double ramp_s = 0.02;
  double amplitude = 0.5;
  double noise_sigma = 0.01;
  double edge_silence_s = 0.15;
  // Chance that a tone ends a word, and that a word boundary carries a pause.
  double word_break_probability = 0.4;
  double pause_probability = 0.3;
  double pause_min_s = 0.10;
  double pause_max_s = 0.15;
  int sample_rate = 16000;
  std::uint64_t seed = 7;
  std::vector<double> frequencies{400.0, 1200.0, 2800.0};
  std::vector<std::string> labels{"a", "b", "c"};
  void validate() const;
};

struct SyntheticUtterance {
  std::string id;
  std::string transcript;  // words separated by single spaces
  AudioBuffer audio;
  WordAlignment alignment;
};

// Adjacent tones inside an utterance always differ.
SyntheticUtterance synthesize_utterance(const SyntheticConfig &config, Rng &rng,
                                        const std::string &id);

std::vector<SyntheticUtterance> synthesize_corpus(const SyntheticConfig &config);

// Writes wav/<id>.wav, manifest.jsonl and alignments.jsonl under `dir`.
std::vector<SyntheticUtterance> write_synthetic_corpus(const std::filesystem::path &dir,
                                                       const SyntheticConfig &config);

}  // namespace fieldasr

#endif  // FIELDASR_SYNTHETIC_H_
