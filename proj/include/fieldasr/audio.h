// fieldasr/audio.h
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

#ifndef FIELDASR_AUDIO_H_
#define FIELDASR_AUDIO_H_

#include <filesystem>

#include "fieldasr/common.h"

namespace fieldasr {

// Mono audio with samples in [-1, 1].
struct AudioBuffer {
  Vector<double> samples;
  int sample_rate = 16000;

  Index size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct WavInfo {
  int channels = 0;
  int sample_rate = 0;
  int bits_per_sample = 0;
  int format_tag = 0;
  Index num_frames = 0;
};

// Reads the fmt chunk only. Throws IoError / FormatError.
WavInfo read_wav_info(const std::filesystem::path &path);

// Only RIFF PCM, 16-bit, mono is accepted; anything else is a FormatError.
AudioBuffer read_wav(const std::filesystem::path &path);

// Writes 16-bit PCM mono; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path &path, const AudioBuffer &audio);

// Sample-accurate slice [start, end) in seconds. Start rounds down and end
// rounds up to sample boundaries; an end within half a millisecond past the
// buffer is clamped to it. Throws RangeError on a bad span.
AudioBuffer slice_audio(const AudioBuffer &session, double start_s,
                        double end_s);

}  // namespace fieldasr

#endif  // FIELDASR_AUDIO_H_
