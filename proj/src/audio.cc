// audio.cc
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

#include "fieldasr/audio.h"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace fieldasr {

namespace {

// Small-tolerance rounding so that e.g. 1.0 s at 16 kHz is exactly 16000.
constexpr double kSampleSlack = 1e-9;

std::uint32_t get_u32(const unsigned char *p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char *p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u16(std::vector<unsigned char> &out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

struct ParsedWav {
  WavInfo info;
  const unsigned char *data = nullptr;
  std::size_t data_bytes = 0;
};

std::vector<unsigned char> slurp(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ParsedWav parse_wav(const std::vector<unsigned char> &bytes,
                    const std::filesystem::path &path) {
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file" + where);
  }
  ParsedWav parsed;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0) {
      throw FormatError("truncated chunk" + where);
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("short fmt chunk" + where);
      const unsigned char *f = bytes.data() + body;
      parsed.info.format_tag = get_u16(f);
      parsed.info.channels = get_u16(f + 2);
      parsed.info.sample_rate = static_cast<int>(get_u32(f + 4));
      parsed.info.bits_per_sample = get_u16(f + 14);
      if (parsed.info.format_tag == 0xFFFE && size >= 40) {
        // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the tag.
        parsed.info.format_tag = get_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk" + where);
      parsed.data = bytes.data() + body;
      // Some writers leave the size unset for streamed files.
      parsed.data_bytes = std::min<std::size_t>(size, bytes.size() - body);
      const int frame_bytes =
          parsed.info.channels * std::max(1, parsed.info.bits_per_sample / 8);
      parsed.info.num_frames =
          frame_bytes > 0 ? Index(parsed.data_bytes / frame_bytes) : 0;
      return parsed;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("no data chunk" + where);
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path &path) {
  const auto bytes = slurp(path);
  return parse_wav(bytes, path).info;
}

AudioBuffer read_wav(const std::filesystem::path &path) {
  const auto bytes = slurp(path);
  const ParsedWav wav = parse_wav(bytes, path);
  if (wav.info.format_tag != 1 || wav.info.bits_per_sample != 16) {
    throw FormatError("unsupported encoding (need 16-bit PCM) in " +
                      path.string());
  }
  if (wav.info.channels != 1) {
    throw FormatError("audio must be mono, got " +
                      std::to_string(wav.info.channels) + " channels in " +
                      path.string());
  }
  if (wav.info.sample_rate <= 0) {
    throw FormatError("invalid sample rate in " + path.string());
  }
  AudioBuffer audio;
  audio.sample_rate = wav.info.sample_rate;
  audio.samples.resize(wav.info.num_frames);
  for (Index i = 0; i < wav.info.num_frames; ++i) {
    const auto raw = static_cast<std::int16_t>(get_u16(wav.data + 2 * i));
    audio.samples[i] = raw / 32768.0;
  }
  return audio;
}

void write_wav(const std::filesystem::path &path, const AudioBuffer &audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  for (char c : std::string("RIFF")) out.push_back(c);
  put_u32(out, 36 + data_bytes);
  for (char c : std::string("WAVEfmt ")) out.push_back(c);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  for (char c : std::string("data")) out.push_back(c);
  put_u32(out, data_bytes);
  for (Index i = 0; i < audio.size(); ++i) {
    const double x = std::clamp(audio.samples[i], -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(
        std::clamp(std::lround(x * 32768.0), -32768L, 32767L));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write audio file: " + path.string());
  file.write(reinterpret_cast<const char *>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed: " + path.string());
}

constexpr double kMillisecondSlack = 0.0005;

AudioBuffer slice_audio(const AudioBuffer &session, double start_s,
                        double end_s) {
  if (!(start_s >= 0.0) || !(end_s > start_s)) {
    throw RangeError("invalid audio span [" + std::to_string(start_s) + ", " +
                     std::to_string(end_s) + "]");
  }
  const double rate = session.sample_rate;
  const auto first = static_cast<Index>(std::floor(start_s * rate + kSampleSlack));
  auto last = static_cast<Index>(std::ceil(end_s * rate - kSampleSlack));
  // Manifest times are whole milliseconds; absorb that rounding at the end.
  if (last > session.size() && end_s <= session.duration() + kMillisecondSlack) {
    last = session.size();
  }
  if (last > session.size() || first >= last) {
    throw RangeError("audio span [" + std::to_string(start_s) + ", " +
                     std::to_string(end_s) + "] exceeds buffer of " +
                     std::to_string(session.duration()) + " s");
  }
  AudioBuffer out;
  out.sample_rate = session.sample_rate;
  out.samples = session.samples.segment(first, last - first);
  return out;
}

}  // namespace fieldasr
