// features.cc
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

#include "fieldasr/features.h"

#include <fstream>
#include <numbers>

#include "fieldasr/binary_io.h"

namespace fieldasr {

namespace {
constexpr char kFeatureMagic[] = "FASRFEAT";
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

int FeatureConfig::frame_length() const {
  return static_cast<int>(std::lround(frame_length_s * sample_rate));
}

int FeatureConfig::frame_shift() const {
  return static_cast<int>(std::lround(frame_shift_s * sample_rate));
}

void FeatureConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (frame_length() < 2 || frame_shift() < 1) {
    throw ConfigError("frame length/shift too small for the sample rate");
  }
  if (!is_power_of_two(nfft) || nfft < frame_length()) {
    throw ConfigError("nfft must be a power of two >= the frame length (" +
                      std::to_string(frame_length()) + " samples)");
  }
  if (num_mel < 1) throw ConfigError("num_mel must be >= 1");
  if (upper_frequency() > 0.5 * sample_rate + 1e-9) {
    throw ConfigError("f_max exceeds the Nyquist frequency");
  }
  if (f_min < 0.0 || f_min >= upper_frequency()) {
    throw ConfigError("f_min must lie in [0, f_max)");
  }
  if (preemphasis < 0.0 || preemphasis >= 1.0) {
    throw ConfigError("preemphasis must lie in [0, 1)");
  }
  if (delta_order < 0 || delta_order > 2) throw ConfigError("delta_order must be 0, 1 or 2");
  if (delta_window < 1) throw ConfigError("delta_window must be >= 1");
  if (!(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
}

Index num_frames(Index num_samples, int frame_length, int frame_shift) {
  if (num_samples < frame_length) return 0;
  return 1 + (num_samples - frame_length) / frame_shift;
}

AudioBuffer preemphasize(const AudioBuffer &audio, double alpha) {
  AudioBuffer out = audio;
  const Index n = audio.size();
  if (n > 1) {
    out.samples.tail(n - 1) =
        audio.samples.tail(n - 1) - alpha * audio.samples.head(n - 1);
  }
  return out;
}

Vector<double> hamming_window(int length) {
  Vector<double> w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < length; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (length - 1));
  }
  return w;
}

MelFilterbank::MelFilterbank(int nfft, int sample_rate, int num_filters,
                             double f_min, double f_max) {
  if (f_max > 0.5 * sample_rate + 1e-9) {
    throw ConfigError("mel filterbank f_max " + std::to_string(f_max) +
                      " Hz exceeds Nyquist " + std::to_string(0.5 * sample_rate));
  }
  if (num_filters < 1 || !(f_min < f_max)) {
    throw ConfigError("mel filterbank needs >= 1 filter and f_min < f_max");
  }
  const int bins = nfft / 2 + 1;
  weights_ = Matrix<double>::Zero(num_filters, bins);
  const double mel_lo = mel_scale(f_min);
  const double mel_hi = mel_scale(f_max);
  const double step = (mel_hi - mel_lo) / (num_filters + 1);
  for (int m = 0; m < num_filters; ++m) {
    const double left = mel_lo + m * step;
    const double centre = left + step;
    const double right = centre + step;
    for (int k = 0; k < bins; ++k) {
      const double mel = mel_scale(double(k) * sample_rate / nfft);
      if (mel > left && mel < right) {
        weights_(m, k) = mel <= centre ? (mel - left) / (centre - left)
                                       : (right - mel) / (right - centre);
      }
    }
  }
}

Vector<double> MelFilterbank::apply(const Vector<double> &spectrum,
                                    bool take_log, double floor) const {
  if (spectrum.size() != weights_.cols()) {
    throw ShapeError("spectrum has " + std::to_string(spectrum.size()) +
                     " bins, filterbank expects " +
                     std::to_string(weights_.cols()));
  }
  Vector<double> energies = (weights_ * spectrum).cwiseMax(floor);
  if (take_log) energies = energies.array().log().matrix();
  return energies;
}

Matrix<double> compute_deltas(const Matrix<double> &frames, int window) {
  const Index t = frames.rows();
  Matrix<double> out = Matrix<double>::Zero(t, frames.cols());
  if (t == 0) return out;
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  for (Index i = 0; i < t; ++i) {
    for (int n = 1; n <= window; ++n) {
      const Index ahead = std::min<Index>(i + n, t - 1);
      const Index behind = std::max<Index>(i - n, 0);
      out.row(i) += n * (frames.row(ahead) - frames.row(behind));
    }
  }
  return out / denom;
}

FeatureExtractor::FeatureExtractor(const FeatureConfig &config)
    : config_((config.validate(), config)),
      window_(hamming_window(config.frame_length())),
      filterbank_(config.nfft, config.sample_rate, config.num_mel,
                  config.f_min, config.upper_frequency()) {}

FeatureMatrix<double> FeatureExtractor::compute(const AudioBuffer &audio) const {
  if (audio.sample_rate != config_.sample_rate) {
    throw FormatError("audio is " + std::to_string(audio.sample_rate) +
                      " Hz, features expect " +
                      std::to_string(config_.sample_rate) + " Hz");
  }
  const AudioBuffer emphasized = preemphasize(audio, config_.preemphasis);
  const int length = config_.frame_length();
  const int shift = config_.frame_shift();
  const Index frames = num_frames(audio.size(), length, shift);

  Matrix<double> statics(frames, config_.static_dims());
  Vector<double> frame(length);
  for (Index t = 0; t < frames; ++t) {
    frame = emphasized.samples.segment(t * shift, length).cwiseProduct(window_);
    const Vector<double> spectrum = power_spectrum(frame, config_.nfft);
    statics.row(t).head(config_.num_mel) =
        filterbank_.apply(spectrum, true, config_.log_floor).transpose();
    if (config_.use_energy) {
      statics(t, config_.num_mel) =
          std::log(std::max(frame.squaredNorm(), config_.log_floor));
    }
  }

  FeatureMatrix<double> out;
  out.frame_length_s = config_.frame_length_s;
  out.frame_shift_s = config_.frame_shift_s;
  const Index sd = statics.cols();
  out.frames.resize(frames, config_.dims());
  out.frames.leftCols(sd) = statics;
  if (config_.delta_order >= 1) {
    const Matrix<double> delta = compute_deltas(statics, config_.delta_window);
    out.frames.middleCols(sd, sd) = delta;
    if (config_.delta_order >= 2) {
      out.frames.middleCols(2 * sd, sd) =
          compute_deltas(delta, config_.delta_window);
    }
  }
  if (config_.cmvn && frames >= 2) out = normalize_cmvn(std::move(out));
  return out;
}

void write_feature_cache(const std::filesystem::path &path,
                         const FeatureMatrix<double> &features) {
  BinaryWriter w;
  w.bytes(std::string_view(kFeatureMagic, 8));
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(features.num_frames()));
  w.u32(static_cast<std::uint32_t>(features.dims()));
  w.f64(features.frame_length_s);
  w.f64(features.frame_shift_s);
  for (Index t = 0; t < features.num_frames(); ++t) {
    for (Index d = 0; d < features.dims(); ++d) {
      w.f32(static_cast<float>(features.frames(t, d)));
    }
  }
  w.save(path);
}

FeatureMatrix<float> read_feature_cache(const std::filesystem::path &path) {
  BinaryReader r = BinaryReader::open(path);
  if (r.bytes(8) != std::string_view(kFeatureMagic, 8)) {
    throw FormatError("not a feature cache file: " + path.string());
  }
  if (r.u32() != kFeatureVersion) {
    throw FormatError("unsupported feature cache version: " + path.string());
  }
  FeatureMatrix<float> out;
  const std::uint32_t t = r.u32();
  const std::uint32_t d = r.u32();
  out.frame_length_s = r.f64();
  out.frame_shift_s = r.f64();
  out.frames.resize(t, d);
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) out.frames(i, j) = r.f32();
  }
  if (!r.at_end()) throw FormatError("trailing bytes in " + path.string());
  return out;
}

}  // namespace fieldasr
