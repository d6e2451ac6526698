// fieldasr/features.h
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

#ifndef FIELDASR_FEATURES_H_
#define FIELDASR_FEATURES_H_

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fieldasr/audio.h"
#include "fieldasr/common.h"

namespace fieldasr {

struct FeatureConfig {
  int sample_rate = 16000;
  double frame_length_s = 0.025;
  double frame_shift_s = 0.010;
  int nfft = 512;
  int num_mel = 40;
  double f_min = 0.0;
  // Non-positive means the Nyquist frequency.
  double f_max = 0.0;
  double preemphasis = 0.97;
  bool use_energy = true;
  // 0: static only, 1: +delta, 2: +delta-delta.
  int delta_order = 2;
  int delta_window = 2;
  double log_floor = 1e-10;
  bool cmvn = true;

  int frame_length() const;  // in samples
  int frame_shift() const;   // in samples
  double upper_frequency() const {
    return f_max > 0.0 ? f_max : 0.5 * sample_rate;
  }
  int static_dims() const { return num_mel + (use_energy ? 1 : 0); }
  int dims() const { return static_dims() * (1 + delta_order); }

  // Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

// T x D frames, one row per frame.
template <typename Scalar = double>
struct FeatureMatrix {
  Matrix<Scalar> frames;
  double frame_length_s = 0.025;
  double frame_shift_s = 0.010;

  Index num_frames() const { return frames.rows(); }
  Index dims() const { return frames.cols(); }
};

inline double mel_scale(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double inverse_mel_scale(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// 1 + floor((N - L) / S) for N >= L, otherwise 0.
Index num_frames(Index num_samples, int frame_length, int frame_shift);

// y[0] = x[0], y[n] = x[n] - alpha x[n-1].
AudioBuffer preemphasize(const AudioBuffer &audio, double alpha);

Vector<double> hamming_window(int length);

// |DFT|^2 of the zero-padded frame, bins 0..nfft/2.
template <typename Derived>
Vector<typename Derived::Scalar> power_spectrum(
    const Eigen::MatrixBase<Derived> &frame, int nfft) {
  using Scalar = typename Derived::Scalar;
  if (!is_power_of_two(nfft) || nfft < frame.size()) {
    throw ConfigError("nfft must be a power of two >= the frame length");
  }
  std::vector<Scalar> padded(nfft, Scalar(0));
  for (Index i = 0; i < frame.size(); ++i) padded[i] = frame(i);
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  std::vector<std::complex<Scalar>> bins;
  fft.fwd(bins, padded);
  Vector<Scalar> out(nfft / 2 + 1);
  for (Index k = 0; k < out.size(); ++k) out[k] = std::norm(bins[k]);
  return out;
}

// Triangular filters equally spaced on the mel scale over [f_min, f_max].
class MelFilterbank {
 public:
  MelFilterbank(int nfft, int sample_rate, int num_filters, double f_min,
                double f_max);

  // Filter energies, floored at `floor` and optionally log-compressed.
  Vector<double> apply(const Vector<double> &spectrum, bool take_log,
                       double floor) const;

  const Matrix<double> &weights() const { return weights_; }
  int num_filters() const { return static_cast<int>(weights_.rows()); }

 private:
  Matrix<double> weights_;  // filters x bins
};

// Regression deltas over +-window frames with edge frames replicated.
Matrix<double> compute_deltas(const Matrix<double> &frames, int window);

// Per-dimension mean 0, variance 1; constant dimensions are only centred.
// Needs at least two frames.
template <typename Scalar>
FeatureMatrix<Scalar> normalize_cmvn(FeatureMatrix<Scalar> features) {
  const Index t = features.num_frames();
  if (t < 2) throw ShapeError("CMVN needs at least 2 frames");
  for (Index d = 0; d < features.dims(); ++d) {
    auto col = features.frames.col(d);
    col.array() -= col.mean();
    const Scalar var = col.squaredNorm() / Scalar(t);
    if (var > Scalar(1e-20)) col /= std::sqrt(var);
  }
  return features;
}

// log-mel filterbank (+ log energy) with deltas and per-utterance CMVN.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig &config);

  FeatureMatrix<double> compute(const AudioBuffer &audio) const;

  const FeatureConfig &config() const { return config_; }

 private:
  FeatureConfig config_;
  Vector<double> window_;
  MelFilterbank filterbank_;
};

// Cache layout (little-endian): "FASRFEAT", u32 version, u32 T, u32 D,
// f64 frame_length_s, f64 frame_shift_s, then T*D row-major f32.
void write_feature_cache(const std::filesystem::path &path,
                         const FeatureMatrix<double> &features);
FeatureMatrix<float> read_feature_cache(const std::filesystem::path &path);

}  // namespace fieldasr

#endif  // FIELDASR_FEATURES_H_
