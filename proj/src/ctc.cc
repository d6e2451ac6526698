// ctc.cc
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

#include "fieldasr/ctc.h"

#include <algorithm>
#include <map>

namespace fieldasr {

std::vector<int> collapse(std::span<const int> path) {
  std::vector<int> out;
  int last = -1;
  for (int label : path) {
    if (label != last && label != kBlank) out.push_back(label);
    last = label;
  }
  return out;
}

Index ctc_min_frames(std::span<const int> target) {
  Index n = static_cast<Index>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

namespace {

template <typename Scalar>
void check_target(const ConstMatrixRef<Scalar> &logits,
                  std::span<const int> target) {
  for (int label : target) {
    if (label <= kBlank || label >= logits.cols()) {
      throw RangeError("target label " + std::to_string(label) +
                       " outside [1, " + std::to_string(logits.cols() - 1) + "]");
    }
  }
}

// Log-space alpha over the extended target; returns log Z.
template <typename Scalar>
Scalar forward_variables(const Matrix<Scalar> &logp,
                         const std::vector<int> &ext, Matrix<Scalar> &alpha) {
  const Index frames = logp.rows();
  const Index states = static_cast<Index>(ext.size());
  alpha.setConstant(frames, states, kLogZero<Scalar>);
  alpha(0, 0) = logp(0, ext[0]);
  if (states > 1) alpha(0, 1) = logp(0, ext[1]);
  for (Index t = 1; t < frames; ++t) {
    for (Index s = 0; s < states; ++s) {
      Scalar a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2]) {
        a = log_add(a, alpha(t - 1, s - 2));
      }
      if (a != kLogZero<Scalar>) alpha(t, s) = a + logp(t, ext[s]);
    }
  }
  Scalar log_z = alpha(frames - 1, states - 1);
  if (states > 1) log_z = log_add(log_z, alpha(frames - 1, states - 2));
  return log_z;
}

std::vector<int> extend(std::span<const int> target) {
  std::vector<int> ext(2 * target.size() + 1, kBlank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

}  // namespace

template <typename Scalar>
CtcResult<Scalar> ctc_loss(const ConstMatrixRef<Scalar> &logits,
                           std::span<const int> target) {
  const Index frames = logits.rows();
  const Index needed = std::max<Index>(ctc_min_frames(target), 1);
  if (frames < needed) {
    throw InfeasibleTargetError("CTC target of length " +
                                std::to_string(target.size()) + " needs " +
                                std::to_string(needed) + " frames, got " +
                                std::to_string(frames));
  }
  check_target<Scalar>(logits, target);

  const Matrix<Scalar> logp = log_softmax_rows(logits);
  const std::vector<int> ext = extend(target);
  const Index states = static_cast<Index>(ext.size());

  Matrix<Scalar> alpha;
  const Scalar log_z = forward_variables(logp, ext, alpha);

  Matrix<Scalar> beta = Matrix<Scalar>::Constant(frames, states, kLogZero<Scalar>);
  beta(frames - 1, states - 1) = logp(frames - 1, ext[states - 1]);
  if (states > 1) beta(frames - 1, states - 2) = logp(frames - 1, ext[states - 2]);
  for (Index t = frames - 2; t >= 0; --t) {
    for (Index s = 0; s < states; ++s) {
      Scalar b = beta(t + 1, s);
      if (s + 1 < states) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < states && ext[s] != kBlank && ext[s + 2] != ext[s]) {
        b = log_add(b, beta(t + 1, s + 2));
      }
      if (b != kLogZero<Scalar>) beta(t, s) = b + logp(t, ext[s]);
    }
  }

  // grad = softmax - posterior occupancy of each label.
  CtcResult<Scalar> result{-log_z, logp.array().exp().matrix()};
  Matrix<Scalar> occupancy =
      Matrix<Scalar>::Constant(frames, logits.cols(), kLogZero<Scalar>);
  for (Index t = 0; t < frames; ++t) {
    for (Index s = 0; s < states; ++s) {
      const Scalar ab = alpha(t, s) + beta(t, s);
      if (ab == kLogZero<Scalar>) continue;
      occupancy(t, ext[s]) = log_add(occupancy(t, ext[s]), ab - logp(t, ext[s]));
    }
  }
  result.grad -= (occupancy.array() - log_z).exp().matrix();
  return result;
}

template <typename Scalar>
Scalar sequence_log_probability(const ConstMatrixRef<Scalar> &logits,
                                std::span<const int> target) {
  const Index frames = logits.rows();
  if (frames < std::max<Index>(ctc_min_frames(target), 1)) {
    return kLogZero<Scalar>;
  }
  check_target<Scalar>(logits, target);
  Matrix<Scalar> alpha;
  return forward_variables(log_softmax_rows(logits), extend(target), alpha);
}

template <typename Scalar>
DecodedSequence greedy_decode(const ConstMatrixRef<Scalar> &logits) {
  const Matrix<Scalar> logp = log_softmax_rows(logits);
  std::vector<int> path(logits.rows());
  double score = 0.0;
  for (Index t = 0; t < logp.rows(); ++t) {
    Index best = 0;
    for (Index k = 1; k < logp.cols(); ++k) {
      if (logp(t, k) > logp(t, best)) best = k;
    }
    path[t] = static_cast<int>(best);
    score += double(logp(t, best));
  }
  return {collapse(path), score};
}

template <typename Scalar>
DecodedSequence beam_decode(const ConstMatrixRef<Scalar> &logits,
                            int beam_width) {
  if (beam_width < 1) throw ConfigError("beam width must be >= 1");
  const Matrix<Scalar> logp = log_softmax_rows(logits);
  const Index labels = logp.cols();
  constexpr Scalar zero = kLogZero<Scalar>;

  struct Score {
    Scalar blank = kLogZero<Scalar>;
    Scalar non_blank = kLogZero<Scalar>;
    Scalar total() const { return log_add(blank, non_blank); }
  };
  using Beam = std::map<std::vector<int>, Score>;

  auto prune = [&](Beam &beam) {
    if (static_cast<int>(beam.size()) <= beam_width) return;
    std::vector<std::pair<Scalar, const std::vector<int> *>> ranked;
    ranked.reserve(beam.size());
    for (const auto &[prefix, score] : beam) ranked.emplace_back(score.total(), &prefix);
    // Map order makes ties resolve to the lexicographically smaller prefix.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    Beam kept;
    for (int i = 0; i < beam_width; ++i) kept.emplace(*ranked[i].second, beam.at(*ranked[i].second));
    beam = std::move(kept);
  };

  Beam beam;
  beam[{}].blank = Scalar(0);
  for (Index t = 0; t < logp.rows(); ++t) {
    Beam next;
    for (const auto &[prefix, score] : beam) {
      Score &same = next[prefix];
      same.blank = log_add(same.blank, score.total() + logp(t, kBlank));
      if (!prefix.empty()) {
        same.non_blank =
            log_add(same.non_blank, score.non_blank + logp(t, prefix.back()));
      }
      for (Index k = 1; k < labels; ++k) {
        std::vector<int> extended = prefix;
        extended.push_back(static_cast<int>(k));
        Score &ext = next[extended];
        const Scalar from = (!prefix.empty() && prefix.back() == k)
                                ? score.blank
                                : score.total();
        ext.non_blank = log_add(ext.non_blank, from + logp(t, k));
      }
    }
    prune(next);
    beam = std::move(next);
  }

  DecodedSequence best;
  Scalar best_score = zero;
  bool first = true;
  for (const auto &[prefix, score] : beam) {
    if (first || score.total() > best_score) {
      best.labels = prefix;
      best_score = score.total();
      first = false;
    }
  }
  // Prefix scores in the beam are exact sequence probabilities only if the
  // prefix survived every pruning step, so compare on the exact value.
  best_score = sequence_log_probability<Scalar>(logits, best.labels);
  const DecodedSequence greedy = greedy_decode<Scalar>(logits);
  const Scalar greedy_score = sequence_log_probability<Scalar>(logits, greedy.labels);
  if (greedy_score > best_score) {
    best.labels = greedy.labels;
    best_score = greedy_score;
  }
  best.score = double(best_score);
  return best;
}

#define FIELDASR_INSTANTIATE_CTC(Scalar)                                           \
  template CtcResult<Scalar> ctc_loss<Scalar>(const ConstMatrixRef<Scalar> &,      \
                                              std::span<const int>);               \
  template Scalar sequence_log_probability<Scalar>(const ConstMatrixRef<Scalar> &, \
                                                   std::span<const int>);          \
  template DecodedSequence greedy_decode<Scalar>(const ConstMatrixRef<Scalar> &);  \
  template DecodedSequence beam_decode<Scalar>(const ConstMatrixRef<Scalar> &, int);

FIELDASR_INSTANTIATE_CTC(double)
FIELDASR_INSTANTIATE_CTC(float)

#undef FIELDASR_INSTANTIATE_CTC

}  // namespace fieldasr
