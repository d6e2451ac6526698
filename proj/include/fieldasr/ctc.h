// fieldasr/ctc.h
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

#ifndef FIELDASR_CTC_H_
#define FIELDASR_CTC_H_

#include <span>
#include <vector>

#include "fieldasr/common.h"

namespace fieldasr {

// Label 0 is the blank throughout.
inline constexpr int kBlank = 0;

template <typename Scalar>
struct CtcResult {
  Scalar loss;           // -log p(target | logits)
  Matrix<Scalar> grad;   // d loss / d logits, T x (V+1)
};

struct DecodedSequence {
  std::vector<int> labels;
  double score = 0.0;  // log probability (path for greedy, sequence for beam)
};

// Merge adjacent repeats, then drop blanks.
std::vector<int> collapse(std::span<const int> path);

// Fewest frames that can emit `target`: its length plus one blank between
// every adjacent equal pair.
Index ctc_min_frames(std::span<const int> target);

// Log-space forward-backward over the blank-augmented target. Throws
// InfeasibleTargetError when T < ctc_min_frames(target).
template <typename Scalar>
CtcResult<Scalar> ctc_loss(const ConstMatrixRef<Scalar> &logits,
                           std::span<const int> target);

// log p(target | logits) without the gradient; -inf if infeasible.
template <typename Scalar>
Scalar sequence_log_probability(const ConstMatrixRef<Scalar> &logits,
                                std::span<const int> target);

// Per-frame argmax (ties to the lowest index), then collapse.
template <typename Scalar>
DecodedSequence greedy_decode(const ConstMatrixRef<Scalar> &logits);

// Prefix beam search with blank / non-blank prefix probabilities. The greedy
// hypothesis is always rescored as a candidate, so the result is never less
// probable than greedy decoding.
template <typename Scalar>
DecodedSequence beam_decode(const ConstMatrixRef<Scalar> &logits,
                            int beam_width);

}  // namespace fieldasr

#endif  // FIELDASR_CTC_H_
