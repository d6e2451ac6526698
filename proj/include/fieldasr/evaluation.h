// fieldasr/evaluation.h
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

#ifndef FIELDASR_EVALUATION_H_
#define FIELDASR_EVALUATION_H_

#include <algorithm>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fieldasr/transcript.h"

namespace fieldasr {

// Levenshtein distance with unit costs, two-row dynamic programme.
template <typename Range>
std::size_t edit_distance(const Range &ref, const Range &hyp) {
  const std::size_t n = std::size(ref);
  const std::size_t m = std::size(hyp);
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  auto r = std::begin(ref);
  for (std::size_t i = 1; i <= n; ++i, ++r) {
    cur[0] = i;
    auto h = std::begin(hyp);
    for (std::size_t j = 1; j <= m; ++j, ++h) {
      const std::size_t sub = prev[j - 1] + (*r == *h ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

struct EditOp {
  enum class Kind { kMatch, kSubstitution, kDeletion, kInsertion };
  Kind kind;
  int ref;  // -1 for an insertion
  int hyp;  // -1 for a deletion
};

// One minimal-cost alignment. The traceback runs from the end of both
// sequences and prefers the diagonal (match/substitution), then deletion,
// then insertion.
std::vector<EditOp> align_sequences(std::span<const int> ref,
                                    std::span<const int> hyp);

using ConfusionKey = std::pair<std::string, std::string>;  // "" is the empty side
using ConfusionCounts = std::map<ConfusionKey, std::size_t>;

// Adds one count per aligned position, matches included as (x, x).
void count_confusions(std::span<const int> ref, std::span<const int> hyp,
                      const LabelVocabulary &vocab, ConfusionCounts &counts);

struct UtteranceScore {
  std::string id;
  std::size_t distance = 0;
  std::size_t ref_len = 0;
  std::string ref_text;
  std::string hyp_text;
};

struct EvaluationReport {
  // Micro average: total distance / total reference length.
  double ler = 0.0;
  // Mean of per-utterance rates, for comparison only.
  double ler_macro = 0.0;
  std::string decoder;
  std::string variant;
  std::vector<UtteranceScore> utterances;
  ConfusionCounts confusions;
};

// Micro-averaged LER. Throws RangeError on an empty list or empty reference.
double corpus_ler(const std::vector<std::pair<LabelSequence, LabelSequence>> &pairs);

EvaluationReport evaluate(const std::vector<LabelSequence> &refs,
                          const std::vector<LabelSequence> &hyps,
                          const LabelVocabulary &vocab);

// Top-k error pairs by count and per-label deletion / insertion totals.
std::string confusion_report(const EvaluationReport &report, std::size_t top_k);

std::string report_to_json(const EvaluationReport &report);
EvaluationReport report_from_json(std::istream &in);

}  // namespace fieldasr

#endif  // FIELDASR_EVALUATION_H_
