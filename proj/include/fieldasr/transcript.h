// fieldasr/transcript.h
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

#ifndef FIELDASR_TRANSCRIPT_H_
#define FIELDASR_TRANSCRIPT_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fieldasr {

inline constexpr std::string_view kBlankLabel = "<blank>";
inline constexpr std::string_view kSpaceLabel = " ";

// Ordered label inventory. Index 0 is always the CTC blank.
class LabelVocabulary {
 public:
  LabelVocabulary();

  // `labels` excludes the blank; order is preserved.
  static LabelVocabulary from_labels(const std::vector<std::string> &labels);

  // Sorted, de-duplicated union of all units.
  static LabelVocabulary build(
      const std::vector<std::vector<std::string>> &unit_sequences);

  std::optional<int> find(std::string_view label) const;
  const std::string &label(int index) const { return labels_.at(index); }
  // All labels including the blank at index 0.
  const std::vector<std::string> &labels() const { return labels_; }
  int size() const { return static_cast<int>(labels_.size()); }
  // V, the number of non-blank labels.
  int num_labels() const { return size() - 1; }
  bool has_space() const { return find(kSpaceLabel).has_value(); }

  bool operator==(const LabelVocabulary &other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct LabelSequence {
  std::string utterance_id;
  std::vector<int> labels;
};

// Maps atomic units onto vocabulary indices; OovError names the unit and id.
LabelSequence encode_units(const std::vector<std::string> &units,
                           const LabelVocabulary &vocab,
                           const std::string &utterance_id);

std::string decode_labels(std::span<const int> labels,
                          const LabelVocabulary &vocab);

std::string strip_spaces(std::string_view transcript);

// Grapheme-cluster tokenization (after NFC), spaces kept as units.
std::vector<std::string> grapheme_units(std::string_view transcript);

LabelSequence encode_with_spaces(std::string_view transcript,
                                 const LabelVocabulary &vocab,
                                 const std::string &utterance_id = {});

// Table-driven grapheme-to-phoneme rewriting. At every position the longest
// matching source wins and its target is emitted as one atomic label. An
// ASCII space with no explicit rule becomes the space label.
class G2PRuleSet {
 public:
  void add_rule(const std::string &source, const std::string &target);
  void add_pass_through(const std::string &source) { add_rule(source, source); }

  // One "source<TAB>target" rule per line; a line with a single field is a
  // pass-through; '#' starts a comment line.
  static G2PRuleSet parse_tsv(std::istream &in, const std::string &source_name);
  static G2PRuleSet from_file(const std::filesystem::path &path);

  std::vector<std::string> apply(std::string_view transcript) const;

  std::size_t size() const { return rules_.size(); }

 private:
  // Longest source first.
  std::vector<std::pair<std::string, std::string>> rules_;
};

inline std::vector<std::string> apply_g2p(std::string_view transcript,
                                          const G2PRuleSet &rules) {
  return rules.apply(transcript);
}

struct AlignedWord {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct WordAlignment {
  std::string utterance_id;
  std::vector<AlignedWord> words;

  // Words must be ordered and non-overlapping; throws AlignmentError.
  void validate() const;
};

// JSON lines: {"id": ..., "words": [{"w": ..., "start_s": ..., "end_s": ...}]}
std::map<std::string, WordAlignment> read_alignments(
    std::istream &in, const std::string &source_name);
std::map<std::string, WordAlignment> read_alignments_file(
    const std::filesystem::path &path);

// Joins `words` keeping a space only where the aligned gap is at least
// `gap_threshold_s`.
std::string pause_boundaries(const std::vector<std::string> &words,
                             const WordAlignment &alignment,
                             double gap_threshold_s);

enum class TranscriptVariant {
  kOrigNoSpaces,
  kOrigWithSpaces,
  kIpaNoSpaces,
  kIpaPauseBoundaries,
};

std::optional<TranscriptVariant> parse_variant(std::string_view name);
std::string_view variant_name(TranscriptVariant variant);

struct VariantResources {
  const G2PRuleSet *g2p = nullptr;
  const std::map<std::string, WordAlignment> *alignments = nullptr;
  double pause_threshold_s = 0.150;
};

// Label units for one cleaned transcript under `variant`.
std::vector<std::string> variant_units(const std::string &utterance_id,
                                       std::string_view transcript,
                                       TranscriptVariant variant,
                                       const VariantResources &resources);

}  // namespace fieldasr

#endif  // FIELDASR_TRANSCRIPT_H_
