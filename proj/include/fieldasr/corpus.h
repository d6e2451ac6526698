// fieldasr/corpus.h
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

#ifndef FIELDASR_CORPUS_H_
#define FIELDASR_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fieldasr {

// Times are kept in integer milliseconds, the precision of the source
// annotations, so duration bounds compare exactly.
struct RawAnnotation {
  std::string id;
  std::string tier_id;
  std::string audio;
  std::string speaker;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::string value;

  double start() const { return start_ms / 1000.0; }
  double end() const { return end_ms / 1000.0; }
  std::int64_t duration_ms() const { return end_ms - start_ms; }
};

std::int64_t seconds_to_ms(double seconds);

// ELAN subset: TIME_ORDER/TIME_SLOT, TIER, ALIGNABLE_ANNOTATION,
// ANNOTATION_VALUE. `source_name` labels errors and prefixes annotation ids.
std::vector<RawAnnotation> parse_eaf(std::istream &in,
                                     const std::string &source_name);
std::vector<RawAnnotation> parse_eaf_file(const std::filesystem::path &path);

// JSON lines with keys id, audio, start_s, end_s, transcript, speaker.
std::vector<RawAnnotation> parse_manifest(std::istream &in,
                                          const std::string &source_name);

enum class RejectReason {
  kEmpty,
  kPunctuationOnly,
  kContainsDigit,
  kContainsCyrillic,
  kUnclearMarker,
  kTooShort,
  kTooLong,
};

inline constexpr RejectReason kAllRejectReasons[] = {
    RejectReason::kEmpty,          RejectReason::kPunctuationOnly,
    RejectReason::kContainsDigit,  RejectReason::kContainsCyrillic,
    RejectReason::kUnclearMarker,  RejectReason::kTooShort,
    RejectReason::kTooLong,
};

std::string_view reason_code(RejectReason reason);
std::optional<RejectReason> reason_from_code(std::string_view code);

struct CleaningPolicy {
  // NO-BREAK SPACE, ZERO WIDTH SPACE, NARROW NO-BREAK SPACE.
  std::vector<char32_t> invisible_spaces{0x00A0, 0x200B, 0x202F};
  // Event names written as ((name)); matched case-insensitively and removed.
  std::vector<std::string> nonverbal_events{
      "cough", "coughs", "coughing", "laugh", "laughs", "laughing",
      "laughter", "noise", "breath", "breathing", "sigh", "smack"};
  // Any of these left after event removal rejects the annotation.
  std::vector<std::string> unclear_markers{"((", "))"};
  std::int64_t min_duration_ms = 400;
  std::int64_t max_duration_ms = 10000;
};

class CleanResult {
 public:
  static CleanResult accept(std::string text) {
    CleanResult r;
    r.text_ = std::move(text);
    return r;
  }
  static CleanResult reject(RejectReason reason) {
    CleanResult r;
    r.reason_ = reason;
    return r;
  }

  bool accepted() const { return !reason_.has_value(); }
  const std::string &text() const { return text_; }
  RejectReason reason() const { return *reason_; }

 private:
  std::string text_;
  std::optional<RejectReason> reason_;
};

CleanResult clean_transcript(std::string_view value,
                             const CleaningPolicy &policy = {});

// nullopt means keep. Bounds are inclusive.
std::optional<RejectReason> filter_duration(std::int64_t duration_ms,
                                            const CleaningPolicy &policy = {});

struct UtteranceRecord {
  std::string id;
  std::string audio;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::string transcript;
  std::string speaker;

  double start() const { return start_ms / 1000.0; }
  double end() const { return end_ms / 1000.0; }
  double duration() const { return (end_ms - start_ms) / 1000.0; }
};

struct Rejection {
  std::string id;
  RejectReason reason;
  std::string value;
};

struct CorpusStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::map<RejectReason, std::size_t> dropped;

  std::size_t dropped_total() const;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  int sample_rate = 0;
  CorpusStats stats;
  std::vector<Rejection> rejections;
};

// Applies every cleaning and duration rule. Duplicate ids are a SchemaError.
CorpusManifest build_manifest(const std::vector<RawAnnotation> &raw,
                              const CleaningPolicy &policy = {});

void write_manifest(std::ostream &out,
                    const std::vector<UtteranceRecord> &records);
std::vector<UtteranceRecord> read_manifest(std::istream &in,
                                           const std::string &source_name);
void write_rejections(std::ostream &out,
                      const std::vector<Rejection> &rejections);
std::string stats_table(const CorpusStats &stats);

struct PrepareOptions {
  CleaningPolicy policy;
  // Empty keeps every tier.
  std::vector<std::string> tiers;
};

// Reads every *.eaf file (audio: <stem>.wav unless the header names a
// relative media file) and an optional manifest.jsonl from `corpus_dir`,
// checks the audio, cleans, and writes manifest.jsonl, rejections.jsonl,
// stats.txt and corpus.json to `out_dir`.
CorpusManifest prepare_corpus(const std::filesystem::path &corpus_dir,
                              const std::filesystem::path &out_dir,
                              const PrepareOptions &options = {});

struct PreparedCorpus {
  std::filesystem::path audio_root;
  int sample_rate = 0;
  std::vector<UtteranceRecord> records;

  std::filesystem::path audio_path(const UtteranceRecord &r) const {
    return audio_root / r.audio;
  }
};

PreparedCorpus load_prepared_corpus(const std::filesystem::path &dir);

}  // namespace fieldasr

#endif  // FIELDASR_CORPUS_H_
