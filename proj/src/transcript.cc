// transcript.cc
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

#include "fieldasr/transcript.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "fieldasr/common.h"
#include "fieldasr/text.h"

namespace fieldasr {

using nlohmann::json;

LabelVocabulary::LabelVocabulary() {
  labels_.emplace_back(kBlankLabel);
  index_.emplace(std::string(kBlankLabel), 0);
}

LabelVocabulary LabelVocabulary::from_labels(
    const std::vector<std::string> &labels) {
  LabelVocabulary vocab;
  for (const auto &l : labels) {
    if (l.empty()) throw ConfigError("empty label in vocabulary");
    if (!vocab.index_.emplace(l, vocab.size()).second) {
      throw ConfigError("duplicate or reserved label \"" + l + "\"");
    }
    vocab.labels_.push_back(l);
  }
  return vocab;
}

LabelVocabulary LabelVocabulary::build(
    const std::vector<std::vector<std::string>> &unit_sequences) {
  std::set<std::string> units;
  for (const auto &seq : unit_sequences) units.insert(seq.begin(), seq.end());
  return from_labels({units.begin(), units.end()});
}

std::optional<int> LabelVocabulary::find(std::string_view label) const {
  const auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelSequence encode_units(const std::vector<std::string> &units,
                           const LabelVocabulary &vocab,
                           const std::string &utterance_id) {
  LabelSequence seq;
  seq.utterance_id = utterance_id;
  seq.labels.reserve(units.size());
  for (const auto &u : units) {
    const auto idx = vocab.find(u);
    if (!idx || *idx == 0) {
      throw OovError("label \"" + u + "\" not in vocabulary (utterance " +
                     (utterance_id.empty() ? "?" : utterance_id) + ")");
    }
    seq.labels.push_back(*idx);
  }
  return seq;
}

std::string decode_labels(std::span<const int> labels,
                          const LabelVocabulary &vocab) {
  std::string out;
  for (int l : labels) {
    if (l > 0) out += vocab.label(l);
  }
  return out;
}

std::string strip_spaces(std::string_view transcript) {
  std::string out;
  out.reserve(transcript.size());
  for (char c : transcript) {
    if (c != ' ') out += c;
  }
  return out;
}

std::vector<std::string> grapheme_units(std::string_view transcript) {
  return text::graphemes(transcript);
}

LabelSequence encode_with_spaces(std::string_view transcript,
                                 const LabelVocabulary &vocab,
                                 const std::string &utterance_id) {
  return encode_units(grapheme_units(transcript), vocab, utterance_id);
}

// ---------------------------------------------------------------------------
// G2P

void G2PRuleSet::add_rule(const std::string &source, const std::string &target) {
  if (source.empty()) throw ConfigError("G2P rule with empty source");
  const std::string key = text::nfc(source);
  for (const auto &[s, t] : rules_) {
    if (s == key) throw ConfigError("duplicate G2P source \"" + source + "\"");
  }
  rules_.emplace_back(key, text::nfc(target));
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const auto &a, const auto &b) {
                     return a.first.size() > b.first.size();
                   });
}

G2PRuleSet G2PRuleSet::parse_tsv(std::istream &in,
                                 const std::string &source_name) {
  G2PRuleSet rules;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    try {
      if (tab == std::string::npos) {
        rules.add_pass_through(line);
      } else {
        if (line.find('\t', tab + 1) != std::string::npos) {
          throw ConfigError("expected at most two tab-separated fields");
        }
        rules.add_rule(line.substr(0, tab), line.substr(tab + 1));
      }
    } catch (const ConfigError &e) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return rules;
}

G2PRuleSet G2PRuleSet::from_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open G2P rules: " + path.string());
  return parse_tsv(in, path.filename().string());
}

std::vector<std::string> G2PRuleSet::apply(std::string_view transcript) const {
  const std::string input = text::nfc(transcript);
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::size_t char_index = 0;
  const std::string_view view(input);
  while (pos < input.size()) {
    bool matched = false;
    for (const auto &[source, target] : rules_) {
      if (view.substr(pos, source.size()) == source) {
        if (!target.empty()) out.push_back(target);
        char_index += text::code_points(source).size();
        pos += source.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (input[pos] == ' ') {
      out.emplace_back(kSpaceLabel);
      ++pos;
      ++char_index;
      continue;
    }
    const char32_t cp = text::code_points(view.substr(pos, 4)).front();
    throw CoverageError("no G2P rule covers \"" + text::to_utf8(cp) +
                        "\" at character " + std::to_string(char_index) +
                        " of \"" + input + "\"");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alignments and pause boundaries

void WordAlignment::validate() const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto &w = words[i];
    if (!(w.end_s >= w.start_s)) {
      throw AlignmentError(utterance_id + ": word " + std::to_string(i) +
                           " ends before it starts");
    }
    if (i > 0 && w.start_s < words[i - 1].end_s - 1e-9) {
      throw AlignmentError(utterance_id + ": words " + std::to_string(i - 1) +
                           " and " + std::to_string(i) + " overlap");
    }
  }
}

std::map<std::string, WordAlignment> read_alignments(
    std::istream &in, const std::string &source_name) {
  std::map<std::string, WordAlignment> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    WordAlignment a;
    try {
      const json obj = json::parse(line);
      a.utterance_id = obj.at("id").get<std::string>();
      for (const auto &w : obj.at("words")) {
        a.words.push_back({w.at("w").get<std::string>(),
                           w.at("start_s").get<double>(),
                           w.at("end_s").get<double>()});
      }
    } catch (const json::parse_error &e) {
      throw ParseError(where + ": " + e.what());
    } catch (const json::exception &e) {
      throw SchemaError(where + ": " + e.what());
    }
    a.validate();
    const std::string id = a.utterance_id;
    if (!out.emplace(id, std::move(a)).second) {
      throw SchemaError(where + ": duplicate alignment for " + id);
    }
  }
  return out;
}

std::map<std::string, WordAlignment> read_alignments_file(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alignments: " + path.string());
  return read_alignments(in, path.filename().string());
}

std::string pause_boundaries(const std::vector<std::string> &words,
                             const WordAlignment &alignment,
                             double gap_threshold_s) {
  if (words.size() != alignment.words.size()) {
    throw AlignmentError(alignment.utterance_id + ": transcript has " +
                         std::to_string(words.size()) + " words, alignment has " +
                         std::to_string(alignment.words.size()));
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) {
      const double gap = alignment.words[i].start_s - alignment.words[i - 1].end_s;
      // Tolerance absorbs decimal round-off in the alignment times.
      if (gap >= gap_threshold_s - 1e-9) out += ' ';
    }
    out += words[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variants

std::optional<TranscriptVariant> parse_variant(std::string_view name) {
  if (name == "orig-no-spaces") return TranscriptVariant::kOrigNoSpaces;
  if (name == "orig-with-spaces") return TranscriptVariant::kOrigWithSpaces;
  if (name == "ipa-no-spaces") return TranscriptVariant::kIpaNoSpaces;
  if (name == "ipa-pause-boundaries") return TranscriptVariant::kIpaPauseBoundaries;
  return std::nullopt;
}

std::string_view variant_name(TranscriptVariant variant) {
  switch (variant) {
    case TranscriptVariant::kOrigNoSpaces: return "orig-no-spaces";
    case TranscriptVariant::kOrigWithSpaces: return "orig-with-spaces";
    case TranscriptVariant::kIpaNoSpaces: return "ipa-no-spaces";
    case TranscriptVariant::kIpaPauseBoundaries: return "ipa-pause-boundaries";
  }
  return "unknown";
}

std::vector<std::string> variant_units(const std::string &utterance_id,
                                       std::string_view transcript,
                                       TranscriptVariant variant,
                                       const VariantResources &resources) {
  auto g2p = [&]() -> const G2PRuleSet & {
    if (!resources.g2p) {
      throw ConfigError(std::string(variant_name(variant)) +
                        " needs a G2P rule table");
    }
    return *resources.g2p;
  };
  switch (variant) {
    case TranscriptVariant::kOrigNoSpaces:
      return grapheme_units(strip_spaces(transcript));
    case TranscriptVariant::kOrigWithSpaces:
      return grapheme_units(transcript);
    case TranscriptVariant::kIpaNoSpaces:
      return g2p().apply(strip_spaces(transcript));
    case TranscriptVariant::kIpaPauseBoundaries: {
      if (!resources.alignments) {
        throw ConfigError("ipa-pause-boundaries needs word alignments");
      }
      const auto it = resources.alignments->find(utterance_id);
      if (it == resources.alignments->end()) {
        throw AlignmentError("no word alignment for utterance " + utterance_id);
      }
      const std::string joined = pause_boundaries(
          text::split_words(transcript), it->second, resources.pause_threshold_s);
      return g2p().apply(joined);
    }
  }
  throw ConfigError("unknown transcript variant");
}

}  // namespace fieldasr
