// corpus.cc
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

#include "fieldasr/corpus.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "json.hpp"

#include "fieldasr/audio.h"
#include "fieldasr/common.h"
#include "fieldasr/text.h"

namespace fieldasr {

namespace pt = boost::property_tree;
using nlohmann::json;
using nlohmann::ordered_json;

std::int64_t seconds_to_ms(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1000.0));
}

// ---------------------------------------------------------------------------
// EAF

std::vector<RawAnnotation> parse_eaf(std::istream &in,
                                     const std::string &source_name) {
  pt::ptree doc;
  try {
    pt::read_xml(in, doc, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error &e) {
    throw ParseError(source_name + ":" + std::to_string(e.line()) + ": " +
                     e.message());
  }
  const auto root = doc.get_child_optional("ANNOTATION_DOCUMENT");
  if (!root) {
    throw ParseError(source_name + ": missing ANNOTATION_DOCUMENT element");
  }

  std::unordered_map<std::string, std::optional<std::int64_t>> slots;
  if (const auto order = root->get_child_optional("TIME_ORDER")) {
    for (const auto &[tag, slot] : *order) {
      if (tag != "TIME_SLOT") continue;
      const auto id = slot.get<std::string>("<xmlattr>.TIME_SLOT_ID", "");
      if (id.empty()) {
        throw ParseError(source_name + ": TIME_SLOT without TIME_SLOT_ID");
      }
      std::optional<std::int64_t> value;
      if (const auto v = slot.get_optional<std::string>("<xmlattr>.TIME_VALUE")) {
        try {
          std::size_t used = 0;
          value = std::stoll(*v, &used);
          if (used != v->size()) throw std::invalid_argument(*v);
        } catch (const std::exception &) {
          throw ParseError(source_name + ": time slot " + id +
                           " has non-integer TIME_VALUE '" + *v + "'");
        }
      }
      slots[id] = value;
    }
  }

  const std::string stem = std::filesystem::path(source_name).stem().string();
  auto resolve = [&](const std::string &ref, const std::string &annotation) {
    const auto it = slots.find(ref);
    if (it == slots.end()) {
      throw ReferenceError(source_name + ": annotation " + annotation +
                           " references missing time slot \"" + ref + "\"");
    }
    if (!it->second) {
      throw FormatError(source_name + ": time slot " + ref +
                        " is unaligned (no TIME_VALUE)");
    }
    return *it->second;
  };

  std::vector<RawAnnotation> out;
  for (const auto &[tag, tier] : *root) {
    if (tag != "TIER") continue;
    const auto tier_id = tier.get<std::string>("<xmlattr>.TIER_ID", "");
    const auto participant = tier.get<std::string>("<xmlattr>.PARTICIPANT", "");
    for (const auto &[atag, wrapper] : tier) {
      if (atag != "ANNOTATION") continue;
      const auto aligned = wrapper.get_child_optional("ALIGNABLE_ANNOTATION");
      if (!aligned) continue;
      RawAnnotation a;
      const auto annotation_id =
          aligned->get<std::string>("<xmlattr>.ANNOTATION_ID", "");
      a.id = stem + "-" + (annotation_id.empty()
                               ? std::to_string(out.size())
                               : annotation_id);
      a.tier_id = tier_id;
      a.speaker = participant.empty() ? tier_id : participant;
      a.start_ms = resolve(
          aligned->get<std::string>("<xmlattr>.TIME_SLOT_REF1", ""), a.id);
      a.end_ms = resolve(
          aligned->get<std::string>("<xmlattr>.TIME_SLOT_REF2", ""), a.id);
      a.value = aligned->get<std::string>("ANNOTATION_VALUE", "");
      if (a.end_ms <= a.start_ms) {
        throw RangeError(source_name + ": annotation " + a.id +
                         " ends before it starts");
      }
      out.push_back(std::move(a));
    }
  }

  // Audio: a relative .wav media reference if there is one, else <stem>.wav.
  std::string audio = stem + ".wav";
  if (const auto header = root->get_child_optional("HEADER")) {
    for (const auto &[htag, media] : *header) {
      if (htag != "MEDIA_DESCRIPTOR") continue;
      auto rel = media.get<std::string>("<xmlattr>.RELATIVE_MEDIA_URL", "");
      if (rel.rfind("./", 0) == 0) rel = rel.substr(2);
      if (rel.size() > 4 && rel.substr(rel.size() - 4) == ".wav" &&
          rel.find("://") == std::string::npos) {
        audio = rel;
        break;
      }
    }
  }
  for (auto &a : out) a.audio = audio;
  return out;
}

std::vector<RawAnnotation> parse_eaf_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_eaf(in, path.filename().string());
}

// ---------------------------------------------------------------------------
// JSON-lines input manifest

namespace {

template <typename T>
T required(const json &obj, const char *key, const std::string &where) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing key \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception &) {
    throw SchemaError(where + ": key \"" + key + "\" has the wrong type");
  }
}

bool blank_line(const std::string &line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<RawAnnotation> parse_manifest(std::istream &in,
                                          const std::string &source_name) {
  std::vector<RawAnnotation> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (blank_line(line)) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    RawAnnotation a;
    a.id = required<std::string>(obj, "id", where);
    a.audio = required<std::string>(obj, "audio", where);
    const double start = required<double>(obj, "start_s", where);
    const double end = required<double>(obj, "end_s", where);
    a.value = required<std::string>(obj, "transcript", where);
    a.speaker = required<std::string>(obj, "speaker", where);
    a.tier_id = a.speaker;
    if (!(start >= 0.0) || !(start < end)) {
      throw RangeError(where + ": start_s must be >= 0 and < end_s");
    }
    a.start_ms = seconds_to_ms(start);
    a.end_ms = seconds_to_ms(end);
    if (a.end_ms <= a.start_ms) {
      throw RangeError(where + ": span shorter than 1 ms");
    }
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cleaning

std::string_view reason_code(RejectReason reason) {
  switch (reason) {
    case RejectReason::kEmpty: return "empty";
    case RejectReason::kPunctuationOnly: return "punctuation-only";
    case RejectReason::kContainsDigit: return "contains-digit";
    case RejectReason::kContainsCyrillic: return "contains-cyrillic";
    case RejectReason::kUnclearMarker: return "unclear-marker";
    case RejectReason::kTooShort: return "too-short";
    case RejectReason::kTooLong: return "too-long";
  }
  return "unknown";
}

std::optional<RejectReason> reason_from_code(std::string_view code) {
  for (RejectReason r : kAllRejectReasons) {
    if (reason_code(r) == code) return r;
  }
  return std::nullopt;
}

namespace {

std::string regex_escape(const std::string &s) {
  static const std::string special = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

std::string strip_events(const std::string &value,
                         const std::vector<std::string> &events) {
  if (events.empty()) return value;
  std::string alternatives;
  for (const auto &e : events) {
    if (!alternatives.empty()) alternatives += '|';
    alternatives += regex_escape(e);
  }
  const std::regex pattern(R"(\(\(\s*(?:)" + alternatives + R"()\s*\)\))",
                           std::regex::icase);
  return std::regex_replace(value, pattern, " ");
}

// "(word-)" -> "word", repeated until nothing changes (nested groups).
std::string resolve_self_corrections(std::string value) {
  static const std::regex pattern(R"(\(([^()]+)-\))");
  for (;;) {
    std::string next = std::regex_replace(value, pattern, "$1");
    if (next == value) return value;
    value = std::move(next);
  }
}

}  // namespace

CleanResult clean_transcript(std::string_view raw,
                             const CleaningPolicy &policy) {
  std::string value = text::nfc(raw);
  value = text::map_to_space(value, policy.invisible_spaces);
  value = strip_events(value, policy.nonverbal_events);
  value = text::collapse_whitespace(value);
  if (value.empty()) return CleanResult::reject(RejectReason::kEmpty);
  for (const auto &marker : policy.unclear_markers) {
    if (!marker.empty() && value.find(marker) != std::string::npos) {
      return CleanResult::reject(RejectReason::kUnclearMarker);
    }
  }
  if (text::is_punctuation_only(value)) {
    return CleanResult::reject(RejectReason::kPunctuationOnly);
  }
  if (text::contains_digit(value)) {
    return CleanResult::reject(RejectReason::kContainsDigit);
  }
  if (text::contains_cyrillic(value)) {
    return CleanResult::reject(RejectReason::kContainsCyrillic);
  }
  value = text::collapse_whitespace(resolve_self_corrections(value));
  return CleanResult::accept(std::move(value));
}

std::optional<RejectReason> filter_duration(std::int64_t duration_ms,
                                            const CleaningPolicy &policy) {
  if (duration_ms < policy.min_duration_ms) return RejectReason::kTooShort;
  if (duration_ms > policy.max_duration_ms) return RejectReason::kTooLong;
  return std::nullopt;
}

std::size_t CorpusStats::dropped_total() const {
  std::size_t n = 0;
  for (const auto &[reason, count] : dropped) n += count;
  return n;
}

CorpusManifest build_manifest(const std::vector<RawAnnotation> &raw,
                              const CleaningPolicy &policy) {
  CorpusManifest manifest;
  manifest.stats.total = raw.size();
  for (RejectReason r : kAllRejectReasons) manifest.stats.dropped[r] = 0;

  std::unordered_set<std::string> seen;
  for (const auto &a : raw) {
    if (!seen.insert(a.id).second) {
      throw SchemaError("duplicate utterance id \"" + a.id + "\"");
    }
    std::optional<RejectReason> reason = filter_duration(a.duration_ms(), policy);
    CleanResult cleaned = CleanResult::reject(RejectReason::kEmpty);
    if (!reason) {
      cleaned = clean_transcript(a.value, policy);
      if (!cleaned.accepted()) reason = cleaned.reason();
    }
    if (reason) {
      ++manifest.stats.dropped[*reason];
      manifest.rejections.push_back({a.id, *reason, a.value});
      continue;
    }
    UtteranceRecord r;
    r.id = a.id;
    r.audio = a.audio;
    r.start_ms = a.start_ms;
    r.end_ms = a.end_ms;
    r.transcript = cleaned.text();
    r.speaker = a.speaker;
    manifest.records.push_back(std::move(r));
  }
  manifest.stats.kept = manifest.records.size();
  return manifest;
}

// ---------------------------------------------------------------------------
// Canonical manifest I/O

void write_manifest(std::ostream &out,
                    const std::vector<UtteranceRecord> &records) {
  for (const auto &r : records) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["audio"] = r.audio;
    obj["start_s"] = r.start();
    obj["end_s"] = r.end();
    obj["duration_s"] = r.duration();
    obj["transcript"] = r.transcript;
    obj["speaker"] = r.speaker;
    out << obj.dump() << '\n';
  }
}

std::vector<UtteranceRecord> read_manifest(std::istream &in,
                                           const std::string &source_name) {
  std::vector<UtteranceRecord> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (blank_line(line)) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ParseError(where + ": " + e.what());
    }
    UtteranceRecord r;
    r.id = required<std::string>(obj, "id", where);
    r.audio = required<std::string>(obj, "audio", where);
    r.start_ms = seconds_to_ms(required<double>(obj, "start_s", where));
    r.end_ms = seconds_to_ms(required<double>(obj, "end_s", where));
    r.transcript = required<std::string>(obj, "transcript", where);
    r.speaker = required<std::string>(obj, "speaker", where);
    if (r.end_ms <= r.start_ms) throw RangeError(where + ": empty span");
    out.push_back(std::move(r));
  }
  return out;
}

void write_rejections(std::ostream &out,
                      const std::vector<Rejection> &rejections) {
  for (const auto &r : rejections) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["reason"] = std::string(reason_code(r.reason));
    obj["value"] = r.value;
    out << obj.dump() << '\n';
  }
}

std::string stats_table(const CorpusStats &stats) {
  std::ostringstream out;
  auto row = [&](std::string_view name, std::size_t n) {
    out << std::left << std::setw(20) << name << std::right << std::setw(8)
        << n << '\n';
  };
  out << std::left << std::setw(20) << "rule" << std::right << std::setw(8)
      << "count" << '\n';
  row("kept", stats.kept);
  for (RejectReason r : kAllRejectReasons) {
    const auto it = stats.dropped.find(r);
    row(reason_code(r), it == stats.dropped.end() ? 0 : it->second);
  }
  row("total", stats.total);
  return out.str();
}

// ---------------------------------------------------------------------------
// Filesystem driver

CorpusManifest prepare_corpus(const std::filesystem::path &corpus_dir,
                              const std::filesystem::path &out_dir,
                              const PrepareOptions &options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(corpus_dir)) {
    throw IoError("corpus directory not found: " + corpus_dir.string());
  }
  std::vector<fs::path> eafs;
  for (const auto &entry : fs::directory_iterator(corpus_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".eaf") {
      eafs.push_back(entry.path());
    }
  }
  std::sort(eafs.begin(), eafs.end());

  std::vector<RawAnnotation> raw;
  const std::set<std::string> tiers(options.tiers.begin(), options.tiers.end());
  for (const auto &path : eafs) {
    for (auto &a : parse_eaf_file(path)) {
      if (tiers.empty() || tiers.count(a.tier_id)) raw.push_back(std::move(a));
    }
  }
  const fs::path jsonl = corpus_dir / "manifest.jsonl";
  if (fs::exists(jsonl)) {
    std::ifstream in(jsonl);
    for (auto &a : parse_manifest(in, "manifest.jsonl")) raw.push_back(std::move(a));
  }

  // Audio checks: mono PCM-16, one sample rate, spans inside the file.
  std::map<std::string, WavInfo> audio;
  int rate = 0;
  for (const auto &a : raw) {
    auto it = audio.find(a.audio);
    if (it == audio.end()) {
      const fs::path path = corpus_dir / a.audio;
      WavInfo info = read_wav_info(path);
      if (info.format_tag != 1 || info.bits_per_sample != 16) {
        throw FormatError("unsupported encoding (need 16-bit PCM): " +
                          path.string());
      }
      if (info.channels != 1) {
        throw FormatError("audio must be mono: " + path.string());
      }
      if (rate != 0 && info.sample_rate != rate) {
        throw FormatError("sample rate mismatch: " + path.string() + " has " +
                          std::to_string(info.sample_rate) + " Hz, corpus has " +
                          std::to_string(rate) + " Hz");
      }
      rate = info.sample_rate;
      it = audio.emplace(a.audio, info).first;
    }
    const double length = double(it->second.num_frames) / it->second.sample_rate;
    if (a.end() > length + 1e-3) {
      throw RangeError("annotation " + a.id + " ends at " +
                       std::to_string(a.end()) + " s, beyond " + a.audio +
                       " (" + std::to_string(length) + " s)");
    }
  }

  CorpusManifest manifest = build_manifest(raw, options.policy);
  manifest.sample_rate = rate;

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "manifest.jsonl");
    write_manifest(out, manifest.records);
  }
  {
    std::ofstream out(out_dir / "rejections.jsonl");
    write_rejections(out, manifest.rejections);
  }
  {
    std::ofstream out(out_dir / "stats.txt");
    out << stats_table(manifest.stats);
  }
  ordered_json info;
  info["schema_version"] = 1;
  info["audio_root"] = fs::absolute(corpus_dir).lexically_normal().string();
  info["sample_rate"] = rate;
  info["total"] = manifest.stats.total;
  info["kept"] = manifest.stats.kept;
  ordered_json dropped = ordered_json::object();
  for (const auto &[reason, n] : manifest.stats.dropped) {
    dropped[std::string(reason_code(reason))] = n;
  }
  info["dropped"] = dropped;
  std::ofstream out(out_dir / "corpus.json");
  out << info.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (out_dir / "corpus.json").string());
  return manifest;
}

PreparedCorpus load_prepared_corpus(const std::filesystem::path &dir) {
  std::ifstream info_in(dir / "corpus.json");
  if (!info_in) {
    throw IoError("not a prepared corpus (missing corpus.json): " + dir.string());
  }
  json info;
  try {
    info = json::parse(info_in);
  } catch (const json::parse_error &e) {
    throw ParseError((dir / "corpus.json").string() + ": " + e.what());
  }
  PreparedCorpus corpus;
  corpus.audio_root = info.value("audio_root", dir.string());
  corpus.sample_rate = info.value("sample_rate", 0);
  std::ifstream in(dir / "manifest.jsonl");
  if (!in) throw IoError("missing manifest.jsonl in " + dir.string());
  corpus.records = read_manifest(in, "manifest.jsonl");
  return corpus;
}

}  // namespace fieldasr
