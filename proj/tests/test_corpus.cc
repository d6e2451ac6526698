// tests/test_corpus.cc
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

#include <sstream>

#include "doctest.h"

#include "fieldasr/audio.h"
#include "fieldasr/corpus.h"
#include "fieldasr/random.h"
#include "fieldasr/text.h"
#include "test_support.h"

using namespace fieldasr;

namespace {

std::string eaf(const std::string &slots, const std::string &annotations) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<ANNOTATION_DOCUMENT>\n"
         "<HEADER TIME_UNITS=\"milliseconds\"/>\n"
         "<TIME_ORDER>" + slots + "</TIME_ORDER>\n"
         "<TIER TIER_ID=\"tx\" PARTICIPANT=\"KA\">" + annotations + "</TIER>\n"
         "</ANNOTATION_DOCUMENT>\n";
}

std::string annotation(const std::string &id, const std::string &a, const std::string &b,
                       const std::string &value) {
  return "<ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID=\"" + id +
         "\" TIME_SLOT_REF1=\"" + a + "\" TIME_SLOT_REF2=\"" + b +
         "\"><ANNOTATION_VALUE>" + value + "</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>";
}

const std::string kTwoSlots =
    "<TIME_SLOT TIME_SLOT_ID=\"ts1\" TIME_VALUE=\"1000\"/>"
    "<TIME_SLOT TIME_SLOT_ID=\"ts2\" TIME_VALUE=\"2500\"/>";

std::string reason_of(const std::string &value) {
  const CleanResult r = clean_transcript(value);
  return r.accepted() ? "accept:" + r.text() : std::string(reason_code(r.reason()));
}

}  // namespace

TEST_CASE("parse_eaf resolves time slots") {
  std::istringstream in(eaf(kTwoSlots, annotation("a1", "ts1", "ts2", "ej ku?pi")));
  const auto anns = parse_eaf(in, "rec");
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].start() == 1.0);
  CHECK(anns[0].end() == 2.5);
  CHECK(anns[0].value == "ej ku?pi");
  CHECK(anns[0].id == "rec-a1");
  CHECK(anns[0].speaker == "KA");
  CHECK(anns[0].audio == "rec.wav");
}

TEST_CASE("parse_eaf with zero annotations is empty") {
  std::istringstream in(eaf(kTwoSlots, ""));
  CHECK(parse_eaf(in, "rec").empty());
}

TEST_CASE("parse_eaf reports a dangling slot reference by id") {
  std::istringstream in(eaf(kTwoSlots, annotation("a1", "ts1", "ts9", "x")));
  try {
    parse_eaf(in, "rec");
    FAIL("expected a reference error");
  } catch (const ReferenceError &e) {
    CHECK(std::string(e.what()).find("ts9") != std::string::npos);
  }
}

TEST_CASE("malformed XML is a parse error with a line number") {
  std::istringstream in("<?xml version=\"1.0\"?>\n<ANNOTATION_DOCUMENT>\n<TIER>\n</ANNOTATION_DOCUMENT>\n");
  try {
    parse_eaf(in, "bad.eaf");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("bad.eaf:") != std::string::npos);
  }
}

TEST_CASE("parse_manifest examples and errors") {
  {
    std::istringstream in(
        "{\"id\":\"u1\",\"audio\":\"a.wav\",\"start_s\":0.5,\"end_s\":1.5,"
        "\"transcript\":\"mobi\",\"speaker\":\"S\"}\n");
    const auto anns = parse_manifest(in, "m.jsonl");
    REQUIRE(anns.size() == 1);
    CHECK(anns[0].start_ms == 500);
    CHECK(anns[0].end_ms == 1500);
  }
  {
    std::istringstream in(
        "{\"id\":\"u1\",\"audio\":\"a.wav\",\"start_s\":1.5,\"end_s\":0.5,"
        "\"transcript\":\"mobi\",\"speaker\":\"S\"}\n");
    CHECK_THROWS_AS(parse_manifest(in, "m.jsonl"), RangeError);
  }
  {
    std::istringstream in("");
    CHECK(parse_manifest(in, "m.jsonl").empty());
  }
  {
    std::istringstream in(
        "\n{\"id\":\"u1\",\"audio\":\"a.wav\",\"start_s\":0.5,\"transcript\":\"x\","
        "\"speaker\":\"S\"}\n");
    try {
      parse_manifest(in, "m.jsonl");
      FAIL("expected a schema error");
    } catch (const SchemaError &e) {
      CHECK(std::string(e.what()).find("m.jsonl:2") != std::string::npos);
    }
  }
}

TEST_CASE("clean_transcript examples") {
  CHECK(reason_of("I d\xC4\xAB po\xCA\x94to (kuzab-) kuzazi mobi.") ==
        "accept:I d\xC4\xAB po\xCA\x94to kuzab kuzazi mobi.");
  CHECK(reason_of("...") == "punctuation-only");
  CHECK(reason_of("3 po\xCA\x94to") == "contains-digit");
  CHECK(reason_of("\xD0\xBE\xD0\xBD \xD0\xBF\xD0\xBE\xD1\x88\xD1\x91\xD0\xBB") ==
        "contains-cyrillic");
  CHECK(reason_of("") == "empty");
  CHECK(reason_of("   ") == "empty");
  CHECK(reason_of("kuza ((unclear)) mobi") == "unclear-marker");
  CHECK(reason_of("ej ((Laughter)) mobi") == "accept:ej mobi");
  CHECK(reason_of("((cough))") == "empty");
  CHECK(reason_of("ej\xC2\xA0ku\xE2\x80\x8B pi\xE2\x80\xAF") == "accept:ej ku pi");
  CHECK(reason_of("(a-) (b-)") == "accept:a b");
}

TEST_CASE("filter_duration bounds are inclusive") {
  CHECK(filter_duration(10500) == RejectReason::kTooLong);
  CHECK(filter_duration(300) == RejectReason::kTooShort);
  CHECK_FALSE(filter_duration(400).has_value());
  CHECK_FALSE(filter_duration(10000).has_value());
  CHECK(filter_duration(399) == RejectReason::kTooShort);
  CHECK(filter_duration(10001) == RejectReason::kTooLong);
}

TEST_CASE("reason codes round trip") {
  for (RejectReason r : kAllRejectReasons) CHECK(reason_from_code(reason_code(r)) == r);
  CHECK_FALSE(reason_from_code("nope").has_value());
}

namespace {

// Random annotation text over pieces that trigger every rule.
std::string random_value(Rng &rng) {
  static const std::vector<std::string> pieces = {
      "ej",   "ku",   "mobi",        "d\xC4\xAB", "di\xCC\x84", "po\xCA\x94to",
      " ",    "  ",   "\xC2\xA0",    "\xE2\x80\x8B", ".",        "?",
      "3",    "\xD0\xBE", "((cough))", "((NOISE))",  "((",       "))",
      "(kuzab-)", "(",  ")",           "-",          "a-b"};
  std::string s;
  const auto n = rng.below(7);
  for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
  return s;
}

std::vector<RawAnnotation> random_raw(Rng &rng, int n) {
  std::vector<RawAnnotation> raw;
  for (int i = 0; i < n; ++i) {
    RawAnnotation a;
    a.id = "u" + std::to_string(i);
    a.audio = "s.wav";
    a.speaker = "S";
    a.start_ms = std::int64_t(rng.below(100000));
    a.end_ms = a.start_ms + 1 + std::int64_t(rng.below(12000));
    a.value = random_value(rng);
    raw.push_back(a);
  }
  return raw;
}

}  // namespace

TEST_CASE("property: kept plus dropped equals total") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto raw = random_raw(rng, int(rng.below(40)));
    const CorpusManifest m = build_manifest(raw);
    CHECK(m.stats.total == raw.size());
    CHECK(m.stats.kept + m.stats.dropped_total() == m.stats.total);
    CHECK(m.records.size() == m.stats.kept);
    CHECK(m.rejections.size() == m.stats.dropped_total());
  }
}

TEST_CASE("property: cleaning is idempotent") {
  Rng rng(22);
  int accepted = 0;
  for (int i = 0; i < 3000; ++i) {
    const CleanResult once = clean_transcript(random_value(rng));
    if (!once.accepted()) continue;
    ++accepted;
    const CleanResult twice = clean_transcript(once.text());
    REQUIRE(twice.accepted());
    CHECK(twice.text() == once.text());
  }
  CHECK(accepted > 100);
}

TEST_CASE("property: output records pass every filter again") {
  Rng rng(23);
  const CleaningPolicy policy;
  for (int trial = 0; trial < 30; ++trial) {
    for (const auto &r : build_manifest(random_raw(rng, 40)).records) {
      CHECK_FALSE(filter_duration(r.end_ms - r.start_ms).has_value());
      CHECK_FALSE(text::contains_digit(r.transcript));
      CHECK_FALSE(text::contains_cyrillic(r.transcript));
      CHECK(r.transcript.find("((") == std::string::npos);
      CHECK(r.transcript.find("))") == std::string::npos);
      CHECK_FALSE(r.transcript.empty());
    }
  }
}

TEST_CASE("property: manifest write-read-write is byte identical") {
  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const CorpusManifest m = build_manifest(random_raw(rng, 30));
    std::ostringstream first;
    write_manifest(first, m.records);
    std::istringstream in(first.str());
    const auto back = read_manifest(in, "m");
    std::ostringstream second;
    write_manifest(second, back);
    CHECK(first.str() == second.str());
  }
}

TEST_CASE("duplicate ids are a schema error") {
  RawAnnotation a;
  a.id = "x";
  a.start_ms = 0;
  a.end_ms = 1000;
  a.value = "mobi";
  CHECK_THROWS_AS(build_manifest({a, a}), SchemaError);
}

TEST_CASE("prepare_corpus on the violations fixture") {
  testing::TempDir dir("prepare");
  const auto corpus = dir / "corpus";
  std::filesystem::create_directories(corpus);
  std::filesystem::copy_file(std::filesystem::path(FIELDASR_FIXTURE_DIR) / "violations" / "session.eaf",
                             corpus / "session.eaf");
  AudioBuffer silence;
  silence.samples = Vector<double>::Zero(40 * 16000);
  write_wav(corpus / "session.wav", silence);
  const CorpusManifest m = prepare_corpus(corpus, dir / "out");
  CHECK(testing::read_file(dir / "out" / "manifest.jsonl") ==
        testing::read_file(std::filesystem::path(FIELDASR_FIXTURE_DIR) / "violations" /
                           "expected_manifest.jsonl"));
  const PreparedCorpus back = load_prepared_corpus(dir / "out");
  CHECK(back.records.size() == 7);
  CHECK(back.sample_rate == 16000);
  CHECK(std::filesystem::exists(back.audio_path(back.records[0])));
}

TEST_CASE("prepare_corpus rejects spans beyond the audio and stereo files") {
  testing::TempDir dir("prepare-bad");
  const auto corpus = dir / "corpus";
  std::filesystem::create_directories(corpus);
  testing::write_file(corpus / "manifest.jsonl",
                      "{\"id\":\"u1\",\"audio\":\"a.wav\",\"start_s\":0.5,\"end_s\":3.0,"
                      "\"transcript\":\"mobi\",\"speaker\":\"S\"}\n");
  AudioBuffer a;
  a.samples = Vector<double>::Zero(16000);
  write_wav(corpus / "a.wav", a);
  CHECK_THROWS_AS(prepare_corpus(corpus, dir / "out"), RangeError);
}
