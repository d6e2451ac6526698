// evaluation.cc
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

#include "fieldasr/evaluation.h"

#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "fieldasr/common.h"

namespace fieldasr {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<EditOp> align_sequences(std::span<const int> ref,
                                    std::span<const int> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t & {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        ops.push_back({same ? EditOp::Kind::kMatch : EditOp::Kind::kSubstitution,
                       ref[i - 1], hyp[j - 1]});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.push_back({EditOp::Kind::kDeletion, ref[i - 1], -1});
      --i;
    } else {
      ops.push_back({EditOp::Kind::kInsertion, -1, hyp[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

void count_confusions(std::span<const int> ref, std::span<const int> hyp,
                      const LabelVocabulary &vocab, ConfusionCounts &counts) {
  for (const EditOp &op : align_sequences(ref, hyp)) {
    const std::string r = op.ref >= 0 ? vocab.label(op.ref) : std::string();
    const std::string h = op.hyp >= 0 ? vocab.label(op.hyp) : std::string();
    ++counts[{r, h}];
  }
}

double corpus_ler(const std::vector<std::pair<LabelSequence, LabelSequence>> &pairs) {
  if (pairs.empty()) throw RangeError("LER needs at least one utterance");
  std::size_t distance = 0;
  std::size_t length = 0;
  for (const auto &[ref, hyp] : pairs) {
    if (ref.labels.empty()) {
      throw RangeError("empty reference for utterance " + ref.utterance_id);
    }
    distance += edit_distance(ref.labels, hyp.labels);
    length += ref.labels.size();
  }
  return double(distance) / double(length);
}

EvaluationReport evaluate(const std::vector<LabelSequence> &refs,
                          const std::vector<LabelSequence> &hyps,
                          const LabelVocabulary &vocab) {
  if (refs.size() != hyps.size()) {
    throw UsageError("reference / hypothesis count mismatch");
  }
  std::vector<std::pair<LabelSequence, LabelSequence>> pairs;
  EvaluationReport report;
  double macro = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    pairs.emplace_back(refs[i], hyps[i]);
    UtteranceScore s;
    s.id = refs[i].utterance_id;
    s.distance = edit_distance(refs[i].labels, hyps[i].labels);
    s.ref_len = refs[i].labels.size();
    s.ref_text = decode_labels(refs[i].labels, vocab);
    s.hyp_text = decode_labels(hyps[i].labels, vocab);
    if (s.ref_len > 0) macro += double(s.distance) / double(s.ref_len);
    report.utterances.push_back(std::move(s));
    count_confusions(refs[i].labels, hyps[i].labels, vocab, report.confusions);
  }
  report.ler = corpus_ler(pairs);
  report.ler_macro = macro / double(refs.size());
  return report;
}

namespace {

std::string show(const std::string &label) {
  if (label.empty()) return "\xE2\x88\x85";  // empty-set sign
  if (label == kSpaceLabel) return "<space>";
  return label;
}

}  // namespace

std::string confusion_report(const EvaluationReport &report, std::size_t top_k) {
  std::vector<std::pair<ConfusionKey, std::size_t>> errors;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_label;
  for (const auto &[key, count] : report.confusions) {
    if (key.first == key.second) continue;
    errors.emplace_back(key, count);
    if (key.second.empty()) per_label[key.first].first += count;
    if (key.first.empty()) per_label[key.second].second += count;
  }
  // Count descending; ties keep the map's lexicographic order.
  std::stable_sort(errors.begin(), errors.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> totals(
      per_label.begin(), per_label.end());
  std::stable_sort(totals.begin(), totals.end(), [](const auto &a, const auto &b) {
    return a.second.first + a.second.second > b.second.first + b.second.second;
  });

  std::ostringstream out;
  out << "# confusions (micro LER " << std::fixed << std::setprecision(3)
      << report.ler << ")\n";
  out << "ref\thyp\tcount\n";
  for (std::size_t i = 0; i < std::min(top_k, errors.size()); ++i) {
    out << show(errors[i].first.first) << '\t' << show(errors[i].first.second)
        << '\t' << errors[i].second << '\n';
  }
  out << "# per-label deletions / insertions\n";
  out << "label\tdeleted\tinserted\n";
  for (std::size_t i = 0; i < std::min(top_k, totals.size()); ++i) {
    out << show(totals[i].first) << '\t' << totals[i].second.first << '\t'
        << totals[i].second.second << '\n';
  }
  return out.str();
}

std::string report_to_json(const EvaluationReport &report) {
  ordered_json j;
  j["ler"] = report.ler;
  j["ler_macro"] = report.ler_macro;
  j["averaging"] = "micro";
  j["decoder"] = report.decoder;
  j["variant"] = report.variant;
  j["n_utterances"] = report.utterances.size();
  ordered_json pairs = ordered_json::array();
  for (const auto &u : report.utterances) {
    pairs.push_back({{"id", u.id},
                     {"distance", u.distance},
                     {"ref_len", u.ref_len},
                     {"ref", u.ref_text},
                     {"hyp", u.hyp_text}});
  }
  j["pairs"] = pairs;
  ordered_json confusions = ordered_json::array();
  for (const auto &[key, count] : report.confusions) {
    confusions.push_back({{"ref", key.first}, {"hyp", key.second}, {"count", count}});
  }
  j["confusions"] = confusions;
  return j.dump(2) + "\n";
}

EvaluationReport report_from_json(std::istream &in) {
  EvaluationReport report;
  try {
    const json j = json::parse(in);
    report.ler = j.at("ler").get<double>();
    report.ler_macro = j.value("ler_macro", 0.0);
    report.decoder = j.value("decoder", "");
    report.variant = j.value("variant", "");
    for (const auto &p : j.at("pairs")) {
      report.utterances.push_back({p.at("id").get<std::string>(),
                                   p.at("distance").get<std::size_t>(),
                                   p.at("ref_len").get<std::size_t>(),
                                   p.value("ref", ""), p.value("hyp", "")});
    }
    for (const auto &c : j.at("confusions")) {
      report.confusions[{c.at("ref").get<std::string>(),
                         c.at("hyp").get<std::string>()}] =
          c.at("count").get<std::size_t>();
    }
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("evaluation report: ") + e.what());
  } catch (const json::exception &e) {
    throw SchemaError(std::string("evaluation report: ") + e.what());
  }
  return report;
}

}  // namespace fieldasr
