// tests/test_experiment.cc
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

#include <set>
#include <sstream>

#include "doctest.h"

#include "fieldasr/experiment.h"
#include "fieldasr/synthetic.h"
#include "test_support.h"

using namespace fieldasr;

namespace {

ExperimentConfig parse(const std::string &json) {
  std::istringstream in(json);
  return parse_experiment_config(in, "/base", "cfg.json");
}

}  // namespace

TEST_CASE("config parsing resolves paths and applies defaults") {
  const ExperimentConfig c = parse(
      R"({"schema_version":1,"name":"exp1","corpus":"prep","variant":"orig-with-spaces",
          "train":{"batch_size":4,"split":{"train":0.6,"dev":0.2,"test":0.2}},"seed":9})");
  CHECK(c.corpus == "/base/prep");
  CHECK(c.runs_dir == "/base/runs");
  CHECK(c.run_dir() == "/base/runs/exp1");
  CHECK(c.variant == TranscriptVariant::kOrigWithSpaces);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.seed == 9);
  CHECK(c.train.split.train == 0.6);
  CHECK(c.model.num_layers == 3);
  CHECK(c.decoder.type == "greedy");
  std::istringstream again(experiment_config_json(c));
  const ExperimentConfig d = parse_experiment_config(again, "/elsewhere", "x");
  CHECK(experiment_config_json(d) == experiment_config_json(c));
}

TEST_CASE("config errors are raised before any compute") {
  CHECK_THROWS_AS(parse(R"({"schema_version":1,"name":"e","corpus":"c","variant":"orig-no-spaces","colour":1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse(R"({"schema_version":2,"name":"e","corpus":"c","variant":"orig-no-spaces"})"),
                  ConfigError);
  CHECK_THROWS_AS(parse(R"({"name":"e","corpus":"c","variant":"orig-no-spaces"})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"schema_version":1,"name":"e","corpus":"c","variant":"ipa-with-spaces"})"),
                  ConfigError);
  CHECK_THROWS_AS(parse(R"({"schema_version":1,"name":"e","corpus":"c","variant":"orig-no-spaces",
                            "train":{"lr":1}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse(R"({"schema_version":1,"name":"e","corpus":"c","variant":"orig-no-spaces",
                            "subset_sizes":[50,25]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse("{not json"), ConfigError);
}

TEST_CASE("results table layout") {
  CHECK(emit_results_table({}) == "Experiment  Utterances  Minutes  LER\n");
  CHECK(emit_results_table({{"1", 1152, 108.0, 0.334}}) ==
        "Experiment  Utterances  Minutes  LER\n1  1152  108  0.334\n");
  const std::string t = emit_results_table({{"6-1", 448, 30.2, 0.3336}, {"6", 4224, 266.4, 0.149}});
  CHECK(t.find("0.334") != std::string::npos);
  CHECK(t.find("6-1   448   30  0.334\n") != std::string::npos);
  CHECK(t.find("6    4224  266  0.149\n") != std::string::npos);
}

TEST_CASE("results file round trip") {
  testing::TempDir dir("results");
  append_results(dir / "r.jsonl", {"a", 10, 1.5, 0.25});
  append_results(dir / "r.jsonl", {"b", 20, 3.0, 0.125});
  const auto rows = read_results(dir / "r.jsonl");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].experiment == "b");
  CHECK(rows[1].ler == 0.125);
}

TEST_CASE("property: sweep subsets are nested and keep train order") {
  std::vector<std::string> train;
  for (int i = 0; i < 240; ++i) train.push_back("syn" + std::to_string(i));
  std::vector<std::string> prev;
  for (std::size_t size : {25, 50, 100, 200, 240}) {
    const auto subset = nested_subset(train, size, 1);
    CHECK(subset.size() == size);
    const std::set<std::string> s(subset.begin(), subset.end());
    CHECK(s.size() == size);
    for (const auto &id : prev) CHECK(s.count(id) == 1);
    std::size_t pos = 0;
    for (const auto &id : subset) {
      while (pos < train.size() && train[pos] != id) ++pos;
      CHECK(pos < train.size());
    }
    prev = subset;
  }
  CHECK(nested_subset(train, 240, 1) == train);
  CHECK_THROWS_AS(nested_subset(train, 241, 1), ConfigError);
}

TEST_CASE("experiment data builds one vocabulary for the whole corpus") {
  testing::TempDir dir("expdata");
  SyntheticConfig sc;
  sc.num_utterances = 12;
  write_synthetic_corpus(dir / "syn", sc);
  prepare_corpus(dir / "syn", dir / "prep");
  ExperimentConfig c;
  c.name = "t";
  c.corpus = dir / "prep";
  c.runs_dir = dir / "runs";
  c.variant = TranscriptVariant::kOrigWithSpaces;
  const ExperimentData data(c);
  CHECK(data.ids().size() == 12);
  CHECK(data.vocab().num_labels() <= 4);
  CHECK(data.vocab().find("a").has_value());
  const auto ex = data.examples({data.ids()[0], data.ids()[1]}, dir / "cache");
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].features.cols() == 123);
  const auto again = data.examples({data.ids()[0]}, dir / "cache");
  CHECK(again[0].features == ex[0].features);
  CHECK(std::filesystem::exists(dir.path() / "cache" / (data.ids()[0] + ".feat")));
}
