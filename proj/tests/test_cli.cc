// tests/test_cli.cc
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

#include <algorithm>
#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include "doctest.h"

#include "test_support.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const testing::TempDir &dir, const std::string &args) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string("\"") + FIELDASR_CLI + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::read_file(out);
  return r;
}

std::string config(const fs::path &corpus, const std::string &variant,
                   const std::string &extra = "") {
  return R"({"schema_version":1,"name":"cli","corpus":")" + corpus.string() +
         R"(","variant":")" + variant + R"(","runs_dir":"runs")" + extra + "}";
}

}  // namespace

TEST_CASE("usage and config errors exit 1") {
  testing::TempDir dir("cli-config");
  CHECK(run(dir, "").code == 1);
  CHECK(run(dir, "frobnicate").code == 1);
  CHECK(run(dir, "--help").code == 0);
  CHECK(run(dir, "train --config " + (dir / "missing.json").string()).code == 1);
  testing::write_file(dir / "bad.json", config(dir.path(), "ipa-with-spaces"));
  CHECK(run(dir, "train --config " + (dir / "bad.json").string()).code == 1);
  testing::write_file(dir / "key.json", config(dir.path(), "orig-no-spaces", R"(,"lr":0.1)"));
  CHECK(run(dir, "train --config " + (dir / "key.json").string()).code == 1);
}

TEST_CASE("data errors exit 2") {
  testing::TempDir dir("cli-data");
  CHECK(run(dir, "prepare " + (dir / "nowhere").string() + " --out " + (dir / "p").string())
            .code == 2);
  testing::write_file(dir / "c.json", config(dir / "nowhere", "orig-no-spaces"));
  CHECK(run(dir, "train --config " + (dir / "c.json").string()).code == 2);
}

TEST_CASE("end to end: synth, prepare, train, evaluate, transcribe, error-report") {
  testing::TempDir dir("cli-e2e");
  REQUIRE(run(dir, "synth --out " + (dir / "syn").string() + " --utterances 12").code == 0);
  const Result prep =
      run(dir, "prepare " + (dir / "syn").string() + " --out " + (dir / "prep").string());
  REQUIRE(prep.code == 0);
  testing::write_file(
      dir / "c.json",
      config(dir / "prep", "orig-with-spaces",
             R"(,"train":{"max_epochs":2,"batch_size":4},"features":{"num_mel":10,"delta_order":0})"));
  const Result tr = run(dir, "train --fast --quiet --config " + (dir / "c.json").string());
  REQUIRE(tr.code == 0);
  CHECK(tr.out.rfind("Experiment  Utterances  Minutes  LER\n", 0) == 0);
  const fs::path run_dir = dir.path() / "runs" / "cli";
  CHECK(fs::exists(run_dir / "best.ckpt"));
  const Result ev = run(dir, "evaluate --run " + run_dir.string() + " --split test");
  REQUIRE(ev.code == 0);
  CHECK(ev.out == tr.out);

  const std::string wav = (dir.path() / "syn" / "wav" / "syn00.wav").string();
  const Result tx = run(dir, "transcribe --run " + run_dir.string() + " " + wav + " " +
                                 (dir / "missing.wav").string() + " " + wav + " --beam 4");
  CHECK(tx.code == 2);
  CHECK(std::count(tx.out.begin(), tx.out.end(), '\n') == 2);

  const Result er = run(dir, "error-report --run " + run_dir.string() + " --top-k 3");
  CHECK(er.code == 0);
  CHECK(er.out.rfind("# confusions", 0) == 0);
}
