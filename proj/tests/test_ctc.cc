// tests/test_ctc.cc
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

#include "doctest.h"

#include "fieldasr/ctc.h"
#include "oracles.h"

using namespace fieldasr;

namespace {

struct Instance {
  Matrix<double> logits;
  std::vector<int> target;
};

// T <= 5, V <= 3, |target| <= 3, always feasible.
Instance random_instance(Rng &rng) {
  const Index frames = 1 + Index(rng.below(5));
  const int vocab = 1 + int(rng.below(3));
  Instance in;
  in.logits = oracle::random_matrix(rng, frames, vocab + 1, 2.0);
  const auto len = rng.below(4);
  for (std::uint64_t i = 0; i < len; ++i) in.target.push_back(1 + int(rng.below(std::uint64_t(vocab))));
  while (ctc_min_frames(in.target) > frames) in.target.pop_back();
  return in;
}

}  // namespace

TEST_CASE("collapse and minimum frames") {
  CHECK(collapse(std::vector<int>{1, 1, 0, 1, 2, 2, 0}) == std::vector<int>{1, 1, 2});
  CHECK(collapse(std::vector<int>{0, 0}).empty());
  CHECK(ctc_min_frames(std::vector<int>{1, 1, 2}) == 4);
  CHECK(ctc_min_frames(std::vector<int>{}) == 0);
}

TEST_CASE("loss equals exhaustive path enumeration") {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng);
    const double expected = oracle::ctc_negative_log_likelihood(in.logits, in.target);
    const double got = ctc_loss<double>(in.logits, in.target).loss;
    CHECK(std::abs(got - expected) < 1e-9);
    CHECK(-sequence_log_probability<double>(in.logits, in.target) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("logits gradient matches central differences") {
  Rng rng(62);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng);
    const CtcResult<double> r = ctc_loss<double>(in.logits, in.target);
    auto f = [&](const Vector<double> &v) {
      const Matrix<double> m =
          Eigen::Map<const Matrix<double>>(v.data(), in.logits.rows(), in.logits.cols());
      return ctc_loss<double>(m, in.target).loss;
    };
    const Vector<double> x = Eigen::Map<const Vector<double>>(in.logits.data(), in.logits.size());
    const Vector<double> numeric = oracle::numeric_gradient(f, x, 1e-5);
    const Vector<double> analytic = Eigen::Map<const Vector<double>>(r.grad.data(), r.grad.size());
    CHECK(oracle::relative_error(analytic, numeric) < 1e-6);
    // Each gradient row is softmax minus a distribution, so it sums to zero.
    CHECK(r.grad.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("loss is invariant to shifting a logits row") {
  Rng rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    Instance in = random_instance(rng);
    const double before = ctc_loss<double>(in.logits, in.target).loss;
    in.logits.row(Index(rng.below(std::uint64_t(in.logits.rows())))).array() += rng.uniform(-50, 50);
    CHECK(ctc_loss<double>(in.logits, in.target).loss == doctest::Approx(before).epsilon(1e-11));
  }
}

TEST_CASE("probabilities of all label sequences sum to one") {
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng);
    long double total = 0;
    for (const auto &[seq, p] : oracle::sequence_probabilities(in.logits)) {
      total += std::exp(sequence_log_probability<double>(in.logits, seq));
      CHECK(std::exp(sequence_log_probability<double>(in.logits, seq)) ==
            doctest::Approx(double(p)).epsilon(1e-10));
    }
    CHECK(double(total) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("infeasible and out-of-range targets") {
  const Matrix<double> logits = Matrix<double>::Zero(2, 3);
  CHECK_THROWS_AS(ctc_loss<double>(logits, std::vector<int>{1, 1}), InfeasibleTargetError);
  CHECK_THROWS_AS(ctc_loss<double>(logits, std::vector<int>{3}), RangeError);
  CHECK_THROWS_AS(ctc_loss<double>(logits, std::vector<int>{0}), RangeError);
  CHECK(sequence_log_probability<double>(logits, std::vector<int>{1, 1, 1}) == kLogZero<double>);
  CHECK_NOTHROW(ctc_loss<double>(logits, std::vector<int>{1, 2}));
}

TEST_CASE("long utterances stay finite") {
  Rng rng(65);
  const Matrix<double> logits = oracle::random_matrix(rng, 1000, 30, 3.0);
  std::vector<int> target;
  for (int i = 0; i < 200; ++i) target.push_back(1 + int(rng.below(29)));
  const CtcResult<double> r = ctc_loss<double>(logits, target);
  CHECK(std::isfinite(r.loss));
  CHECK(r.grad.allFinite());
  const CtcResult<float> rf = ctc_loss<float>(logits.cast<float>(), target);
  CHECK(std::isfinite(rf.loss));
}

TEST_CASE("greedy decoding breaks ties toward the lowest index") {
  Matrix<double> logits(3, 3);
  logits << 1, 1, 0,  // tie blank / 1 -> blank
      0, 2, 2,        // tie 1 / 2 -> 1
      0, 0, 5;
  CHECK(greedy_decode<double>(logits).labels == std::vector<int>{1, 2});
}

TEST_CASE("beam search finds the most probable sequence") {
  Rng rng(66);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance in = random_instance(rng);
    const auto probs = oracle::sequence_probabilities(in.logits);
    long double best = -1;
    for (const auto &[seq, p] : probs) best = std::max(best, p);
    const DecodedSequence d = beam_decode<double>(in.logits, 9);
    CHECK(double(probs.at(d.labels)) == doctest::Approx(double(best)).epsilon(1e-12));
    const DecodedSequence g = greedy_decode<double>(in.logits);
    CHECK(probs.at(d.labels) >= probs.at(g.labels) * (1 - 1e-12));
  }
}

TEST_CASE("beam search on T=2, V=2 with width 9 matches enumeration") {
  Matrix<double> logits(2, 3);
  logits << std::log(0.4), std::log(0.35), std::log(0.25), std::log(0.4), std::log(0.35),
      std::log(0.25);
  // p([1]) = .35*.35 + .4*.35 + .35*.4 = 0.4025 beats p([]) = 0.16.
  const DecodedSequence d = beam_decode<double>(logits, 9);
  CHECK(d.labels == std::vector<int>{1});
  CHECK(std::exp(d.score) == doctest::Approx(0.4025));
}

TEST_CASE("beam width 1 on peaked logits equals greedy") {
  Rng rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix<double> logits = Matrix<double>::Constant(6, 4, -10.0);
    for (Index t = 0; t < 6; ++t) logits(t, Index(rng.below(4))) = 10.0;
    CHECK(beam_decode<double>(logits, 1).labels == greedy_decode<double>(logits).labels);
  }
}

TEST_CASE("blank-dominated logits decode to nothing") {
  Matrix<double> logits = Matrix<double>::Zero(5, 3);
  logits.col(0).setConstant(8.0);
  CHECK(greedy_decode<double>(logits).labels.empty());
  CHECK(beam_decode<double>(logits, 4).labels.empty());
  CHECK_THROWS_AS(beam_decode<double>(logits, 0), ConfigError);
}
