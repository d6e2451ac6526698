// tests/test_optimizer.cc
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

#include "fieldasr/optimizer.h"
#include "oracles.h"

using namespace fieldasr;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.num_layers = 1;
  c.hidden_units = 2;
  c.input_dim = 2;
  c.vocab_size = 2;
  return c;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged and decays moments") {
  auto p = init_parameters(tiny(), 1);
  const Vector<double> before = p.values();
  ModelParameters<double> g(tiny());
  AdamState s(p.size());
  s.first_moment.setConstant(1.0);
  s.second_moment.setConstant(1.0);
  AdamConfig cfg;
  cfg.learning_rate = 0.0;
  adam_step(p, g, s, cfg);
  CHECK(p.values() == before);
  CHECK(s.first_moment[0] == doctest::Approx(0.9));
  CHECK(s.second_moment[0] == doctest::Approx(0.999));
  CHECK(s.step == 1);

  AdamState fresh(p.size());
  adam_step(p, g, fresh, AdamConfig{});
  CHECK(p.values() == before);
}

TEST_CASE("first step with constant gradient moves by lr against the sign") {
  auto p = init_parameters(tiny(), 2);
  const Vector<double> before = p.values();
  ModelParameters<double> g(tiny());
  Rng rng(71);
  for (Index i = 0; i < g.size(); ++i) g.values()[i] = (rng.uniform() < 0.5 ? -1 : 1) * 0.01;
  AdamState s(p.size());
  AdamConfig cfg;
  adam_step(p, g, s, cfg);
  const Vector<double> step = p.values() - before;
  for (Index i = 0; i < step.size(); ++i) {
    CHECK(std::abs(std::abs(step[i]) - 1e-3) < 1e-6);
    CHECK(step[i] * g.values()[i] < 0);
  }
}

TEST_CASE("global norm clipping scales the gradient") {
  ModelParameters<double> p(tiny());
  ModelParameters<double> g(tiny());
  g.values()[0] = 6.0;
  g.values()[1] = 8.0;
  AdamState s(p.size());
  const AdamStepInfo info = adam_step(p, g, s, AdamConfig{});
  CHECK(info.grad_norm == doctest::Approx(10.0));
  CHECK(info.clip_scale == doctest::Approx(0.5));
  // The first moment sees the clipped gradient.
  CHECK(s.first_moment[0] == doctest::Approx(0.1 * 3.0));
  CHECK(s.first_moment[1] == doctest::Approx(0.1 * 4.0));
}

TEST_CASE("non-finite gradients abort naming the tensor") {
  auto p = init_parameters(tiny(), 3);
  const Vector<double> before = p.values();
  ModelParameters<double> g(tiny());
  const std::size_t idx = g.tensor_index("output.weight");
  g.tensor(idx)(0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState s(p.size());
  try {
    adam_step(p, g, s, AdamConfig{});
    FAIL("expected a training error");
  } catch (const TrainingError &e) {
    CHECK(std::string(e.what()).find("output.weight") != std::string::npos);
  }
  CHECK(p.values() == before);
  CHECK(s.step == 0);
}

TEST_CASE("weight decay pulls toward zero") {
  ModelParameters<double> p(tiny());
  p.values().setConstant(1.0);
  ModelParameters<double> g(tiny());
  AdamState s(p.size());
  AdamConfig cfg;
  cfg.weight_decay = 0.1;
  adam_step(p, g, s, cfg);
  CHECK(p.values().maxCoeff() < 1.0);
}

TEST_CASE("Adam follows the reference recursion over several steps") {
  ModelParameters<double> p(tiny());
  ModelParameters<double> g(tiny());
  AdamState s(p.size());
  AdamConfig cfg;
  cfg.clip_norm = 0.0;
  double theta = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double grad = 0.1 * t;
    g.values().setConstant(grad);
    adam_step(p, g, s, cfg);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    theta -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.values()[0] == doctest::Approx(theta).epsilon(1e-12));
  }
}
