// tests/test_bilstm.cc
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

#include "fieldasr/bilstm.h"
#include "gradcheck.h"

using namespace fieldasr;

namespace {

ModelConfig tiny(int layers = 2, int hidden = 3, int input = 4, int vocab = 3) {
  ModelConfig c;
  c.num_layers = layers;
  c.hidden_units = hidden;
  c.input_dim = input;
  c.vocab_size = vocab;
  return c;
}

}  // namespace

TEST_CASE("parameter layout") {
  const ModelParameters<double> p(tiny());
  // Per layer and direction: 4H x I, 4H x H, 4H x 1; then output.
  const Index expected = 2 * (12 * 4 + 12 * 3 + 12) + 2 * (12 * 6 + 12 * 3 + 12) + 4 * 6 + 4;
  CHECK(p.size() == expected);
  CHECK(p.tensors().size() == 14);
  CHECK(p.tensors().front().name == "layer0.fwd.w_input");
  CHECK(p.tensors().back().name == "output.bias");
  CHECK(p.tensor_index("layer1.bwd.w_recurrent") == 10);
  CHECK_THROWS_AS(p.tensor_index("nope"), UsageError);
  CHECK(p.output_weights().rows() == 4);
  CHECK(p.output_weights().cols() == 6);
  ModelConfig bad = tiny();
  bad.vocab_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("the default model is 3 x 250 per direction over 123 inputs") {
  ModelConfig c;
  CHECK(c.num_layers == 3);
  CHECK(c.hidden_units == 250);
  CHECK(c.input_dim == 123);
}

TEST_CASE("initialisation is deterministic and Glorot bounded") {
  const ModelConfig c = tiny();
  const auto a = init_parameters(c, 5);
  const auto b = init_parameters(c, 5);
  const auto d = init_parameters(c, 6);
  CHECK(a.values() == b.values());
  CHECK(a.values() != d.values());
  for (std::size_t i = 0; i < a.tensors().size(); ++i) {
    const TensorInfo &t = a.tensors()[i];
    if (t.cols == 1) continue;
    const double limit = std::sqrt(6.0 / double(t.rows + t.cols));
    CHECK(a.tensor(i).cwiseAbs().maxCoeff() <= limit);
  }
  const auto bias = a.bias(0, Direction::kForward);
  CHECK(bias.middleRows(3, 3).minCoeff() == 1.0);
  CHECK(bias.topRows(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.output_bias().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward shape and direction independence") {
  Rng rng(51);
  const ModelConfig c = tiny(1, 2, 3, 2);
  const auto p = init_parameters(c, 1);
  const Matrix<double> x = oracle::random_matrix(rng, 6, 3);
  const Matrix<double> y = forward(p, x);
  CHECK(y.rows() == 6);
  CHECK(y.cols() == 3);
  // Changing the last frame leaves the forward states of earlier frames alone.
  ForwardCache<double> c1, c2;
  forward(p, x, &c1);
  Matrix<double> x2 = x;
  x2.row(5).setConstant(9.0);
  forward(p, x2, &c2);
  CHECK((c1.layers[0][0].hidden.leftCols(5) - c2.layers[0][0].hidden.leftCols(5))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((c1.layers[0][1].hidden.col(0) - c2.layers[0][1].hidden.col(0)).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS_AS(forward(p, oracle::random_matrix(rng, 6, 4)), ShapeError);
}

TEST_CASE("a stale forward cache is refused") {
  Rng rng(52);
  auto p = init_parameters(tiny(1, 2, 2, 2), 1);
  ForwardCache<double> cache;
  const Matrix<double> y = forward(p, oracle::random_matrix(rng, 3, 2), &cache);
  const Matrix<double> g = Matrix<double>::Ones(y.rows(), y.cols());
  CHECK_NOTHROW(backward(p, cache, g));
  p.values()[0] += 1.0;
  CHECK_THROWS_AS(backward(p, cache, g), UsageError);
  const Matrix<double> y2 = forward(p, oracle::random_matrix(rng, 3, 2), &cache);
  CHECK_THROWS_AS(backward(p, cache, Matrix<double>::Ones(2, y2.cols())), UsageError);
}

TEST_CASE("float and double forward agree") {
  Rng rng(53);
  const auto p = init_parameters(tiny(), 3);
  const Matrix<double> x = oracle::random_matrix(rng, 8, 4);
  const Matrix<double> yd = forward(p, x);
  const Matrix<float> xf = x.cast<float>();
  const Matrix<float> yf = forward(p.cast<float>(), xf);
  CHECK((yd - yf.cast<double>()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("BPTT gradients match central differences") {
  Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    const gradcheck::Outcome o = gradcheck::run(rng);
    INFO("worst tensor " << o.worst_tensor);
    CHECK(o.lstm_error < 1e-4);
    CHECK(o.ctc_error < 1e-6);
  }
}
