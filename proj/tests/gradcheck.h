// tests/gradcheck.h
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

#ifndef FIELDASR_TESTS_GRADCHECK_H_
#define FIELDASR_TESTS_GRADCHECK_H_

#include <string>
#include <vector>

#include "fieldasr/bilstm.h"
#include "fieldasr/ctc.h"
#include "oracles.h"

namespace gradcheck {

using namespace fieldasr;

struct Outcome {
  double ctc_error = 0.0;   // logits gradient
  double lstm_error = 0.0;  // worst parameter tensor
  std::string worst_tensor;
};

// Random tiny model, features and feasible target; compares analytic
// gradients of the CTC loss against central differences.
inline Outcome run(Rng &rng, double h = 1e-5) {
  ModelConfig cfg;
  cfg.num_layers = 1 + int(rng.below(2));
  cfg.hidden_units = 1 + int(rng.below(3));
  cfg.input_dim = 1 + int(rng.below(3));
  cfg.vocab_size = 1 + int(rng.below(3));
  const Index frames = 1 + Index(rng.below(5));
  std::vector<int> target;
  const auto len = rng.below(3);
  for (std::uint64_t i = 0; i < len; ++i) {
    target.push_back(1 + int(rng.below(std::uint64_t(cfg.vocab_size))));
  }
  while (ctc_min_frames(target) > frames) target.pop_back();

  ModelParameters<double> params = init_parameters(cfg, rng.next());
  // Perturb so biases and the output layer are not at special values.
  for (Index i = 0; i < params.size(); ++i) params.values()[i] += 0.3 * rng.normal();
  const Matrix<double> x = oracle::random_matrix(rng, frames, cfg.input_dim);

  Outcome out;
  ForwardCache<double> cache;
  const Matrix<double> logits = forward(params, x, &cache);
  const CtcResult<double> ctc = ctc_loss<double>(logits, target);

  {
    const Vector<double> flat = Eigen::Map<const Vector<double>>(logits.data(), logits.size());
    auto f = [&](const Vector<double> &v) {
      const Matrix<double> m = Eigen::Map<const Matrix<double>>(v.data(), logits.rows(), logits.cols());
      return ctc_loss<double>(m, target).loss;
    };
    const Vector<double> numeric = oracle::numeric_gradient(f, flat, h);
    const Vector<double> analytic = Eigen::Map<const Vector<double>>(ctc.grad.data(), ctc.grad.size());
    out.ctc_error = oracle::relative_error(analytic, numeric);
  }

  ModelParameters<double> grads = backward(params, cache, ctc.grad);
  const Vector<double> theta = params.values();
  auto loss_at = [&](const Vector<double> &v) {
    ModelParameters<double> p = params;
    p.values() = v;
    return ctc_loss<double>(forward(p, x), target).loss;
  };
  const Vector<double> numeric = oracle::numeric_gradient(loss_at, theta, h);
  for (const TensorInfo &t : params.tensors()) {
    const Index n = t.rows * t.cols;
    const double err = oracle::relative_error(grads.values().segment(t.offset, n),
                                              numeric.segment(t.offset, n));
    if (err > out.lstm_error) {
      out.lstm_error = err;
      out.worst_tensor = t.name;
    }
  }
  return out;
}

}  // namespace gradcheck

#endif  // FIELDASR_TESTS_GRADCHECK_H_
