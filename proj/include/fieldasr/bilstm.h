// fieldasr/bilstm.h
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

#ifndef FIELDASR_BILSTM_H_
#define FIELDASR_BILSTM_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fieldasr/common.h"

namespace fieldasr {

enum class Direction { kForward = 0, kBackward = 1 };

struct ModelConfig {
  int num_layers = 3;
  // Per direction.
  int hidden_units = 250;
  int input_dim = 123;
  // V, excluding the blank.
  int vocab_size = 0;

  int output_dim() const { return vocab_size + 1; }
  int layer_input_dim(int layer) const {
    return layer == 0 ? input_dim : 2 * hidden_units;
  }
  void validate() const;
  bool operator==(const ModelConfig &) const = default;
};

struct TensorInfo {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Index offset = 0;
};

// All weights live in one flat vector; tensors are column-major views into
// it. Gate blocks within the LSTM tensors are ordered input, forget, cell,
// output. Every mutable access renews stamp(), which invalidates forward
// caches taken from the previous values.
template <typename Scalar>
class ModelParameters {
 public:
  using MatrixMap = Eigen::Map<Matrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const Matrix<Scalar>>;

  ModelParameters() = default;
  explicit ModelParameters(const ModelConfig &config);
  ModelParameters(const ModelParameters &other);
  ModelParameters &operator=(const ModelParameters &other);
  ModelParameters(ModelParameters &&) noexcept = default;
  ModelParameters &operator=(ModelParameters &&) noexcept = default;

  const ModelConfig &config() const { return config_; }
  const std::vector<TensorInfo> &tensors() const { return tensors_; }
  Index size() const { return values_.size(); }
  std::uint64_t stamp() const { return stamp_; }

  Vector<Scalar> &values() {
    renew();
    return values_;
  }
  const Vector<Scalar> &values() const { return values_; }

  MatrixMap tensor(std::size_t i);
  ConstMatrixMap tensor(std::size_t i) const;
  // Index of the named tensor, or throws UsageError.
  std::size_t tensor_index(const std::string &name) const;

  // 4H x I
  MatrixMap input_weights(int layer, Direction d) { return tensor(lstm_slot(layer, d)); }
  ConstMatrixMap input_weights(int layer, Direction d) const { return tensor(lstm_slot(layer, d)); }
  // 4H x H
  MatrixMap recurrent_weights(int layer, Direction d) { return tensor(lstm_slot(layer, d) + 1); }
  ConstMatrixMap recurrent_weights(int layer, Direction d) const { return tensor(lstm_slot(layer, d) + 1); }
  // 4H x 1
  MatrixMap bias(int layer, Direction d) { return tensor(lstm_slot(layer, d) + 2); }
  ConstMatrixMap bias(int layer, Direction d) const { return tensor(lstm_slot(layer, d) + 2); }
  // (V+1) x 2H; columns [forward | backward].
  MatrixMap output_weights() { return tensor(tensors_.size() - 2); }
  ConstMatrixMap output_weights() const { return tensor(tensors_.size() - 2); }
  // (V+1) x 1
  MatrixMap output_bias() { return tensor(tensors_.size() - 1); }
  ConstMatrixMap output_bias() const { return tensor(tensors_.size() - 1); }

  void set_zero() { values().setZero(); }

  template <typename To>
  ModelParameters<To> cast() const {
    ModelParameters<To> out(config_);
    out.values() = values_.template cast<To>();
    return out;
  }

 private:
  static std::size_t lstm_slot(int layer, Direction d) {
    return static_cast<std::size_t>(3 * (2 * layer + static_cast<int>(d)));
  }
  void renew();

  ModelConfig config_;
  std::vector<TensorInfo> tensors_;
  Vector<Scalar> values_;
  std::uint64_t stamp_ = 0;
};

// Glorot-uniform weights, forget-gate bias 1, other biases 0. Deterministic
// in `seed`.
ModelParameters<double> init_parameters(const ModelConfig &config,
                                        std::uint64_t seed);

template <typename Scalar>
struct ForwardCache {
  struct DirectionState {
    Matrix<Scalar> gates;      // 4H x T, post-activation
    Matrix<Scalar> cells;      // H x T
    Matrix<Scalar> cell_tanh;  // H x T
    Matrix<Scalar> hidden;     // H x T
  };

  std::uint64_t stamp = 0;
  Index frames = 0;
  std::vector<Matrix<Scalar>> layer_inputs;  // I_l x T
  std::vector<std::array<DirectionState, 2>> layers;
  Matrix<Scalar> top;  // 2H x T
};

// T x D features to T x (V+1) logits. Fills `cache` for backward() when
// given. Throws ShapeError on a dimension mismatch.
template <typename Scalar>
Matrix<Scalar> forward(const ModelParameters<Scalar> &params,
                       const ConstMatrixRef<Scalar> &features,
                       ForwardCache<Scalar> *cache = nullptr);

// Backpropagation through time for one utterance; adds dLoss/dParams to
// `grads`. Throws UsageError if `cache` does not come from forward() with
// these exact parameter values.
template <typename Scalar>
void accumulate_gradients(const ModelParameters<Scalar> &params,
                          const ForwardCache<Scalar> &cache,
                          const ConstMatrixRef<Scalar> &logits_grad,
                          ModelParameters<Scalar> &grads);

template <typename Scalar>
ModelParameters<Scalar> backward(const ModelParameters<Scalar> &params,
                                 const ForwardCache<Scalar> &cache,
                                 const ConstMatrixRef<Scalar> &logits_grad) {
  ModelParameters<Scalar> grads(params.config());
  accumulate_gradients(params, cache, logits_grad, grads);
  return grads;
}

}  // namespace fieldasr

#endif  // FIELDASR_BILSTM_H_
