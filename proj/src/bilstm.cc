// bilstm.cc
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

#include "fieldasr/bilstm.h"

#include <atomic>

#include "fieldasr/random.h"

namespace fieldasr {

namespace {

std::uint64_t next_stamp() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

const char *direction_name(int d) { return d == 0 ? "fwd" : "bwd"; }

template <typename Derived>
void sigmoid_in_place(Eigen::MatrixBase<Derived> &&x) {
  x = (1 + (-x.array()).exp()).inverse().matrix();
}

}  // namespace

void ModelConfig::validate() const {
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
}

template <typename Scalar>
ModelParameters<Scalar>::ModelParameters(const ModelConfig &config)
    : config_(config), stamp_(next_stamp()) {
  config.validate();
  const Index h = config.hidden_units;
  Index offset = 0;
  auto add = [&](std::string name, Index rows, Index cols) {
    tensors_.push_back({std::move(name), rows, cols, offset});
    offset += rows * cols;
  };
  for (int l = 0; l < config.num_layers; ++l) {
    for (int d = 0; d < 2; ++d) {
      const std::string prefix =
          "layer" + std::to_string(l) + "." + direction_name(d) + ".";
      add(prefix + "w_input", 4 * h, config.layer_input_dim(l));
      add(prefix + "w_recurrent", 4 * h, h);
      add(prefix + "bias", 4 * h, 1);
    }
  }
  add("output.weight", config.output_dim(), 2 * h);
  add("output.bias", config.output_dim(), 1);
  values_ = Vector<Scalar>::Zero(offset);
}

template <typename Scalar>
ModelParameters<Scalar>::ModelParameters(const ModelParameters &other)
    : config_(other.config_),
      tensors_(other.tensors_),
      values_(other.values_),
      stamp_(next_stamp()) {}

template <typename Scalar>
ModelParameters<Scalar> &ModelParameters<Scalar>::operator=(
    const ModelParameters &other) {
  config_ = other.config_;
  tensors_ = other.tensors_;
  values_ = other.values_;
  stamp_ = next_stamp();
  return *this;
}

template <typename Scalar>
void ModelParameters<Scalar>::renew() {
  stamp_ = next_stamp();
}

template <typename Scalar>
typename ModelParameters<Scalar>::MatrixMap ModelParameters<Scalar>::tensor(
    std::size_t i) {
  renew();
  const TensorInfo &t = tensors_.at(i);
  return MatrixMap(values_.data() + t.offset, t.rows, t.cols);
}

template <typename Scalar>
typename ModelParameters<Scalar>::ConstMatrixMap ModelParameters<Scalar>::tensor(
    std::size_t i) const {
  const TensorInfo &t = tensors_.at(i);
  return ConstMatrixMap(values_.data() + t.offset, t.rows, t.cols);
}

template <typename Scalar>
std::size_t ModelParameters<Scalar>::tensor_index(const std::string &name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  throw UsageError("no parameter tensor named " + name);
}

ModelParameters<double> init_parameters(const ModelConfig &config,
                                        std::uint64_t seed) {
  ModelParameters<double> params(config);
  Rng rng(seed);
  const Index h = config.hidden_units;
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    const TensorInfo info = params.tensors()[i];
    auto t = params.tensor(i);
    if (info.cols == 1) {
      t.setZero();
      if (info.name.find(".bias") != std::string::npos &&
          info.name.rfind("layer", 0) == 0) {
        t.middleRows(h, h).setOnes();  // forget gate
      }
      continue;
    }
    const double limit = std::sqrt(6.0 / double(info.rows + info.cols));
    // Column-major fill order is part of the determinism contract.
    for (Index c = 0; c < info.cols; ++c) {
      for (Index r = 0; r < info.rows; ++r) t(r, c) = rng.uniform(-limit, limit);
    }
  }
  return params;
}

template <typename Scalar>
Matrix<Scalar> forward(const ModelParameters<Scalar> &params,
                       const ConstMatrixRef<Scalar> &features,
                       ForwardCache<Scalar> *cache) {
  const ModelConfig &cfg = params.config();
  if (features.cols() != cfg.input_dim) {
    throw ShapeError("features have " + std::to_string(features.cols()) +
                     " dims, model expects " + std::to_string(cfg.input_dim));
  }
  const Index frames = features.rows();
  if (frames < 1) throw ShapeError("forward needs at least one frame");
  const Index h = cfg.hidden_units;

  ForwardCache<Scalar> local;
  ForwardCache<Scalar> &c = cache ? *cache : local;
  c.stamp = params.stamp();
  c.frames = frames;
  c.layer_inputs.resize(cfg.num_layers);
  c.layers.resize(cfg.num_layers);
  c.layer_inputs[0] = features.transpose();

  Vector<Scalar> cell(h);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const Matrix<Scalar> &input = c.layer_inputs[l];
    for (int d = 0; d < 2; ++d) {
      const auto dir = static_cast<Direction>(d);
      const auto w_in = params.input_weights(l, dir);
      const auto w_rec = params.recurrent_weights(l, dir);
      const auto b = params.bias(l, dir);
      auto &s = c.layers[l][d];
      s.gates.noalias() = w_in * input;
      s.gates.colwise() += b.col(0);
      s.cells.resize(h, frames);
      s.cell_tanh.resize(h, frames);
      s.hidden.resize(h, frames);
      for (Index step = 0; step < frames; ++step) {
        const Index t = d == 0 ? step : frames - 1 - step;
        const Index prev = d == 0 ? t - 1 : t + 1;
        auto z = s.gates.col(t);
        if (step > 0) z.noalias() += w_rec * s.hidden.col(prev);
        sigmoid_in_place(z.head(2 * h));
        z.segment(2 * h, h) = z.segment(2 * h, h).array().tanh().matrix();
        sigmoid_in_place(z.tail(h));
        cell = z.head(h).cwiseProduct(z.segment(2 * h, h));
        if (step > 0) cell += z.segment(h, h).cwiseProduct(s.cells.col(prev));
        s.cells.col(t) = cell;
        s.cell_tanh.col(t) = cell.array().tanh().matrix();
        s.hidden.col(t) = z.tail(h).cwiseProduct(s.cell_tanh.col(t));
      }
    }
    Matrix<Scalar> stacked(2 * h, frames);
    stacked.topRows(h) = c.layers[l][0].hidden;
    stacked.bottomRows(h) = c.layers[l][1].hidden;
    if (l + 1 < cfg.num_layers) {
      c.layer_inputs[l + 1] = std::move(stacked);
    } else {
      c.top = std::move(stacked);
    }
  }
  Matrix<Scalar> out_t = params.output_weights() * c.top;
  out_t.colwise() += params.output_bias().col(0);
  return out_t.transpose();
}

template <typename Scalar>
void accumulate_gradients(const ModelParameters<Scalar> &params,
                          const ForwardCache<Scalar> &cache,
                          const ConstMatrixRef<Scalar> &logits_grad,
                          ModelParameters<Scalar> &grads) {
  const ModelConfig &cfg = params.config();
  if (cache.stamp != params.stamp() || cache.layers.size() != size_t(cfg.num_layers)) {
    throw UsageError("forward cache does not match these parameters");
  }
  if (!(grads.config() == cfg)) {
    throw UsageError("gradient container has a different model shape");
  }
  const Index frames = cache.frames;
  if (logits_grad.rows() != frames || logits_grad.cols() != cfg.output_dim()) {
    throw UsageError("logits gradient is " + std::to_string(logits_grad.rows()) +
                     "x" + std::to_string(logits_grad.cols()) +
                     ", forward produced " + std::to_string(frames) + "x" +
                     std::to_string(cfg.output_dim()));
  }
  const Index h = cfg.hidden_units;

  const Matrix<Scalar> g = logits_grad.transpose();  // (V+1) x T
  grads.output_weights().noalias() += g * cache.top.transpose();
  grads.output_bias() += g.rowwise().sum();
  Matrix<Scalar> upstream = params.output_weights().transpose() * g;  // 2H x T

  Matrix<Scalar> dz(4 * h, frames);
  Vector<Scalar> dh(h), dc(h), dc_next(h), dh_rec(h);
  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    Matrix<Scalar> below;
    if (l > 0) below = Matrix<Scalar>::Zero(cfg.layer_input_dim(l), frames);
    for (int d = 0; d < 2; ++d) {
      const auto dir = static_cast<Direction>(d);
      const auto &s = cache.layers[l][d];
      const auto w_rec = params.recurrent_weights(l, dir);
      dh_rec.setZero();
      dc_next.setZero();
      // Reverse of the order forward() visited the frames in.
      for (Index step = frames - 1; step >= 0; --step) {
        const Index t = d == 0 ? step : frames - 1 - step;
        const Index prev = d == 0 ? t - 1 : t + 1;
        const auto gate = s.gates.col(t);
        const auto in_g = gate.head(h).array();
        const auto forget_g = gate.segment(h, h).array();
        const auto cell_g = gate.segment(2 * h, h).array();
        const auto out_g = gate.tail(h).array();
        const auto tc = s.cell_tanh.col(t).array();

        dh = upstream.col(t).segment(d * h, h) + dh_rec;
        dc = (dh.array() * out_g * (1 - tc.square())).matrix() + dc_next;
        auto z = dz.col(t);
        z.tail(h) = (dh.array() * tc * out_g * (1 - out_g)).matrix();
        z.head(h) = (dc.array() * cell_g * in_g * (1 - in_g)).matrix();
        z.segment(2 * h, h) = (dc.array() * in_g * (1 - cell_g.square())).matrix();
        if (step > 0) {
          z.segment(h, h) = (dc.array() * s.cells.col(prev).array() * forget_g *
                             (1 - forget_g)).matrix();
        } else {
          z.segment(h, h).setZero();
        }
        dc_next = (dc.array() * forget_g).matrix();
        dh_rec.noalias() = w_rec.transpose() * z;
      }

      const Matrix<Scalar> &input =
          l == 0 ? cache.layer_inputs[0] : cache.layer_inputs[l];
      grads.input_weights(l, dir).noalias() += dz * input.transpose();
      if (frames > 1) {
        if (d == 0) {
          grads.recurrent_weights(l, dir).noalias() +=
              dz.rightCols(frames - 1) * s.hidden.leftCols(frames - 1).transpose();
        } else {
          grads.recurrent_weights(l, dir).noalias() +=
              dz.leftCols(frames - 1) * s.hidden.rightCols(frames - 1).transpose();
        }
      }
      grads.bias(l, dir) += dz.rowwise().sum();
      if (l > 0) below.noalias() += params.input_weights(l, dir).transpose() * dz;
    }
    if (l > 0) upstream = std::move(below);
  }
}

template class ModelParameters<double>;
template class ModelParameters<float>;

template Matrix<double> forward(const ModelParameters<double> &,
                                const Eigen::Ref<const Matrix<double>> &,
                                ForwardCache<double> *);
template Matrix<float> forward(const ModelParameters<float> &,
                               const Eigen::Ref<const Matrix<float>> &,
                               ForwardCache<float> *);
template void accumulate_gradients(const ModelParameters<double> &,
                                   const ForwardCache<double> &,
                                   const Eigen::Ref<const Matrix<double>> &,
                                   ModelParameters<double> &);
template void accumulate_gradients(const ModelParameters<float> &,
                                   const ForwardCache<float> &,
                                   const Eigen::Ref<const Matrix<float>> &,
                                   ModelParameters<float> &);

}  // namespace fieldasr
