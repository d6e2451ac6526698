// optimizer.cc
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

#include "fieldasr/optimizer.h"

namespace fieldasr {

AdamStepInfo adam_step(ModelParameters<double> &params,
                       const ModelParameters<double> &grads, AdamState &state,
                       const AdamConfig &config) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw UsageError("optimizer shapes do not match the parameters");
  }
  for (std::size_t i = 0; i < grads.tensors().size(); ++i) {
    if (!grads.tensor(i).allFinite()) {
      throw TrainingError("non-finite gradient in tensor " +
                          grads.tensors()[i].name + " at step " +
                          std::to_string(state.step + 1));
    }
  }

  AdamStepInfo info;
  info.grad_norm = grads.values().norm();
  if (config.clip_norm > 0.0 && info.grad_norm > config.clip_norm) {
    info.clip_scale = config.clip_norm / info.grad_norm;
  }
  Vector<double> g = info.clip_scale * grads.values();
  if (config.weight_decay != 0.0) g += config.weight_decay * params.values();

  ++state.step;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * g;
  state.second_moment = config.beta2 * state.second_moment +
                        (1.0 - config.beta2) * g.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  params.values().array() -=
      config.learning_rate * (state.first_moment.array() / c1) /
      ((state.second_moment.array() / c2).sqrt() + config.epsilon);
  return info;
}

}  // namespace fieldasr
