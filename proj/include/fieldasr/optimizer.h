// fieldasr/optimizer.h
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

#ifndef FIELDASR_OPTIMIZER_H_
#define FIELDASR_OPTIMIZER_H_

#include <cstdint>

#include "fieldasr/bilstm.h"

namespace fieldasr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global L2 norm; non-positive disables clipping.
  double clip_norm = 5.0;
  double weight_decay = 0.0;
};

struct AdamState {
  Vector<double> first_moment;
  Vector<double> second_moment;
  std::uint64_t step = 0;

  explicit AdamState(Index size = 0)
      : first_moment(Vector<double>::Zero(size)),
        second_moment(Vector<double>::Zero(size)) {}
};

struct AdamStepInfo {
  double grad_norm = 0.0;   // before clipping
  double clip_scale = 1.0;  // factor applied to the gradient
};

// Clipping by global norm, optional L2 decay, then a bias-corrected Adam
// update. A non-finite gradient throws TrainingError naming the tensor and
// leaves params and state untouched.
AdamStepInfo adam_step(ModelParameters<double> &params,
                       const ModelParameters<double> &grads, AdamState &state,
                       const AdamConfig &config);

}  // namespace fieldasr

#endif  // FIELDASR_OPTIMIZER_H_
