// fieldasr/checkpoint.h
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

#ifndef FIELDASR_CHECKPOINT_H_
#define FIELDASR_CHECKPOINT_H_

#include <filesystem>

#include "fieldasr/binary_io.h"
#include "fieldasr/bilstm.h"
#include "fieldasr/transcript.h"

namespace fieldasr {

// Little-endian layout:
//   "FASRCKPT" u32 version
//   u32 num_layers, hidden_units, input_dim, vocab_size
//   u32 label count, then each label as u32 length + UTF-8 bytes (blank first)
//   u32 tensor count, then per tensor: name, u32 rows, u32 cols,
//   rows*cols f64 in row-major order
struct Checkpoint {
  ModelParameters<double> params;
  LabelVocabulary vocab;
};

void save_checkpoint(const std::filesystem::path &path,
                     const ModelParameters<double> &params,
                     const LabelVocabulary &vocab);
Checkpoint load_checkpoint(const std::filesystem::path &path);

// Named-tensor body shared with the optimizer state sidecar.
void write_tensors(BinaryWriter &w, const ModelParameters<double> &params);
void read_tensors(BinaryReader &r, ModelParameters<double> &params);

}  // namespace fieldasr

#endif  // FIELDASR_CHECKPOINT_H_
