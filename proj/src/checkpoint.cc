// checkpoint.cc
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

#include "fieldasr/checkpoint.h"

namespace fieldasr {

namespace {
constexpr char kMagic[] = "FASRCKPT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_tensors(BinaryWriter &w, const ModelParameters<double> &params) {
  w.u32(static_cast<std::uint32_t>(params.tensors().size()));
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    const TensorInfo &info = params.tensors()[i];
    const auto t = params.tensor(i);
    w.str(info.name);
    w.u32(static_cast<std::uint32_t>(info.rows));
    w.u32(static_cast<std::uint32_t>(info.cols));
    for (Index r = 0; r < info.rows; ++r) {
      for (Index c = 0; c < info.cols; ++c) w.f64(t(r, c));
    }
  }
}

void read_tensors(BinaryReader &r, ModelParameters<double> &params) {
  const std::uint32_t count = r.u32();
  if (count != params.tensors().size()) {
    throw FormatError(r.name() + ": expected " +
                      std::to_string(params.tensors().size()) + " tensors, found " +
                      std::to_string(count));
  }
  for (std::size_t i = 0; i < count; ++i) {
    const TensorInfo info = params.tensors()[i];
    const std::string name = r.str();
    const Index rows = r.u32();
    const Index cols = r.u32();
    if (name != info.name || rows != info.rows || cols != info.cols) {
      throw FormatError(r.name() + ": tensor " + name + " (" +
                        std::to_string(rows) + "x" + std::to_string(cols) +
                        ") does not match " + info.name);
    }
    auto t = params.tensor(i);
    for (Index row = 0; row < rows; ++row) {
      for (Index c = 0; c < cols; ++c) t(row, c) = r.f64();
    }
  }
}

void save_checkpoint(const std::filesystem::path &path,
                     const ModelParameters<double> &params,
                     const LabelVocabulary &vocab) {
  const ModelConfig &cfg = params.config();
  if (vocab.num_labels() != cfg.vocab_size) {
    throw UsageError("vocabulary size does not match the model");
  }
  BinaryWriter w;
  w.bytes(std::string_view(kMagic, 8));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(cfg.num_layers));
  w.u32(static_cast<std::uint32_t>(cfg.hidden_units));
  w.u32(static_cast<std::uint32_t>(cfg.input_dim));
  w.u32(static_cast<std::uint32_t>(cfg.vocab_size));
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  for (const auto &label : vocab.labels()) w.str(label);
  write_tensors(w, params);
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  BinaryReader r = BinaryReader::open(path);
  if (r.bytes(8) != std::string_view(kMagic, 8)) {
    throw FormatError("not a checkpoint: " + path.string());
  }
  if (const auto v = r.u32(); v != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(v) +
                      ": " + path.string());
  }
  ModelConfig cfg;
  cfg.num_layers = static_cast<int>(r.u32());
  cfg.hidden_units = static_cast<int>(r.u32());
  cfg.input_dim = static_cast<int>(r.u32());
  cfg.vocab_size = static_cast<int>(r.u32());
  const std::uint32_t n_labels = r.u32();
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < n_labels; ++i) labels.push_back(r.str());
  if (labels.empty() || labels[0] != kBlankLabel ||
      static_cast<int>(labels.size()) != cfg.vocab_size + 1) {
    throw FormatError("inconsistent vocabulary in " + path.string());
  }
  labels.erase(labels.begin());
  Checkpoint ckpt{ModelParameters<double>(cfg), LabelVocabulary::from_labels(labels)};
  read_tensors(r, ckpt.params);
  if (!r.at_end()) throw FormatError("trailing bytes in " + path.string());
  return ckpt;
}

}  // namespace fieldasr
