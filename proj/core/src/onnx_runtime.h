// Copyright 2026 The Melanoscope Authors. All Rights Reserved.
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

// Minimal ONNX graph interpreter for feed-forward CNN classifiers.
//
// Supports float32 activations plus int64 shape tensors, which covers the
// graphs produced by torch.onnx.export for VGG-style networks. Anything else
// is rejected at load time with the list of unsupported operators.

#ifndef MELANOSCOPE_SRC_ONNX_RUNTIME_H_
#define MELANOSCOPE_SRC_ONNX_RUNTIME_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace onnx {
class NodeProto;
class ModelProto;
}  // namespace onnx

namespace melanoscope::onnxrt {

struct Tensor {
  enum class Type : uint8_t { kFloat, kInt64 };

  Type type = Type::kFloat;
  std::vector<int64_t> shape;
  std::vector<float> f;    // kFloat payload
  std::vector<int64_t> i;  // kInt64 payload

  int64_t NumElements() const;
  static Tensor Float(std::vector<int64_t> shape);
};

std::string ShapeString(const std::vector<int64_t>& shape);

/// Declared dimension: a fixed size or a symbolic/unknown one.
using Dim = std::optional<int64_t>;

using OpFn = absl::Status (*)(const onnx::NodeProto& node,
                              const std::vector<const Tensor*>& inputs,
                              std::vector<Tensor>& outputs);

/// Looks up the kernel for an op type in the default domain.
OpFn FindOp(const std::string& op_type);

class Model {
 public:
  static absl::StatusOr<Model> Load(const std::filesystem::path& path);
  static absl::StatusOr<Model> Parse(const std::string& bytes);

  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const std::string& input_name() const { return input_name_; }
  const std::vector<Dim>& input_dims() const { return input_dims_; }
  const std::vector<Dim>& output_dims() const { return output_dims_; }

  /// Evaluates the graph on one input. Safe to call concurrently.
  absl::StatusOr<Tensor> Run(const Tensor& input) const;

 private:
  Model();

  struct Step {
    const onnx::NodeProto* node = nullptr;
    OpFn fn = nullptr;
    std::vector<int> inputs;   // value slots, -1 for omitted optional inputs
    std::vector<int> outputs;  // value slots, -1 for unused outputs
  };

  std::unique_ptr<onnx::ModelProto> proto_;
  std::vector<Tensor> constants_;  // indexed by slot; empty for runtime values
  std::vector<bool> is_constant_;
  std::vector<Step> steps_;
  std::string input_name_;
  int input_slot_ = -1;
  int output_slot_ = -1;
  std::vector<Dim> input_dims_;
  std::vector<Dim> output_dims_;
};

}  // namespace melanoscope::onnxrt

#endif  // MELANOSCOPE_SRC_ONNX_RUNTIME_H_
