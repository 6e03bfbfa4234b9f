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

#include "onnx_runtime.h"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "melanoscope/status_macros.h"
#include "onnx.pb.h"

namespace melanoscope::onnxrt {

int64_t Tensor::NumElements() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

Tensor Tensor::Float(std::vector<int64_t> shape) {
  Tensor t;
  t.type = Type::kFloat;
  t.shape = std::move(shape);
  t.f.assign(static_cast<size_t>(t.NumElements()), 0.0f);
  return t;
}

std::string ShapeString(const std::vector<int64_t>& shape) {
  return absl::StrCat("[", absl::StrJoin(shape, ","), "]");
}

namespace {

absl::StatusOr<Tensor> FromProto(const onnx::TensorProto& proto) {
  if (proto.data_location() == onnx::TensorProto::EXTERNAL) {
    return absl::UnimplementedError(absl::StrCat(
        "tensor \"", proto.name(), "\" uses external data, which is not supported"));
  }
  Tensor t;
  t.shape.assign(proto.dims().begin(), proto.dims().end());
  const size_t n = static_cast<size_t>(t.NumElements());
  switch (proto.data_type()) {
    case onnx::TensorProto::FLOAT:
      t.type = Tensor::Type::kFloat;
      if (proto.has_raw_data()) {
        if (proto.raw_data().size() != n * sizeof(float)) {
          return absl::InvalidArgumentError(
              absl::StrCat("tensor \"", proto.name(), "\" has truncated data"));
        }
        t.f.resize(n);
        std::memcpy(t.f.data(), proto.raw_data().data(), n * sizeof(float));
      } else {
        if (static_cast<size_t>(proto.float_data_size()) != n) {
          return absl::InvalidArgumentError(
              absl::StrCat("tensor \"", proto.name(), "\" has truncated data"));
        }
        t.f.assign(proto.float_data().begin(), proto.float_data().end());
      }
      return t;
    case onnx::TensorProto::INT64:
      t.type = Tensor::Type::kInt64;
      if (proto.has_raw_data()) {
        if (proto.raw_data().size() != n * sizeof(int64_t)) {
          return absl::InvalidArgumentError(
              absl::StrCat("tensor \"", proto.name(), "\" has truncated data"));
        }
        t.i.resize(n);
        std::memcpy(t.i.data(), proto.raw_data().data(), n * sizeof(int64_t));
      } else {
        if (static_cast<size_t>(proto.int64_data_size()) != n) {
          return absl::InvalidArgumentError(
              absl::StrCat("tensor \"", proto.name(), "\" has truncated data"));
        }
        t.i.assign(proto.int64_data().begin(), proto.int64_data().end());
      }
      return t;
    default:
      return absl::UnimplementedError(
          absl::StrCat("tensor \"", proto.name(), "\" has unsupported element type ",
                       proto.data_type()));
  }
}

// Folds a Constant node into a tensor.
absl::StatusOr<Tensor> ConstantValue(const onnx::NodeProto& node) {
  for (const auto& attr : node.attribute()) {
    if (attr.name() == "value") return FromProto(attr.t());
    if (attr.name() == "value_float") {
      Tensor t = Tensor::Float({});
      t.f[0] = attr.f();
      return t;
    }
    if (attr.name() == "value_floats") {
      Tensor t = Tensor::Float({attr.floats_size()});
      for (int k = 0; k < attr.floats_size(); ++k) t.f[k] = attr.floats(k);
      return t;
    }
    if (attr.name() == "value_int" || attr.name() == "value_ints") {
      Tensor t;
      t.type = Tensor::Type::kInt64;
      if (attr.name() == "value_int") {
        t.i = {attr.i()};
      } else {
        t.i.assign(attr.ints().begin(), attr.ints().end());
        t.shape = {attr.ints_size()};
      }
      return t;
    }
  }
  return absl::InvalidArgumentError(
      absl::StrCat("Constant node \"", node.name(), "\" has no supported value"));
}

std::vector<Dim> DeclaredDims(const onnx::ValueInfoProto& info) {
  std::vector<Dim> dims;
  if (!info.type().has_tensor_type()) return dims;
  for (const auto& d : info.type().tensor_type().shape().dim()) {
    if (d.has_dim_value()) {
      dims.emplace_back(d.dim_value());
    } else {
      dims.emplace_back(std::nullopt);
    }
  }
  return dims;
}

}  // namespace

Model::Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

absl::StatusOr<Model> Model::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot read model file ", path.string()));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  auto model = Parse(buf.str());
  if (!model.ok()) {
    return absl::Status(model.status().code(),
                        absl::StrCat(path.string(), ": ", model.status().message()));
  }
  return model;
}

absl::StatusOr<Model> Model::Parse(const std::string& bytes) {
  Model m;
  m.proto_ = std::make_unique<onnx::ModelProto>();
  if (!m.proto_->ParseFromString(bytes)) {
    return absl::InvalidArgumentError("not a readable ONNX model");
  }
  const onnx::GraphProto& graph = m.proto_->graph();
  for (const auto& opset : m.proto_->opset_import()) {
    if (!opset.domain().empty() && opset.domain() != "ai.onnx") {
      return absl::UnimplementedError(
          absl::StrCat("unsupported operator domain \"", opset.domain(), "\""));
    }
  }

  std::unordered_map<std::string, int> slots;
  auto slot_of = [&](const std::string& name) {
    auto [it, inserted] = slots.emplace(name, static_cast<int>(slots.size()));
    if (inserted) {
      m.constants_.emplace_back();
      m.is_constant_.push_back(false);
    }
    return it->second;
  };

  for (const auto& init : graph.initializer()) {
    MELANOSCOPE_ASSIGN_OR_RETURN(Tensor t, FromProto(init));
    const int s = slot_of(init.name());
    m.constants_[s] = std::move(t);
    m.is_constant_[s] = true;
  }

  std::vector<const onnx::ValueInfoProto*> runtime_inputs;
  for (const auto& in : graph.input()) {
    if (!slots.contains(in.name())) runtime_inputs.push_back(&in);
  }
  if (runtime_inputs.size() != 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "model must have exactly one input, found ", runtime_inputs.size()));
  }
  if (graph.output_size() != 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "model must have exactly one output, found ", graph.output_size()));
  }
  m.input_name_ = runtime_inputs[0]->name();
  m.input_slot_ = slot_of(m.input_name_);
  m.input_dims_ = DeclaredDims(*runtime_inputs[0]);
  m.output_dims_ = DeclaredDims(graph.output(0));

  std::set<std::string> unsupported;
  std::set<int> produced = {m.input_slot_};
  for (int s = 0; s < static_cast<int>(m.is_constant_.size()); ++s) {
    if (m.is_constant_[s]) produced.insert(s);
  }
  for (const auto& node : graph.node()) {
    if (!node.domain().empty() && node.domain() != "ai.onnx") {
      unsupported.insert(absl::StrCat(node.domain(), ".", node.op_type()));
      continue;
    }
    if (node.op_type() == "Constant") {
      MELANOSCOPE_ASSIGN_OR_RETURN(Tensor t, ConstantValue(node));
      const int s = slot_of(node.output(0));
      m.constants_[s] = std::move(t);
      m.is_constant_[s] = true;
      produced.insert(s);
      continue;
    }
    OpFn fn = FindOp(node.op_type());
    if (fn == nullptr) {
      unsupported.insert(node.op_type());
      continue;
    }
    Step step;
    step.node = &node;
    step.fn = fn;
    for (const auto& name : node.input()) {
      if (name.empty()) {
        step.inputs.push_back(-1);
        continue;
      }
      const int s = slot_of(name);
      if (!produced.contains(s)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "node \"", node.name(), "\" reads \"", name,
            "\" before it is produced; graph is not topologically sorted"));
      }
      step.inputs.push_back(s);
    }
    for (const auto& name : node.output()) {
      if (name.empty()) {
        step.outputs.push_back(-1);
        continue;
      }
      const int s = slot_of(name);
      produced.insert(s);
      step.outputs.push_back(s);
    }
    m.steps_.push_back(std::move(step));
  }
  if (!unsupported.empty()) {
    return absl::UnimplementedError(absl::StrCat(
        "unsupported operators: ", absl::StrJoin(unsupported, ", ")));
  }
  const auto out_it = slots.find(graph.output(0).name());
  if (out_it == slots.end() || !produced.contains(out_it->second)) {
    return absl::InvalidArgumentError("graph output is never produced");
  }
  m.output_slot_ = out_it->second;
  return m;
}

absl::StatusOr<Tensor> Model::Run(const Tensor& input) const {
  if (input.type != Tensor::Type::kFloat) {
    return absl::InvalidArgumentError("model input must be float32");
  }
  if (!input_dims_.empty()) {
    if (input.shape.size() != input_dims_.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "input rank ", input.shape.size(), " does not match declared rank ",
          input_dims_.size()));
    }
    for (size_t k = 0; k < input_dims_.size(); ++k) {
      if (input_dims_[k] && *input_dims_[k] != input.shape[k]) {
        return absl::InvalidArgumentError(absl::StrCat(
            "input shape ", ShapeString(input.shape),
            " does not match the declared input shape"));
      }
    }
  }

  // Last step reading each slot, so intermediates can be released early.
  const size_t slot_count = constants_.size();
  std::vector<int> last_use(slot_count, -1);
  for (size_t k = 0; k < steps_.size(); ++k) {
    for (int s : steps_[k].inputs) {
      if (s >= 0) last_use[s] = static_cast<int>(k);
    }
  }

  std::vector<Tensor> values(slot_count);
  if (input_slot_ == output_slot_) return input;
  std::vector<const Tensor*> args;
  std::vector<Tensor> results;
  for (size_t k = 0; k < steps_.size(); ++k) {
    const Step& step = steps_[k];
    args.clear();
    for (int s : step.inputs) {
      if (s < 0) {
        args.push_back(nullptr);
      } else if (is_constant_[s]) {
        args.push_back(&constants_[s]);
      } else if (s == input_slot_) {
        args.push_back(&input);
      } else {
        args.push_back(&values[s]);
      }
    }
    results.assign(step.outputs.size(), Tensor());
    absl::Status st = step.fn(*step.node, args, results);
    if (!st.ok()) {
      return absl::Status(st.code(),
                          absl::StrCat(step.node->op_type(), " node \"",
                                       step.node->name(), "\": ", st.message()));
    }
    for (size_t o = 0; o < step.outputs.size(); ++o) {
      if (step.outputs[o] >= 0) values[step.outputs[o]] = std::move(results[o]);
    }
    for (int s : step.inputs) {
      if (s >= 0 && !is_constant_[s] && s != output_slot_ &&
          last_use[s] == static_cast<int>(k)) {
        values[s] = Tensor();
      }
    }
  }
  if (is_constant_[output_slot_]) return constants_[output_slot_];
  return std::move(values[output_slot_]);
}

}  // namespace melanoscope::onnxrt
