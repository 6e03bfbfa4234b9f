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

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "backends.h"
#include "melanoscope/status_macros.h"
#include "onnx_runtime.h"

namespace melanoscope::internal {
namespace {

class OnnxBackend final : public Backend {
 public:
  OnnxBackend(BackendDescriptor d, onnxrt::Model model)
      : Backend(std::move(d)), model_(std::move(model)) {
    const auto& dims = model_.input_dims();
    if (!dims.empty() && dims[0]) fixed_batch_ = *dims[0];
  }

  bool SupportsConcurrentPredict() const override { return true; }

  absl::StatusOr<LogitBatch> ComputeLogits(
      std::span<const TensorPatch> batch) const override {
    LogitBatch out;
    out.width = ArityWidth(descriptor().arity);
    const size_t step = fixed_batch_ > 0 ? static_cast<size_t>(fixed_batch_)
                                         : std::max<size_t>(batch.size(), 1);
    for (size_t begin = 0; begin < batch.size(); begin += step) {
      const size_t end = std::min(batch.size(), begin + step);
      // A fixed batch dimension is padded with zero tensors.
      const int64_t n = fixed_batch_ > 0 ? fixed_batch_
                                         : static_cast<int64_t>(end - begin);
      onnxrt::Tensor input = onnxrt::Tensor::Float(
          {n, 3, kModelInputSize, kModelInputSize});
      const size_t plane = static_cast<size_t>(3 * kModelInputSize * kModelInputSize);
      for (size_t k = begin; k < end; ++k) {
        std::copy(batch[k].data.begin(), batch[k].data.end(),
                  input.f.begin() + (k - begin) * plane);
      }
      MELANOSCOPE_ASSIGN_OR_RETURN(onnxrt::Tensor logits, model_.Run(input));
      if (logits.type != onnxrt::Tensor::Type::kFloat ||
          logits.shape.size() != 2 || logits.shape[0] != n ||
          logits.shape[1] != out.width) {
        return absl::InvalidArgumentError(absl::StrCat(
            "shape mismatch: model produced ", onnxrt::ShapeString(logits.shape),
            ", expected [", n, ",", out.width, "]"));
      }
      out.values.insert(out.values.end(), logits.f.begin(),
                        logits.f.begin() + (end - begin) * out.width);
    }
    return out;
  }

 private:
  onnxrt::Model model_;
  int64_t fixed_batch_ = 0;
};

std::string DimsString(const std::vector<onnxrt::Dim>& dims) {
  std::string s = "[";
  for (size_t k = 0; k < dims.size(); ++k) {
    if (k) s += ",";
    s += dims[k] ? absl::StrCat(*dims[k]) : "?";
  }
  return s + "]";
}

}  // namespace

absl::StatusOr<std::unique_ptr<Backend>> MakeOnnxBackend(
    const BackendDescriptor& descriptor, const std::filesystem::path& path) {
  MELANOSCOPE_ASSIGN_OR_RETURN(onnxrt::Model model, onnxrt::Model::Load(path));
  const int64_t width = ArityWidth(descriptor.arity);

  const auto& in = model.input_dims();
  const std::vector<int64_t> want_in = {3, kModelInputSize, kModelInputSize};
  bool in_ok = in.size() == 4;
  for (size_t k = 0; in_ok && k < 3; ++k) {
    in_ok = !in[k + 1] || *in[k + 1] == want_in[k];
  }
  if (!in_ok) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shape mismatch: model input ", DimsString(in),
        " is not [N,3,224,224]"));
  }
  const auto& out = model.output_dims();
  if (!out.empty() &&
      (out.size() != 2 || (out[1] && *out[1] != width))) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shape mismatch: model output ", DimsString(out), " but ",
        ArityName(descriptor.arity), " arity needs width ", width));
  }

  auto backend = std::make_unique<OnnxBackend>(descriptor, std::move(model));
  // Declared shapes may be symbolic, so confirm the width on a real pass.
  std::vector<TensorPatch> probe(1);
  probe[0].data.assign(static_cast<size_t>(3 * kModelInputSize * kModelInputSize),
                       0.0f);
  MELANOSCOPE_RETURN_IF_ERROR(backend->ComputeLogits(probe).status());
  return std::unique_ptr<Backend>(std::move(backend));
}

}  // namespace melanoscope::internal
