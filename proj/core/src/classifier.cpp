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

#include "melanoscope/classifier.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "backends.h"
#include "melanoscope/parallel.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {

absl::Status ValidateProbabilityVector(const ProbabilityVector& p) {
  if (p.size() != 2 && p.size() != 3) {
    return absl::InvalidArgumentError(absl::StrCat(
        "probability vector must have 2 or 3 entries, got ", p.size()));
  }
  double sum = 0.0;
  for (double v : p.probs) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("probability ", v, " outside [0,1]"));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("probabilities sum to ", sum, ", not 1"));
  }
  return absl::OkStatus();
}

ProbabilityVector Softmax(std::span<const double> logits) {
  ProbabilityVector out;
  out.probs.resize(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - mx);
    sum += out.probs[i];
  }
  for (double& v : out.probs) v /= sum;
  return out;
}

size_t ArgMax(const ProbabilityVector& p) {
  size_t best = 0;
  for (size_t i = 1; i < p.size(); ++i) {
    if (p.probs[i] > p.probs[best]) best = i;
  }
  return best;
}

const char* BackendKindName(BackendKind kind) {
  return kind == BackendKind::kMock ? "mock" : "neural";
}

absl::StatusOr<BackendKind> ParseBackendKind(const std::string& text) {
  if (text == "mock") return BackendKind::kMock;
  if (text == "neural" || text == "onnx") return BackendKind::kNeural;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown backend \"", text, "\"; expected mock|neural"));
}

absl::StatusOr<std::unique_ptr<Backend>> LoadBackend(
    const BackendDescriptor& descriptor,
    const std::optional<std::filesystem::path>& model_path) {
  MELANOSCOPE_RETURN_IF_ERROR(ValidateStats(descriptor.stats));
  if (descriptor.input_channels != 3 ||
      descriptor.input_size != kModelInputSize) {
    return absl::InvalidArgumentError(absl::StrCat(
        "backend input must be 3x", kModelInputSize, "x", kModelInputSize,
        ", descriptor declares ", descriptor.input_channels, "x",
        descriptor.input_size, "x", descriptor.input_size));
  }
  switch (descriptor.kind) {
    case BackendKind::kMock:
      return internal::MakeMockBackend(descriptor);
    case BackendKind::kNeural:
      if (!model_path) {
        return absl::InvalidArgumentError(
            "the neural backend requires a model file");
      }
      return internal::MakeOnnxBackend(descriptor, *model_path);
  }
  return absl::InvalidArgumentError("unknown backend kind");
}

absl::StatusOr<std::vector<ProbabilityVector>> Predict(
    const Backend& backend, std::span<const TensorPatch> batch, int workers) {
  if (batch.empty()) {
    return absl::InvalidArgumentError("predict requires a non-empty batch");
  }
  const size_t expected = static_cast<size_t>(3 * kModelInputSize * kModelInputSize);
  for (size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].data.size() != expected) {
      return absl::InvalidArgumentError(absl::StrCat(
          "shape mismatch: patch ", i, " has ", batch[i].data.size(),
          " values, expected 3x224x224"));
    }
  }
  const int64_t width = ArityWidth(backend.descriptor().arity);
  const int threads = backend.SupportsConcurrentPredict() ? std::max(workers, 1) : 1;
  // Sub-batches have a fixed size so the backend sees the same inputs,
  // and produces the same bits, whatever the worker count.
  const size_t per_chunk = kPredictSubBatch;
  const size_t chunks = (batch.size() + per_chunk - 1) / per_chunk;

  std::vector<ProbabilityVector> out(batch.size());
  MELANOSCOPE_RETURN_IF_ERROR(ParallelFor(chunks, threads, [&](size_t chunk) {
    const size_t begin = chunk * per_chunk;
    const size_t end = std::min(batch.size(), begin + per_chunk);
    if (begin >= end) return absl::OkStatus();
    auto logits = backend.ComputeLogits(batch.subspan(begin, end - begin));
    if (!logits.ok()) return logits.status();
    if (logits->width != width ||
        logits->values.size() != static_cast<size_t>(width) * (end - begin)) {
      return absl::InternalError(absl::StrCat(
          "shape mismatch: backend produced width ", logits->width,
          " but arity requires ", width));
    }
    for (size_t i = begin; i < end; ++i) {
      std::span<const double> row(logits->values.data() + (i - begin) * width,
                                  static_cast<size_t>(width));
      for (double v : row) {
        if (!std::isfinite(v)) {
          return absl::InternalError(absl::StrCat(
              "non-finite model output for patch ", i));
        }
      }
      out[i] = Softmax(row);
    }
    return absl::OkStatus();
  }));
  return out;
}

}  // namespace melanoscope
