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

#include <cmath>

#include "backends.h"

namespace melanoscope {

std::array<double, 3> MeanColor(const TensorPatch& tensor,
                                const NormalizationStats& stats) {
  const size_t plane = static_cast<size_t>(kModelInputSize * kModelInputSize);
  std::array<double, 3> mean = {0.0, 0.0, 0.0};
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    const float* p = tensor.data.data() + c * plane;
    for (size_t i = 0; i < plane; ++i) sum += p[i];
    // Undo (v - mean) / std on the channel average.
    mean[c] = (sum / plane * stats.stddev[c] + stats.mean[c]) * 255.0;
  }
  return mean;
}

std::vector<double> MockLogits(const std::array<double, 3>& rgb, Arity arity) {
  const int width = ArityWidth(arity);
  std::vector<double> logits(static_cast<size_t>(width));
  for (int k = 0; k < width; ++k) {
    const double dr = rgb[0] - kMockAnchors[k].r;
    const double dg = rgb[1] - kMockAnchors[k].g;
    const double db = rgb[2] - kMockAnchors[k].b;
    logits[k] = -std::sqrt(dr * dr + dg * dg + db * db) / kMockTemperature;
  }
  return logits;
}

namespace internal {
namespace {

/// Nearest-anchor classifier on the patch's mean color. A pure function of
/// pixel content, so it is safe to call concurrently.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(BackendDescriptor d) : Backend(std::move(d)) {}

  bool SupportsConcurrentPredict() const override { return true; }

  absl::StatusOr<LogitBatch> ComputeLogits(
      std::span<const TensorPatch> batch) const override {
    LogitBatch out;
    out.width = ArityWidth(descriptor().arity);
    out.values.reserve(batch.size() * static_cast<size_t>(out.width));
    for (const TensorPatch& t : batch) {
      const auto logits =
          MockLogits(MeanColor(t, descriptor().stats), descriptor().arity);
      out.values.insert(out.values.end(), logits.begin(), logits.end());
    }
    return out;
  }
};

}  // namespace

absl::StatusOr<std::unique_ptr<Backend>> MakeMockBackend(
    const BackendDescriptor& descriptor) {
  return std::make_unique<MockBackend>(descriptor);
}

}  // namespace internal
}  // namespace melanoscope
