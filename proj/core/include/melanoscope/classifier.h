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

/// @file classifier.h
/// @brief Patch classification backends.
///
/// Backends return raw logits; Predict() applies the softmax so every backend
/// feeds the same probability vectors into the decision rules. Class order is
/// always (Benign, Malignant[, Normal]).

#ifndef MELANOSCOPE_CLASSIFIER_H_
#define MELANOSCOPE_CLASSIFIER_H_

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/image.h"
#include "melanoscope/labels.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

struct ProbabilityVector {
  std::vector<double> probs;

  size_t size() const { return probs.size(); }
  double operator[](size_t i) const { return probs[i]; }
  friend bool operator==(const ProbabilityVector&,
                         const ProbabilityVector&) = default;
};

inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Width 2 or 3, entries in [0, 1], sum within 1e-6 of one.
absl::Status ValidateProbabilityVector(const ProbabilityVector& p);

/// Numerically stable softmax.
ProbabilityVector Softmax(std::span<const double> logits);

enum class BackendKind : uint8_t { kMock, kNeural };

const char* BackendKindName(BackendKind kind);
absl::StatusOr<BackendKind> ParseBackendKind(const std::string& text);

struct BackendDescriptor {
  BackendKind kind = BackendKind::kMock;
  Arity arity = Arity::kMulticlass;
  int64_t input_channels = 3;
  int64_t input_size = kModelInputSize;
  /// Statistics the input tensors are normalized with.
  NormalizationStats stats = ImageNetStats();
  std::string stats_id = "imagenet";
};

/// Row-major batch of logits, `width` values per patch.
struct LogitBatch {
  int64_t width = 0;
  std::vector<double> values;
};

class Backend {
 public:
  virtual ~Backend() = default;

  const BackendDescriptor& descriptor() const { return descriptor_; }

  /// True if ComputeLogits may run concurrently on disjoint batches.
  virtual bool SupportsConcurrentPredict() const = 0;

  virtual absl::StatusOr<LogitBatch> ComputeLogits(
      std::span<const TensorPatch> batch) const = 0;

 protected:
  explicit Backend(BackendDescriptor descriptor)
      : descriptor_(std::move(descriptor)) {}

 private:
  BackendDescriptor descriptor_;
};

/// Anchor colors of the mock backend, in class order.
inline constexpr std::array<Rgb, 3> kMockAnchors = {
    Rgb{90, 60, 150},    // Benign
    Rgb{150, 40, 90},    // Malignant
    Rgb{230, 180, 200},  // Normal
};

/// Softmax temperature of the mock backend. Chosen so a patch sitting on an
/// anchor scores above 0.99 against the nearest other anchor (87.2 away).
inline constexpr double kMockTemperature = 10.0;

/// Mean RGB (0..255) of the un-normalized image behind `tensor`.
std::array<double, 3> MeanColor(const TensorPatch& tensor,
                                const NormalizationStats& stats);

/// Mock logits for a mean color: -distance / temperature to each anchor.
std::vector<double> MockLogits(const std::array<double, 3>& mean_rgb,
                               Arity arity);

/// Instantiates and validates a backend. Neural backends require an ONNX
/// model taking [N,3,224,224] float32 and producing [N,width] logits whose
/// width matches the descriptor's arity.
absl::StatusOr<std::unique_ptr<Backend>> LoadBackend(
    const BackendDescriptor& descriptor,
    const std::optional<std::filesystem::path>& model_path = std::nullopt);

/// Patches per backend call inside Predict().
inline constexpr size_t kPredictSubBatch = 16;

/// One probability vector per patch, in input order. Work is split over up to
/// `workers` threads when the backend allows concurrent calls.
absl::StatusOr<std::vector<ProbabilityVector>> Predict(
    const Backend& backend, std::span<const TensorPatch> batch,
    int workers = 1);

/// Index of the largest probability; ties go to the lowest index.
size_t ArgMax(const ProbabilityVector& p);

}  // namespace melanoscope

#endif  // MELANOSCOPE_CLASSIFIER_H_
