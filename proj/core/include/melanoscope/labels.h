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

#ifndef MELANOSCOPE_LABELS_H_
#define MELANOSCOPE_LABELS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "absl/status/statusor.h"

namespace melanoscope {

/// Tissue label vocabulary. The numeric value is the class index used by every
/// probability vector and confusion matrix (Benign, Malignant, Normal).
enum class Label : uint8_t {
  kBenign = 0,
  kMalignant = 1,
  kNormal = 2,
};

inline constexpr std::array<Label, 3> kAllLabels = {
    Label::kBenign, Label::kMalignant, Label::kNormal};

/// Final per-patch prediction. kUnseen marks patches whose top probability
/// falls below the probability threshold.
enum class PatchClass : uint8_t {
  kBenign = 0,
  kMalignant = 1,
  kNormal = 2,
  kUnseen = 3,
};

/// Number of output classes a model produces.
enum class Arity : uint8_t {
  kBinary = 2,
  kMulticlass = 3,
};

inline int ArityWidth(Arity arity) { return static_cast<int>(arity); }

/// Slide-level outcome.
enum class Verdict : uint8_t {
  kBenignNevus = 0,
  kMelanoma = 1,
};

/// Lower-case wire name ("benign", "malignant", "normal").
const char* LabelName(Label label);

/// Parses a label, case-insensitively. Unknown strings yield
/// InvalidArgument listing the allowed vocabulary.
absl::StatusOr<Label> ParseLabel(const std::string& text);

const char* PatchClassName(PatchClass cls);

/// Single-character code used in compact map serialization: B, M, N, U.
char PatchClassCode(PatchClass cls);
absl::StatusOr<PatchClass> PatchClassFromCode(char code);

inline PatchClass ToPatchClass(Label label) {
  return static_cast<PatchClass>(static_cast<uint8_t>(label));
}

inline std::optional<Label> ToLabel(PatchClass cls) {
  if (cls == PatchClass::kUnseen) return std::nullopt;
  return static_cast<Label>(static_cast<uint8_t>(cls));
}

/// "Melanoma" or "BenignNevus".
const char* VerdictName(Verdict verdict);
absl::StatusOr<Verdict> ParseVerdict(const std::string& text);

absl::StatusOr<Arity> ParseArity(const std::string& text);
const char* ArityName(Arity arity);

}  // namespace melanoscope

#endif  // MELANOSCOPE_LABELS_H_
