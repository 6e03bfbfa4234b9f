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

#include "melanoscope/labels.h"

#include <algorithm>
#include <cctype>

#include "absl/strings/str_cat.h"

namespace melanoscope {
namespace {

std::string Lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

const char* LabelName(Label label) {
  switch (label) {
    case Label::kBenign:
      return "benign";
    case Label::kMalignant:
      return "malignant";
    case Label::kNormal:
      return "normal";
  }
  return "?";
}

absl::StatusOr<Label> ParseLabel(const std::string& text) {
  const std::string lower = Lower(text);
  for (Label l : kAllLabels) {
    if (lower == LabelName(l)) return l;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown label \"", text,
                   "\"; allowed labels are: benign, malignant, normal"));
}

const char* PatchClassName(PatchClass cls) {
  switch (cls) {
    case PatchClass::kBenign:
      return "benign";
    case PatchClass::kMalignant:
      return "malignant";
    case PatchClass::kNormal:
      return "normal";
    case PatchClass::kUnseen:
      return "unseen";
  }
  return "?";
}

char PatchClassCode(PatchClass cls) {
  switch (cls) {
    case PatchClass::kBenign:
      return 'B';
    case PatchClass::kMalignant:
      return 'M';
    case PatchClass::kNormal:
      return 'N';
    case PatchClass::kUnseen:
      return 'U';
  }
  return '?';
}

absl::StatusOr<PatchClass> PatchClassFromCode(char code) {
  switch (code) {
    case 'B':
      return PatchClass::kBenign;
    case 'M':
      return PatchClass::kMalignant;
    case 'N':
      return PatchClass::kNormal;
    case 'U':
      return PatchClass::kUnseen;
    default:
      return absl::InvalidArgumentError(
          absl::StrCat("unknown patch class code '", std::string(1, code),
                       "'"));
  }
}

const char* VerdictName(Verdict verdict) {
  return verdict == Verdict::kMelanoma ? "Melanoma" : "BenignNevus";
}

absl::StatusOr<Verdict> ParseVerdict(const std::string& text) {
  const std::string lower = Lower(text);
  if (lower == "melanoma" || lower == "malignant") return Verdict::kMelanoma;
  if (lower == "benignnevus" || lower == "benign_nevus" || lower == "benign") {
    return Verdict::kBenignNevus;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown verdict \"", text, "\"; expected Melanoma or BenignNevus"));
}

absl::StatusOr<Arity> ParseArity(const std::string& text) {
  const std::string lower = Lower(text);
  if (lower == "binary" || lower == "2") return Arity::kBinary;
  if (lower == "multiclass" || lower == "3") return Arity::kMulticlass;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown arity \"", text, "\"; expected binary|multiclass"));
}

const char* ArityName(Arity arity) {
  return arity == Arity::kBinary ? "binary" : "multiclass";
}

}  // namespace melanoscope
