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

/// @file artifacts.h
/// @brief On-disk formats passed between pipeline stages.
///
/// Payloads contain no timestamps or host details, so equal inputs give
/// byte-identical files.

#ifndef MELANOSCOPE_ARTIFACTS_H_
#define MELANOSCOPE_ARTIFACTS_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/classifier.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

absl::StatusOr<std::string> ReadTextFile(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
absl::Status WriteTextFile(const std::filesystem::path& path,
                           const std::string& text);

/// Output of the planning stage for one slide.
struct PlanArtifact {
  std::string slide_id;
  std::string slide_path;
  PlanOptions options;
  PlanGeometry geometry;
  std::vector<PatchRecord> records;
};

std::string PlanToJson(const PlanArtifact& plan);
absl::StatusOr<PlanArtifact> PlanFromJson(const std::string& json);

/// One line of the inference stage's JSONL output.
struct InferRow {
  size_t index = 0;  // position in the plan's record list
  int64_t x = 0;
  int64_t y = 0;
  int level = 0;
  ProbabilityVector probs;
};

std::string InferRowToJsonLine(const InferRow& row);

/// Parses a whole JSONL file. Rows must be numbered 0..n-1 in order.
absl::StatusOr<std::vector<InferRow>> ParseInferJsonl(const std::string& text);

/// Checks that inference rows line up with the plan's records.
absl::Status MatchInferToPlan(const PlanArtifact& plan,
                              const std::vector<InferRow>& rows);

}  // namespace melanoscope

#endif  // MELANOSCOPE_ARTIFACTS_H_
