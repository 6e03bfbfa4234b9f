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

/// @file dataset.h
/// @brief Labeled patch export for model training.
///
/// Layout: `<root>/<label>/<slide_id>_<x>_<y>_<level>.png` with x, y the
/// level-0 origin, plus `<root>/manifest.json` listing every record, the
/// channel statistics of the exported patches and any augmented copies.

#ifndef MELANOSCOPE_DATASET_H_
#define MELANOSCOPE_DATASET_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/slide.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

struct DatasetOptions {
  std::filesystem::path root;
  /// Side of the exported PNGs. Cells read at a different size are resized.
  int64_t patch_size = 256;
  /// Tops up smaller classes with augmented copies until every class
  /// matches the largest one.
  bool augment_underrepresented = false;
  uint64_t seed = 0;
  int png_compression = 3;
};

struct DatasetEntry {
  PatchRecord record;
  std::string file;  // relative to the dataset root
};

struct AugmentedEntry {
  std::string file;
  std::string source;  // file of the original patch
  Label label = Label::kBenign;
  uint64_t seed = 0;
};

struct DatasetManifest {
  int64_t patch_size = 256;
  NormalizationStats stats;
  std::vector<DatasetEntry> entries;
  std::vector<AugmentedEntry> augmented;
  std::array<int64_t, 3> class_counts = {0, 0, 0};  // originals only
};

std::string PatchFileName(const PatchRecord& record);

class DatasetWriter {
 public:
  explicit DatasetWriter(DatasetOptions options);

  /// Extracts and writes every labeled record of one slide. Records without
  /// a ground label are skipped.
  absl::Status AddSlide(const Slide& slide,
                        std::span<const PatchRecord> records);

  /// Writes augmented copies and the manifest. Fails if nothing was added.
  absl::StatusOr<DatasetManifest> Finish();

 private:
  DatasetOptions options_;
  DatasetManifest manifest_;
  ChannelStatsAccumulator stats_;
};

std::string ManifestToJson(const DatasetManifest& manifest);
absl::StatusOr<DatasetManifest> ManifestFromJson(const std::string& json);

/// Reads only the normalization statistics of a manifest.
absl::StatusOr<NormalizationStats> LoadManifestStats(
    const std::filesystem::path& path);

}  // namespace melanoscope

#endif  // MELANOSCOPE_DATASET_H_
