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

/// @file decision.h
/// @brief Patch thresholding, localization maps and slide verdicts.
///
/// A patch whose top probability falls below t_p becomes Unseen. Classified
/// patches fill one cell each of a localization map; the slide is called
/// Melanoma when malignant cells make up at least t_r of all lesion
/// (malignant + benign) cells.

#ifndef MELANOSCOPE_DECISION_H_
#define MELANOSCOPE_DECISION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/classifier.h"
#include "melanoscope/image.h"
#include "melanoscope/labels.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

struct Thresholds {
  double t_p = 0.99;  // probability threshold, (0, 1]
  double t_r = 0.04;  // ratio threshold, [0, 1]

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

absl::Status ValidateThresholds(const Thresholds& t);

/// Class at the arg-max if its probability reaches t_p, Unseen otherwise.
/// Fails on an invalid probability vector or t_p outside (0, 1].
absl::StatusOr<PatchClass> AssignClass(const ProbabilityVector& p, double t_p);

absl::StatusOr<std::vector<PatchClass>> AssignClasses(
    std::span<const ProbabilityVector> probs, double t_p);

/// Where a map sits on the slide.
struct MapGeometry {
  std::string slide_id;
  int level = 0;
  int64_t downsample = 1;
  int64_t level_width = 0;   // slide extent at `level`
  int64_t level_height = 0;
  int64_t stride = 256;      // cell side, pixels at `level`

  int64_t grid_width() const { return (level_width + stride - 1) / stride; }
  int64_t grid_height() const { return (level_height + stride - 1) / stride; }
};

MapGeometry MapGeometryFromPlan(const std::string& slide_id,
                                const PlanGeometry& plan);

class LocalizationMap {
 public:
  LocalizationMap() = default;
  explicit LocalizationMap(MapGeometry geometry);

  const MapGeometry& geometry() const { return geometry_; }
  const std::string& slide_id() const { return geometry_.slide_id; }
  int64_t grid_width() const { return width_; }
  int64_t grid_height() const { return height_; }
  size_t cell_count() const { return cells_.size(); }

  std::optional<PatchClass> At(int64_t row, int64_t col) const;
  void Set(int64_t row, int64_t col, std::optional<PatchClass> value);

  /// Cell holding the patch whose level-0 origin is (x, y).
  absl::StatusOr<std::pair<int64_t, int64_t>> CellOf(int64_t x,
                                                     int64_t y) const;

  friend bool operator==(const LocalizationMap& a, const LocalizationMap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.cells_ == b.cells_;
  }

 private:
  static constexpr uint8_t kAbsent = 0xff;

  MapGeometry geometry_;
  int64_t width_ = 0;
  int64_t height_ = 0;
  std::vector<uint8_t> cells_;  // PatchClass value or kAbsent
};

/// One cell per record. Fails on a length mismatch, a record outside the
/// grid, or two records in one cell.
absl::StatusOr<LocalizationMap> BuildMap(std::span<const PatchRecord> records,
                                         std::span<const PatchClass> classes,
                                         const MapGeometry& geometry);

/// Copies the present cells of `part` into `map`. Partial maps must be
/// disjoint.
absl::Status MergeMaps(const LocalizationMap& part, LocalizationMap* map);

struct ClassCounts {
  int64_t benign = 0;
  int64_t malignant = 0;
  int64_t normal = 0;
  int64_t unseen = 0;

  void Add(PatchClass c);
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

ClassCounts CountCells(const LocalizationMap& map);

struct RatioResult {
  double rho = 0.0;
  bool no_lesion = false;  // no malignant or benign cells
  ClassCounts counts;
};

/// rho = M / (M + B). Normal, Unseen and absent cells do not count. With no
/// lesion cells rho is 0 and no_lesion is set.
RatioResult MalignancyRatio(const LocalizationMap& map);
RatioResult MalignancyRatio(const ClassCounts& counts);

struct SlideVerdict {
  std::string slide_id;
  double rho = 0.0;
  Thresholds thresholds;
  Verdict verdict = Verdict::kBenignNevus;
  ClassCounts counts;
  bool no_lesion_flag = false;

  friend bool operator==(const SlideVerdict&, const SlideVerdict&) = default;
};

/// Melanoma iff rho >= t_r and there is at least one lesion cell.
Verdict DecideVerdict(double rho, double t_r, bool no_lesion);

SlideVerdict MakeSlideVerdict(const LocalizationMap& map,
                              const Thresholds& thresholds);

std::string SlideVerdictToJson(const SlideVerdict& v);
absl::StatusOr<SlideVerdict> SlideVerdictFromJson(const std::string& json);

/// Rows are strings of B/M/N/U with '.' for absent cells.
std::string LocalizationMapToJson(const LocalizationMap& map);
absl::StatusOr<LocalizationMap> LocalizationMapFromJson(
    const std::string& json);

// ---------------------------------------------------------------------------
// Threshold calibration
// ---------------------------------------------------------------------------

/// Per-patch predictions and truth for one validation slide.
struct CalibrationSlide {
  std::vector<PatchRecord> records;
  std::vector<ProbabilityVector> probs;
  MapGeometry geometry;
  Verdict truth = Verdict::kBenignNevus;
};

struct CalibrationResult {
  Thresholds thresholds;
  double sensitivity = 0.0;
  double specificity = 0.0;
  bool single_class = false;
};

/// k/100 for k = 50..99.
std::vector<double> DefaultProbabilityGrid();
/// k/100 for k = 1..50.
std::vector<double> DefaultRatioGrid();

/// Exhaustive grid search maximizing (sensitivity, specificity, -t_r)
/// lexicographically. Grid points are scanned t_p-major in the given order
/// and the first best point wins. When every slide has the same truth, the
/// undefined rate counts as 1 and a warning is logged.
absl::StatusOr<CalibrationResult> Calibrate(
    std::span<const CalibrationSlide> slides, std::span<const double> tp_grid,
    std::span<const double> tr_grid, int workers = 1);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline constexpr Rgb kMalignantColor{230, 40, 40};
inline constexpr Rgb kBenignColor{60, 180, 75};
inline constexpr Rgb kNormalColor{70, 130, 220};
inline constexpr Rgb kUnseenColor{200, 200, 200};
inline constexpr Rgb kAbsentColor{255, 255, 255};

Rgb PatchClassColor(PatchClass c);

/// Each cell becomes a scale x scale block.
absl::StatusOr<RgbTile> RenderMap(const LocalizationMap& map, int scale);

/// Places `left` and `right` side by side, top-aligned on white.
RgbTile SideBySide(const RgbTile& left, const RgbTile& right, int gap = 0);

}  // namespace melanoscope

#endif  // MELANOSCOPE_DECISION_H_
