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

/// @file tiling.h
/// @brief Tissue segmentation, annotation rasterization, patch planning and
/// patch preprocessing.
///
/// Tissue is separated from glass by thresholding hue on the 8-bit
/// half-degree scale (hue8 = round(degrees / 2), range 0..180). H&E purple and
/// pink sit at 200..360 degrees, i.e. hue8 100..180. Achromatic pixels
/// (saturation below `sat_min`) are background whatever their hue.
///
/// Patches are planned on a non-overlapping grid at the level that serves the
/// target magnification. Only cells lying entirely inside the level are
/// considered. A cell carries label L when the fraction of its pixels that are
/// both foreground and inside an L polygon reaches `overlap_min`.

#ifndef MELANOSCOPE_TILING_H_
#define MELANOSCOPE_TILING_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/image.h"
#include "melanoscope/labels.h"
#include "melanoscope/slide.h"

namespace melanoscope {

// ---------------------------------------------------------------------------
// Color space + foreground
// ---------------------------------------------------------------------------

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

/// Hexcone RGB -> HSV. h is 0 for achromatic input.
Hsv RgbToHsv(Rgb pixel);

/// round(h / 2) computed exactly from the integer channels (ties round up).
int Hue8(Rgb pixel);

struct ForegroundOptions {
  int hue8_lo = 100;
  int hue8_hi = 180;
  double sat_min = 0.05;
};

absl::Status ValidateForegroundOptions(const ForegroundOptions& options);

/// The per-pixel tissue predicate.
bool IsForeground(Rgb pixel, const ForegroundOptions& options);

/// Evaluates IsForeground over `width` interleaved RGB pixels into `out`
/// (1 = foreground).
void ForegroundRow(std::span<const uint8_t> rgb, std::span<uint8_t> out,
                   const ForegroundOptions& options);

struct BinaryMask {
  int level = 0;
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> bits;  // row-major, 0/1

  bool At(int64_t x, int64_t y) const {
    return bits[static_cast<size_t>(y * width + x)] != 0;
  }
};

absl::StatusOr<BinaryMask> ForegroundMask(const RgbTile& tile,
                                          const ForegroundOptions& options = {});

// ---------------------------------------------------------------------------
// Annotation rasterization
// ---------------------------------------------------------------------------

/// Label mask cell codes: 0 = outside every polygon, otherwise label + 1.
inline constexpr uint8_t kNoLabelCode = 0;
inline uint8_t LabelCode(Label label) {
  return static_cast<uint8_t>(static_cast<uint8_t>(label) + 1);
}
inline std::optional<Label> LabelFromCode(uint8_t code) {
  if (code == kNoLabelCode) return std::nullopt;
  return static_cast<Label>(code - 1);
}

struct LabelMask {
  int level = 0;
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> cells;  // row-major label codes

  std::optional<Label> At(int64_t x, int64_t y) const {
    return LabelFromCode(cells[static_cast<size_t>(y * width + x)]);
  }
};

/// Scanline polygon fill against a level's pixel grid. A pixel takes the label
/// of the polygon containing its center (even-odd rule, half-open edges);
/// later polygons overwrite earlier ones.
class AnnotationRasterizer {
 public:
  AnnotationRasterizer(const AnnotationSet& annotations, int64_t downsample,
                       int64_t width, int64_t height);

  /// Fills rows [row_begin, row_end) into `out`, which holds
  /// (row_end - row_begin) * width codes.
  void RasterizeRows(int64_t row_begin, int64_t row_end,
                     std::span<uint8_t> out) const;

 private:
  struct Polygon {
    std::vector<Point> vertices;  // level-0 coordinates
    uint8_t code = kNoLabelCode;
    double min_y = 0.0;
    double max_y = 0.0;
  };
  std::vector<Polygon> polygons_;
  int64_t downsample_;
  int64_t width_;
  int64_t height_;
};

/// Rasterizes at `level`; width/height must equal that level's extent.
absl::StatusOr<LabelMask> RasterizeAnnotations(const AnnotationSet& annotations,
                                               const SlideMetadata& slide,
                                               int level, int64_t width,
                                               int64_t height);

// ---------------------------------------------------------------------------
// Patch planning
// ---------------------------------------------------------------------------

struct PatchRecord {
  std::string slide_id;
  int64_t x = 0;  // level-0 origin
  int64_t y = 0;
  int level = 0;
  int64_t size_px = 256;  // side length in pixels at `level`
  std::optional<Label> ground_label;
  double qualifying_fraction = 0.0;

  friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

/// How the overlap test combines the two masks.
enum class OverlapRule : uint8_t {
  /// fraction of pixels that are foreground AND labeled L.
  kConjunction,
  /// foreground fraction and L fraction each reach the threshold separately.
  kIndependent,
};

/// kAnnotated keeps only labeled cells (dataset extraction). kTissue keeps
/// every cell whose foreground fraction reaches the threshold, attaching a
/// ground label where one qualifies (whole-slide inference).
enum class PlanMode : uint8_t {
  kAnnotated,
  kTissue,
};

struct PlanOptions {
  int64_t patch_size = 256;  // at the target magnification
  double overlap_min = 0.70;
  double target_mag = 10.0;
  OverlapRule rule = OverlapRule::kConjunction;
  PlanMode mode = PlanMode::kAnnotated;
};

absl::Status ValidatePlanOptions(const PlanOptions& options);

/// Where and how large the planning grid is for one slide.
struct PlanGeometry {
  int level = 0;
  int64_t downsample = 1;
  int64_t level_width = 0;
  int64_t level_height = 0;
  double residual_scale = 1.0;
  int64_t cell_px = 256;  // grid stride and patch side at `level`
  int64_t cols = 0;       // full cells only
  int64_t rows = 0;
};

absl::StatusOr<PlanGeometry> ResolvePlanGeometry(const SlideMetadata& slide,
                                                 const PlanOptions& options);

/// Decides the records of one grid row from that row's masks. Both spans
/// cover `cell_px` rows of `level_width` pixels.
class BandPlanner {
 public:
  BandPlanner(std::string slide_id, const PlanGeometry& geometry,
              const PlanOptions& options);

  void PlanBand(int64_t band, std::span<const uint8_t> foreground,
                std::span<const uint8_t> labels,
                std::vector<PatchRecord>* out) const;

 private:
  std::string slide_id_;
  PlanGeometry geometry_;
  PlanOptions options_;
};

/// Plans from full-level masks. Records are ordered by (y, x).
absl::StatusOr<std::vector<PatchRecord>> PlanPatches(
    const SlideMetadata& slide, const BinaryMask& foreground,
    const LabelMask& labels, const PlanOptions& options);

/// Same result as PlanPatches() on the masks of `slide`, but decodes the level
/// one grid row at a time.
absl::StatusOr<std::vector<PatchRecord>> PlanPatchesStreaming(
    const Slide& slide, const AnnotationSet& annotations,
    const PlanOptions& options, const ForegroundOptions& foreground);

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

absl::StatusOr<RgbTile> ExtractPatch(const Slide& slide, const PatchRecord& rec);

using PatchSink = std::function<absl::Status(size_t index, RgbTile tile)>;

/// Extracts every record in one sequential decode of the level. Records must
/// share a level and be ordered by (y, x); `sink` sees them in input order.
absl::Status ExtractPatches(const Slide& slide,
                            std::span<const PatchRecord> records,
                            const PatchSink& sink);

// ---------------------------------------------------------------------------
// Normalization + augmentation
// ---------------------------------------------------------------------------

inline constexpr int64_t kModelInputSize = 224;

/// Per-channel statistics on the [0, 1] intensity scale.
struct NormalizationStats {
  std::array<double, 3> mean = {0.0, 0.0, 0.0};
  std::array<double, 3> stddev = {1.0, 1.0, 1.0};

  friend bool operator==(const NormalizationStats&,
                         const NormalizationStats&) = default;
};

absl::Status ValidateStats(const NormalizationStats& stats);

/// The ImageNet statistics torchvision backbones are trained with.
NormalizationStats ImageNetStats();

/// Single-pass, exact (integer) accumulation of channel moments.
class ChannelStatsAccumulator {
 public:
  void Add(const RgbTile& tile);
  void Merge(const ChannelStatsAccumulator& other);
  uint64_t pixel_count() const { return count_; }

  /// Population mean and standard deviation. Fails on an empty stream or a
  /// zero-variance channel.
  absl::StatusOr<NormalizationStats> Finish() const;

 private:
  uint64_t count_ = 0;
  std::array<uint64_t, 3> sum_ = {0, 0, 0};
  std::array<uint64_t, 3> sum_sq_ = {0, 0, 0};
};

absl::StatusOr<NormalizationStats> ComputeChannelStats(
    std::span<const RgbTile> patches);

/// 3 x 224 x 224 floats, channel-major.
struct TensorPatch {
  std::vector<float> data;

  float At(int c, int64_t y, int64_t x) const {
    return data[static_cast<size_t>((c * kModelInputSize + y) * kModelInputSize + x)];
  }
};

/// Bilinear resize to 224 x 224, scale to [0, 1], then (v - mean) / std.
absl::StatusOr<TensorPatch> NormalizePatch(const RgbTile& tile,
                                           const NormalizationStats& stats);

/// Random 224 x 224 crop followed by one of identity, horizontal flip,
/// vertical flip, or rotation by 90/180/270 degrees. Deterministic in `seed`.
absl::StatusOr<RgbTile> AugmentPatch(const RgbTile& tile, uint64_t seed);

}  // namespace melanoscope

#endif  // MELANOSCOPE_TILING_H_
