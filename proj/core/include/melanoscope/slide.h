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

/// @file slide.h
/// @brief Multi-resolution slide access.
///
/// ## On-disk pyramid layout
///
/// A slide is a directory holding `meta.json` and one PNG per level:
///
///     {
///       "id": "slide_001",              (optional, defaults to dir name)
///       "base_magnification": 40.0,
///       "pixel_size_um": 0.2199,
///       "levels": [
///         {"file": "level_0.png", "width": 4096, "height": 4096, "downsample": 1},
///         {"file": "level_1.png", "width": 2048, "height": 2048, "downsample": 2}
///       ]
///     }
///
/// Level i must measure ceil(base / downsample_i) in each dimension and
/// downsamples must start at 1 and strictly increase. A bare `.png` file is
/// accepted as a single-level pyramid at 40x.
///
/// A Slide is immutable after Open(); ReadRegion() keeps no shared state and
/// may be called concurrently.

#ifndef MELANOSCOPE_SLIDE_H_
#define MELANOSCOPE_SLIDE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/image.h"
#include "melanoscope/labels.h"

namespace melanoscope {

inline constexpr double kDefaultBaseMagnification = 40.0;
inline constexpr double kDefaultPixelSizeUm = 0.2199;

struct LevelInfo {
  std::string file;  // relative to the pyramid directory
  int64_t width = 0;
  int64_t height = 0;
  int64_t downsample = 1;
};

/// Geometry-only description of a slide. Planning and map assembly only need
/// this, so they can run on synthetic metadata without pixel files.
struct SlideMetadata {
  std::string id;
  int64_t base_width = 0;
  int64_t base_height = 0;
  double base_magnification = kDefaultBaseMagnification;
  double pixel_size_um = kDefaultPixelSizeUm;
  std::vector<LevelInfo> levels;

  int level_count() const { return static_cast<int>(levels.size()); }
  std::vector<int64_t> level_downsamples() const;
  double LevelMagnification(int level) const {
    return base_magnification / static_cast<double>(levels[level].downsample);
  }
};

/// Checks the level invariants (downsample chain, ceil dimensions).
absl::Status ValidateMetadata(const SlideMetadata& meta);

/// Builds level metadata for a power-of-two pyramid with `level_count` levels.
SlideMetadata MakePyramidMetadata(const std::string& id, int64_t base_width,
                                  int64_t base_height, int level_count,
                                  double base_magnification =
                                      kDefaultBaseMagnification);

struct MagnificationLevel {
  int level = 0;
  /// Extra scale factor (<= 1) to reach the target from the level's own
  /// magnification by resampling. 1.0 when a level matches exactly.
  double residual_scale = 1.0;
};

/// Picks the coarsest level whose magnification still reaches `target_mag`.
absl::StatusOr<MagnificationLevel> LevelForMagnification(
    const SlideMetadata& meta, double target_mag);

class Slide {
 public:
  /// Opens a pyramid directory or a single PNG. Validates metadata and the
  /// PNG headers of every level; no pixel data is decoded.
  static absl::StatusOr<Slide> Open(const std::filesystem::path& path);

  const SlideMetadata& metadata() const { return meta_; }
  const std::string& id() const { return meta_.id; }
  int64_t base_width() const { return meta_.base_width; }
  int64_t base_height() const { return meta_.base_height; }
  int level_count() const { return meta_.level_count(); }
  std::vector<int64_t> level_downsamples() const {
    return meta_.level_downsamples();
  }
  double base_magnification() const { return meta_.base_magnification; }
  double pixel_size_um() const { return meta_.pixel_size_um; }
  const LevelInfo& level(int i) const { return meta_.levels[i]; }
  std::filesystem::path LevelPath(int i) const;
  const std::filesystem::path& path() const { return path_; }

  /// Returns exactly w*h pixels of `level`, starting at (x, y) in that level's
  /// pixel space. Area outside the level is white.
  absl::StatusOr<RgbTile> ReadRegion(int level, int64_t x, int64_t y,
                                     int64_t w, int64_t h) const;

  absl::StatusOr<MagnificationLevel> LevelForMagnification(
      double target_mag) const {
    return melanoscope::LevelForMagnification(meta_, target_mag);
  }

 private:
  Slide(std::filesystem::path path, std::filesystem::path dir,
        SlideMetadata meta)
      : path_(std::move(path)), dir_(std::move(dir)), meta_(std::move(meta)) {}

  std::filesystem::path path_;
  std::filesystem::path dir_;
  SlideMetadata meta_;
};

/// Writes `meta.json` for a pyramid directory.
absl::Status WriteSlideMetadata(const std::filesystem::path& dir,
                                const SlideMetadata& meta);

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// One annotated polygon in level-0 pixel coordinates. The ring is stored
/// open (no repeated closing vertex).
struct AnnotatedRegion {
  std::vector<Point> polygon;
  Label label = Label::kBenign;
  friend bool operator==(const AnnotatedRegion&,
                         const AnnotatedRegion&) = default;
};

struct AnnotationSet {
  std::vector<AnnotatedRegion> regions;
  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

/// Parses a GeoJSON FeatureCollection of Polygon features, each with a
/// `"label"` property. If `bounds` is given, polygons are clipped to
/// [0, width] x [0, height]; regions clipped away entirely are dropped.
absl::StatusOr<AnnotationSet> ParseAnnotations(
    const std::string& geojson,
    std::optional<std::pair<int64_t, int64_t>> bounds = std::nullopt);

absl::StatusOr<AnnotationSet> LoadAnnotations(
    const std::filesystem::path& path,
    std::optional<std::pair<int64_t, int64_t>> bounds = std::nullopt);

std::string SerializeAnnotations(const AnnotationSet& set);
absl::Status SaveAnnotations(const std::filesystem::path& path,
                             const AnnotationSet& set);

/// Sutherland-Hodgman clip of a polygon against an axis-aligned rectangle.
std::vector<Point> ClipPolygon(const std::vector<Point>& polygon, double width,
                               double height);

}  // namespace melanoscope

#endif  // MELANOSCOPE_SLIDE_H_
