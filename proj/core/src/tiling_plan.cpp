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

#include <algorithm>
#include <cmath>
#include <deque>

#include "absl/strings/str_cat.h"
#include "melanoscope/png_io.h"
#include "melanoscope/status_macros.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

absl::Status ValidatePlanOptions(const PlanOptions& o) {
  if (o.patch_size < 1) {
    return absl::InvalidArgumentError("patch_size must be at least 1");
  }
  if (!(o.overlap_min > 0.0 && o.overlap_min <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "overlap_min ", o.overlap_min, " must lie within (0, 1]"));
  }
  if (!(o.target_mag > 0.0) || !std::isfinite(o.target_mag)) {
    return absl::InvalidArgumentError("target magnification must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<PlanGeometry> ResolvePlanGeometry(const SlideMetadata& slide,
                                                 const PlanOptions& options) {
  MELANOSCOPE_RETURN_IF_ERROR(ValidatePlanOptions(options));
  MELANOSCOPE_ASSIGN_OR_RETURN(MagnificationLevel ml,
                               LevelForMagnification(slide, options.target_mag));
  PlanGeometry g;
  g.level = ml.level;
  g.residual_scale = ml.residual_scale;
  const LevelInfo& info = slide.levels[ml.level];
  g.downsample = info.downsample;
  g.level_width = info.width;
  g.level_height = info.height;
  g.cell_px = std::max<int64_t>(
      1, std::llround(static_cast<double>(options.patch_size) / ml.residual_scale));
  g.cols = g.level_width / g.cell_px;
  g.rows = g.level_height / g.cell_px;
  return g;
}

BandPlanner::BandPlanner(std::string slide_id, const PlanGeometry& geometry,
                         const PlanOptions& options)
    : slide_id_(std::move(slide_id)), geometry_(geometry), options_(options) {}

void BandPlanner::PlanBand(int64_t band, std::span<const uint8_t> foreground,
                           std::span<const uint8_t> labels,
                           std::vector<PatchRecord>* out) const {
  const int64_t cell = geometry_.cell_px;
  const int64_t cols = geometry_.cols;
  const int64_t width = geometry_.level_width;

  struct Counts {
    int64_t fg = 0;
    std::array<int64_t, 3> both = {0, 0, 0};   // foreground AND label
    std::array<int64_t, 3> label = {0, 0, 0};  // label alone
  };
  std::vector<Counts> counts(static_cast<size_t>(cols));
  for (int64_t r = 0; r < cell; ++r) {
    const uint8_t* fg = foreground.data() + r * width;
    const uint8_t* lb = labels.data() + r * width;
    for (int64_t col = 0; col < cols; ++col) {
      Counts& c = counts[static_cast<size_t>(col)];
      const int64_t x0 = col * cell;
      for (int64_t x = x0; x < x0 + cell; ++x) {
        const uint8_t code = lb[x];
        if (fg[x]) {
          ++c.fg;
          if (code != kNoLabelCode) ++c.both[code - 1];
        }
        if (code != kNoLabelCode) ++c.label[code - 1];
      }
    }
  }

  const double area = static_cast<double>(cell) * static_cast<double>(cell);
  const double min = options_.overlap_min;
  for (int64_t col = 0; col < cols; ++col) {
    const Counts& c = counts[static_cast<size_t>(col)];
    const double fg_frac = static_cast<double>(c.fg) / area;

    // Best qualifying label: largest fraction, then label order.
    std::optional<Label> best;
    double best_frac = -1.0;
    for (Label l : kAllLabels) {
      const size_t li = static_cast<size_t>(l);
      double frac;
      if (options_.rule == OverlapRule::kConjunction) {
        frac = static_cast<double>(c.both[li]) / area;
        if (!(frac >= min)) continue;
      } else {
        const double lab_frac = static_cast<double>(c.label[li]) / area;
        if (!(fg_frac >= min && lab_frac >= min)) continue;
        frac = std::min(fg_frac, lab_frac);
      }
      if (frac > best_frac) {
        best_frac = frac;
        best = l;
      }
    }

    PatchRecord rec;
    rec.slide_id = slide_id_;
    rec.x = col * cell * geometry_.downsample;
    rec.y = band * cell * geometry_.downsample;
    rec.level = geometry_.level;
    rec.size_px = cell;
    if (options_.mode == PlanMode::kAnnotated) {
      if (!best) continue;
      rec.ground_label = best;
      rec.qualifying_fraction = best_frac;
    } else {
      if (!(fg_frac >= min)) continue;
      rec.ground_label = best;
      rec.qualifying_fraction = fg_frac;
    }
    out->push_back(std::move(rec));
  }
}

absl::StatusOr<std::vector<PatchRecord>> PlanPatches(
    const SlideMetadata& slide, const BinaryMask& foreground,
    const LabelMask& labels, const PlanOptions& options) {
  MELANOSCOPE_ASSIGN_OR_RETURN(PlanGeometry g,
                               ResolvePlanGeometry(slide, options));
  if (foreground.level != g.level || labels.level != g.level) {
    return absl::InvalidArgumentError(absl::StrCat(
        "mask/level mismatch: magnification ", options.target_mag,
        "x plans at level ", g.level, " but masks are at levels ",
        foreground.level, "/", labels.level));
  }
  if (foreground.width != g.level_width || foreground.height != g.level_height ||
      labels.width != g.level_width || labels.height != g.level_height) {
    return absl::InvalidArgumentError(absl::StrCat(
        "mask/level mismatch: level ", g.level, " is ", g.level_width, "x",
        g.level_height, " but masks are ", foreground.width, "x",
        foreground.height, " and ", labels.width, "x", labels.height));
  }
  std::vector<PatchRecord> records;
  const BandPlanner planner(slide.id, g, options);
  const size_t band_len = static_cast<size_t>(g.cell_px * g.level_width);
  for (int64_t band = 0; band < g.rows; ++band) {
    const size_t offset = static_cast<size_t>(band * g.cell_px * g.level_width);
    planner.PlanBand(band,
                     std::span<const uint8_t>(foreground.bits).subspan(offset, band_len),
                     std::span<const uint8_t>(labels.cells).subspan(offset, band_len),
                     &records);
  }
  return records;
}

absl::StatusOr<std::vector<PatchRecord>> PlanPatchesStreaming(
    const Slide& slide, const AnnotationSet& annotations,
    const PlanOptions& options, const ForegroundOptions& foreground) {
  MELANOSCOPE_RETURN_IF_ERROR(ValidateForegroundOptions(foreground));
  MELANOSCOPE_ASSIGN_OR_RETURN(PlanGeometry g,
                               ResolvePlanGeometry(slide.metadata(), options));
  std::vector<PatchRecord> records;
  if (g.rows == 0 || g.cols == 0) return records;

  MELANOSCOPE_ASSIGN_OR_RETURN(auto reader,
                               PngRowReader::Open(slide.LevelPath(g.level)));
  const AnnotationRasterizer rasterizer(annotations, g.downsample,
                                        g.level_width, g.level_height);
  const BandPlanner planner(slide.id(), g, options);

  const size_t band_px = static_cast<size_t>(g.cell_px * g.level_width);
  std::vector<uint8_t> rgb_row(static_cast<size_t>(g.level_width * 3));
  std::vector<uint8_t> fg(band_px);
  std::vector<uint8_t> labels(band_px);
  for (int64_t band = 0; band < g.rows; ++band) {
    for (int64_t r = 0; r < g.cell_px; ++r) {
      MELANOSCOPE_RETURN_IF_ERROR(reader->ReadRow(rgb_row));
      ForegroundRow(rgb_row,
                    std::span<uint8_t>(fg.data() + r * g.level_width,
                                       static_cast<size_t>(g.level_width)),
                    foreground);
    }
    rasterizer.RasterizeRows(band * g.cell_px, (band + 1) * g.cell_px, labels);
    planner.PlanBand(band, fg, labels, &records);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

namespace {

struct LevelRect {
  int64_t x = 0;
  int64_t y = 0;
  int64_t size = 0;
};

absl::StatusOr<LevelRect> RecordRect(const Slide& slide, const PatchRecord& rec) {
  if (rec.level < 0 || rec.level >= slide.level_count()) {
    return absl::OutOfRangeError(absl::StrCat(
        "out-of-bounds record: level ", rec.level, " does not exist"));
  }
  const LevelInfo& info = slide.level(rec.level);
  if (rec.x % info.downsample != 0 || rec.y % info.downsample != 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "record origin (", rec.x, ",", rec.y,
        ") is not aligned to level ", rec.level));
  }
  LevelRect r{rec.x / info.downsample, rec.y / info.downsample, rec.size_px};
  if (r.size <= 0 || r.x < 0 || r.y < 0 || r.x + r.size > info.width ||
      r.y + r.size > info.height) {
    return absl::OutOfRangeError(absl::StrCat(
        "out-of-bounds record: ", r.size, "px patch at (", r.x, ",", r.y,
        ") exceeds level ", rec.level, " extent ", info.width, "x",
        info.height));
  }
  return r;
}

}  // namespace

absl::StatusOr<RgbTile> ExtractPatch(const Slide& slide, const PatchRecord& rec) {
  MELANOSCOPE_ASSIGN_OR_RETURN(LevelRect r, RecordRect(slide, rec));
  return slide.ReadRegion(rec.level, r.x, r.y, r.size, r.size);
}

absl::Status ExtractPatches(const Slide& slide,
                            std::span<const PatchRecord> records,
                            const PatchSink& sink) {
  if (records.empty()) return absl::OkStatus();
  const int level = records.front().level;
  std::vector<LevelRect> rects;
  rects.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].level != level) {
      return absl::InvalidArgumentError(
          "ExtractPatches requires records from a single level");
    }
    if (i > 0 && std::pair(records[i].y, records[i].x) <
                     std::pair(records[i - 1].y, records[i - 1].x)) {
      return absl::InvalidArgumentError(
          "ExtractPatches requires records ordered by (y, x)");
    }
    MELANOSCOPE_ASSIGN_OR_RETURN(LevelRect r, RecordRect(slide, records[i]));
    rects.push_back(r);
  }

  const int64_t width = slide.level(level).width;
  MELANOSCOPE_ASSIGN_OR_RETURN(auto reader,
                               PngRowReader::Open(slide.LevelPath(level)));
  // Rows [window_y0, window_y0 + window.size()) of the level.
  std::deque<std::vector<uint8_t>> window;
  int64_t window_y0 = 0;
  std::vector<uint8_t> scratch(static_cast<size_t>(width * 3));

  size_t i = 0;
  while (i < rects.size()) {
    const int64_t y = rects[i].y;
    size_t j = i;
    int64_t need_end = y;
    while (j < rects.size() && rects[j].y == y) {
      need_end = std::max(need_end, y + rects[j].size);
      ++j;
    }
    while (!window.empty() && window_y0 < y) {
      window.pop_front();
      ++window_y0;
    }
    if (window.empty()) {
      MELANOSCOPE_RETURN_IF_ERROR(reader->SkipTo(y, scratch));
      window_y0 = y;
    }
    while (window_y0 + static_cast<int64_t>(window.size()) < need_end) {
      std::vector<uint8_t> row(static_cast<size_t>(width * 3));
      MELANOSCOPE_RETURN_IF_ERROR(reader->ReadRow(row));
      window.push_back(std::move(row));
    }
    for (size_t k = i; k < j; ++k) {
      const LevelRect& r = rects[k];
      RgbTile tile(r.size, r.size);
      tile.origin_x = r.x;
      tile.origin_y = r.y;
      tile.level = level;
      for (int64_t yy = 0; yy < r.size; ++yy) {
        const auto& src = window[static_cast<size_t>(r.y + yy - window_y0)];
        std::copy(src.begin() + r.x * 3, src.begin() + (r.x + r.size) * 3,
                  tile.pixels.begin() + yy * r.size * 3);
      }
      MELANOSCOPE_RETURN_IF_ERROR(sink(k, std::move(tile)));
    }
    i = j;
  }
  return absl::OkStatus();
}

}  // namespace melanoscope
