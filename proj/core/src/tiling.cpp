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

#include "absl/strings/str_cat.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

Hsv RgbToHsv(Rgb p) {
  const int mx = std::max({p.r, p.g, p.b});
  const int mn = std::min({p.r, p.g, p.b});
  const double d = mx - mn;
  Hsv out;
  out.v = mx / 255.0;
  out.s = mx == 0 ? 0.0 : d / mx;
  if (d == 0) return out;
  double h;
  if (mx == p.r) {
    h = 60.0 * ((p.g - p.b) / d);
  } else if (mx == p.g) {
    h = 60.0 * ((p.b - p.r) / d + 2.0);
  } else {
    h = 60.0 * ((p.r - p.g) / d + 4.0);
  }
  if (h < 0.0) h += 360.0;
  out.h = h;
  return out;
}

int Hue8(Rgb p) {
  const int mx = std::max({p.r, p.g, p.b});
  const int mn = std::min({p.r, p.g, p.b});
  const int d = mx - mn;
  if (d == 0) return 0;
  // h / 2 = 30 * num / d with num >= 0.
  int num;
  if (mx == p.r) {
    num = p.g - p.b;
    if (num < 0) num += 6 * d;
  } else if (mx == p.g) {
    num = p.b - p.r + 2 * d;
  } else {
    num = p.r - p.g + 4 * d;
  }
  return (60 * num + d) / (2 * d);
}

absl::Status ValidateForegroundOptions(const ForegroundOptions& o) {
  if (o.hue8_lo < 0 || o.hue8_hi > 180) {
    return absl::InvalidArgumentError(absl::StrCat(
        "hue range [", o.hue8_lo, ",", o.hue8_hi, "] must lie within [0,180]"));
  }
  if (o.hue8_lo > o.hue8_hi) {
    return absl::InvalidArgumentError(absl::StrCat(
        "inverted hue range [", o.hue8_lo, ",", o.hue8_hi, "]"));
  }
  if (!(o.sat_min >= 0.0 && o.sat_min <= 1.0)) {
    return absl::InvalidArgumentError("sat_min must lie within [0,1]");
  }
  return absl::OkStatus();
}

bool IsForeground(Rgb p, const ForegroundOptions& o) {
  const int mx = std::max({p.r, p.g, p.b});
  const int mn = std::min({p.r, p.g, p.b});
  const double s = mx == 0 ? 0.0 : static_cast<double>(mx - mn) / mx;
  if (s < o.sat_min) return false;
  const int h8 = Hue8(p);
  return h8 >= o.hue8_lo && h8 <= o.hue8_hi;
}

void ForegroundRow(std::span<const uint8_t> rgb, std::span<uint8_t> out,
                   const ForegroundOptions& o) {
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) {
    const Rgb p{rgb[i * 3], rgb[i * 3 + 1], rgb[i * 3 + 2]};
    out[i] = IsForeground(p, o) ? 1 : 0;
  }
}

absl::StatusOr<BinaryMask> ForegroundMask(const RgbTile& tile,
                                          const ForegroundOptions& options) {
  if (auto st = ValidateForegroundOptions(options); !st.ok()) return st;
  if (!tile.Valid()) return absl::InvalidArgumentError("malformed RGB tile");
  BinaryMask mask;
  mask.level = tile.level;
  mask.width = tile.width;
  mask.height = tile.height;
  mask.bits.resize(static_cast<size_t>(tile.width * tile.height));
  for (int64_t y = 0; y < tile.height; ++y) {
    ForegroundRow(tile.Row(y),
                  std::span<uint8_t>(mask.bits.data() + y * tile.width,
                                     static_cast<size_t>(tile.width)),
                  options);
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

AnnotationRasterizer::AnnotationRasterizer(const AnnotationSet& annotations,
                                           int64_t downsample, int64_t width,
                                           int64_t height)
    : downsample_(downsample), width_(width), height_(height) {
  for (const auto& region : annotations.regions) {
    if (region.polygon.size() < 3) continue;
    Polygon p;
    p.vertices = region.polygon;
    p.code = LabelCode(region.label);
    p.min_y = p.max_y = region.polygon[0].y;
    for (const auto& v : region.polygon) {
      p.min_y = std::min(p.min_y, v.y);
      p.max_y = std::max(p.max_y, v.y);
    }
    polygons_.push_back(std::move(p));
  }
}

void AnnotationRasterizer::RasterizeRows(int64_t row_begin, int64_t row_end,
                                         std::span<uint8_t> out) const {
  std::fill(out.begin(), out.end(), kNoLabelCode);
  const double ds = static_cast<double>(downsample_);
  std::vector<double> xs;
  for (const Polygon& poly : polygons_) {
    // Rows whose centers fall inside the polygon's vertical extent.
    const int64_t first = std::max<int64_t>(
        row_begin, static_cast<int64_t>(std::ceil(poly.min_y / ds - 0.5)));
    const int64_t last = std::min<int64_t>(
        row_end, static_cast<int64_t>(std::ceil(poly.max_y / ds - 0.5)) + 1);
    const size_t n = poly.vertices.size();
    for (int64_t row = first; row < last; ++row) {
      const double yc = (row + 0.5) * ds;
      xs.clear();
      for (size_t i = 0; i < n; ++i) {
        const Point& a = poly.vertices[i];
        const Point& b = poly.vertices[(i + 1) % n];
        if ((a.y <= yc) != (b.y <= yc)) {
          xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
      }
      if (xs.size() < 2) continue;
      std::sort(xs.begin(), xs.end());
      uint8_t* dst = out.data() + (row - row_begin) * width_;
      for (size_t k = 0; k + 1 < xs.size(); k += 2) {
        // Pixel c is covered iff xs[k] <= (c + 0.5) * ds < xs[k + 1].
        const int64_t c0 = std::max<int64_t>(
            0, static_cast<int64_t>(std::ceil(xs[k] / ds - 0.5)));
        const int64_t c1 = std::min<int64_t>(
            width_, static_cast<int64_t>(std::ceil(xs[k + 1] / ds - 0.5)));
        for (int64_t c = c0; c < c1; ++c) dst[c] = poly.code;
      }
    }
  }
}

absl::StatusOr<LabelMask> RasterizeAnnotations(const AnnotationSet& annotations,
                                               const SlideMetadata& slide,
                                               int level, int64_t width,
                                               int64_t height) {
  if (level < 0 || level >= slide.level_count()) {
    return absl::InvalidArgumentError(absl::StrCat("invalid level ", level));
  }
  const LevelInfo& info = slide.levels[level];
  if (width != info.width || height != info.height) {
    return absl::InvalidArgumentError(absl::StrCat(
        "label mask extent ", width, "x", height, " does not match level ",
        level, " extent ", info.width, "x", info.height));
  }
  LabelMask mask;
  mask.level = level;
  mask.width = width;
  mask.height = height;
  mask.cells.resize(static_cast<size_t>(width * height));
  AnnotationRasterizer(annotations, info.downsample, width, height)
      .RasterizeRows(0, height, mask.cells);
  return mask;
}

}  // namespace melanoscope
