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

#include "melanoscope/slide.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/png_io.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

int64_t CeilDiv(int64_t a, int64_t b) { return (a + b - 1) / b; }

absl::StatusOr<std::string> ReadTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::StatusOr<SlideMetadata> ParseMetadata(const std::string& text,
                                            const std::string& default_id) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("meta.json is not valid JSON: ", e.what()));
  }
  SlideMetadata meta;
  try {
    meta.id = j.value("id", default_id);
    meta.base_magnification =
        j.value("base_magnification", kDefaultBaseMagnification);
    meta.pixel_size_um = j.value("pixel_size_um", kDefaultPixelSizeUm);
    if (!j.contains("levels") || !j["levels"].is_array()) {
      return absl::InvalidArgumentError("meta.json has no \"levels\" array");
    }
    for (const auto& lj : j["levels"]) {
      LevelInfo level;
      level.file = lj.at("file").get<std::string>();
      level.width = lj.at("width").get<int64_t>();
      level.height = lj.at("height").get<int64_t>();
      level.downsample = lj.at("downsample").get<int64_t>();
      meta.levels.push_back(level);
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed meta.json: ", e.what()));
  }
  if (!meta.levels.empty()) {
    meta.base_width = meta.levels[0].width;
    meta.base_height = meta.levels[0].height;
  }
  return meta;
}

}  // namespace

std::vector<int64_t> SlideMetadata::level_downsamples() const {
  std::vector<int64_t> out;
  out.reserve(levels.size());
  for (const auto& l : levels) out.push_back(l.downsample);
  return out;
}

absl::Status ValidateMetadata(const SlideMetadata& meta) {
  if (meta.levels.empty()) {
    return absl::InvalidArgumentError("slide declares no levels");
  }
  if (!(meta.base_magnification > 0.0) || !std::isfinite(meta.base_magnification)) {
    return absl::InvalidArgumentError("base_magnification must be positive");
  }
  if (meta.base_width <= 0 || meta.base_height <= 0) {
    return absl::InvalidArgumentError("slide has empty level 0");
  }
  if (meta.levels[0].downsample != 1) {
    return absl::InvalidArgumentError("level 0 must have downsample 1");
  }
  for (size_t i = 0; i < meta.levels.size(); ++i) {
    const LevelInfo& l = meta.levels[i];
    if (i > 0 && l.downsample <= meta.levels[i - 1].downsample) {
      return absl::InvalidArgumentError(absl::StrCat(
          "level downsamples must strictly increase (level ", i, ")"));
    }
    const int64_t ew = CeilDiv(meta.base_width, l.downsample);
    const int64_t eh = CeilDiv(meta.base_height, l.downsample);
    if (l.width != ew || l.height != eh) {
      return absl::InvalidArgumentError(absl::StrCat(
          "inconsistent level dimensions: level ", i, " is ", l.width, "x",
          l.height, " but downsample ", l.downsample, " of ", meta.base_width,
          "x", meta.base_height, " requires ", ew, "x", eh));
    }
  }
  return absl::OkStatus();
}

SlideMetadata MakePyramidMetadata(const std::string& id, int64_t base_width,
                                  int64_t base_height, int level_count,
                                  double base_magnification) {
  SlideMetadata meta;
  meta.id = id;
  meta.base_width = base_width;
  meta.base_height = base_height;
  meta.base_magnification = base_magnification;
  for (int i = 0; i < level_count; ++i) {
    const int64_t ds = int64_t{1} << i;
    meta.levels.push_back({absl::StrCat("level_", i, ".png"),
                           CeilDiv(base_width, ds), CeilDiv(base_height, ds),
                           ds});
  }
  return meta;
}

absl::StatusOr<MagnificationLevel> LevelForMagnification(
    const SlideMetadata& meta, double target_mag) {
  constexpr double kEps = 1e-9;
  if (!(target_mag > 0.0)) {
    return absl::InvalidArgumentError("target magnification must be positive");
  }
  if (target_mag > meta.base_magnification * (1.0 + kEps)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "target magnification ", target_mag, "x exceeds the slide's base ",
        meta.base_magnification, "x"));
  }
  int best = 0;
  for (int i = 0; i < meta.level_count(); ++i) {
    if (meta.LevelMagnification(i) >= target_mag * (1.0 - kEps)) best = i;
  }
  MagnificationLevel out;
  out.level = best;
  const double ratio = target_mag / meta.LevelMagnification(best);
  out.residual_scale = std::abs(ratio - 1.0) < kEps ? 1.0 : ratio;
  return out;
}

absl::StatusOr<Slide> Slide::Open(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    return absl::NotFoundError(absl::StrCat("slide not found: ", path.string()));
  }
  if (fs::is_directory(path, ec)) {
    const fs::path meta_path = path / "meta.json";
    if (!fs::exists(meta_path, ec)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unsupported slide format: directory ", path.string(),
          " has no meta.json"));
    }
    MELANOSCOPE_ASSIGN_OR_RETURN(std::string text, ReadTextFile(meta_path));
    std::string default_id = path.filename().string();
    if (default_id.empty()) default_id = path.parent_path().filename().string();
    MELANOSCOPE_ASSIGN_OR_RETURN(SlideMetadata meta,
                                 ParseMetadata(text, default_id));
    MELANOSCOPE_RETURN_IF_ERROR(ValidateMetadata(meta));
    for (int i = 0; i < meta.level_count(); ++i) {
      const fs::path lp = path / meta.levels[i].file;
      if (!fs::exists(lp, ec)) {
        return absl::NotFoundError(absl::StrCat(
            "pyramid ", path.string(), " declares ", meta.level_count(),
            " levels but level ", i, " (", meta.levels[i].file,
            ") is missing"));
      }
      MELANOSCOPE_ASSIGN_OR_RETURN(PngInfo info, ReadPngInfo(lp));
      if (info.width != meta.levels[i].width ||
          info.height != meta.levels[i].height) {
        return absl::InvalidArgumentError(absl::StrCat(
            "inconsistent level dimensions: ", lp.string(), " is ", info.width,
            "x", info.height, " but meta.json declares ", meta.levels[i].width,
            "x", meta.levels[i].height));
      }
      if (info.interlaced) {
        return absl::UnimplementedError(
            absl::StrCat("interlaced PNG level not supported: ", lp.string()));
      }
    }
    return Slide(path, path, std::move(meta));
  }

  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext != ".png") {
    return absl::InvalidArgumentError(absl::StrCat(
        "unsupported slide format: ", path.string(),
        " (expected a pyramid directory or a .png file)"));
  }
  MELANOSCOPE_ASSIGN_OR_RETURN(PngInfo info, ReadPngInfo(path));
  if (info.interlaced) {
    return absl::UnimplementedError(
        absl::StrCat("interlaced PNG not supported: ", path.string()));
  }
  SlideMetadata meta;
  meta.id = path.stem().string();
  meta.base_width = info.width;
  meta.base_height = info.height;
  meta.levels.push_back(
      {path.filename().string(), info.width, info.height, 1});
  MELANOSCOPE_RETURN_IF_ERROR(ValidateMetadata(meta));
  return Slide(path, path.parent_path(), std::move(meta));
}

fs::path Slide::LevelPath(int i) const { return dir_ / meta_.levels[i].file; }

absl::StatusOr<RgbTile> Slide::ReadRegion(int level, int64_t x, int64_t y,
                                          int64_t w, int64_t h) const {
  if (level < 0 || level >= level_count()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "invalid level ", level, " (slide has ", level_count(), ")"));
  }
  if (w <= 0 || h <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("zero-area region request ", w, "x", h));
  }
  RgbTile tile(w, h);
  tile.origin_x = x;
  tile.origin_y = y;
  tile.level = level;

  const LevelInfo& info = meta_.levels[level];
  const int64_t x0 = std::max<int64_t>(x, 0);
  const int64_t y0 = std::max<int64_t>(y, 0);
  const int64_t x1 = std::min<int64_t>(x + w, info.width);
  const int64_t y1 = std::min<int64_t>(y + h, info.height);
  if (x0 >= x1 || y0 >= y1) return tile;

  MELANOSCOPE_ASSIGN_OR_RETURN(auto reader, PngRowReader::Open(LevelPath(level)));
  std::vector<uint8_t> row(static_cast<size_t>(info.width * 3));
  MELANOSCOPE_RETURN_IF_ERROR(reader->SkipTo(y0, row));
  for (int64_t yy = y0; yy < y1; ++yy) {
    MELANOSCOPE_RETURN_IF_ERROR(reader->ReadRow(row));
    std::copy(row.begin() + x0 * 3, row.begin() + x1 * 3,
              tile.pixels.begin() + ((yy - y) * w + (x0 - x)) * 3);
  }
  return tile;
}

absl::Status WriteSlideMetadata(const fs::path& dir, const SlideMetadata& meta) {
  json j;
  j["id"] = meta.id;
  j["base_magnification"] = meta.base_magnification;
  j["pixel_size_um"] = meta.pixel_size_um;
  j["levels"] = json::array();
  for (const auto& l : meta.levels) {
    j["levels"].push_back({{"file", l.file},
                           {"width", l.width},
                           {"height", l.height},
                           {"downsample", l.downsample}});
  }
  std::ofstream out(dir / "meta.json", std::ios::binary);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", (dir / "meta.json").string()));
  }
  out << j.dump(2) << "\n";
  return out ? absl::OkStatus()
             : absl::DataLossError("failed writing meta.json");
}

}  // namespace melanoscope
