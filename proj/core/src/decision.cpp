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

#include "melanoscope/decision.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/status_macros.h"

namespace melanoscope {

using Json = nlohmann::ordered_json;

absl::Status ValidateThresholds(const Thresholds& t) {
  if (!(t.t_p > 0.0 && t.t_p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("t_p must be in (0, 1], got ", t.t_p));
  }
  if (!(t.t_r >= 0.0 && t.t_r <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("t_r must be in [0, 1], got ", t.t_r));
  }
  return absl::OkStatus();
}

absl::StatusOr<PatchClass> AssignClass(const ProbabilityVector& p, double t_p) {
  MELANOSCOPE_RETURN_IF_ERROR(ValidateThresholds({t_p, 0.0}));
  MELANOSCOPE_RETURN_IF_ERROR(ValidateProbabilityVector(p));
  const size_t best = ArgMax(p);
  if (p[best] < t_p) return PatchClass::kUnseen;
  return static_cast<PatchClass>(best);
}

absl::StatusOr<std::vector<PatchClass>> AssignClasses(
    std::span<const ProbabilityVector> probs, double t_p) {
  std::vector<PatchClass> out;
  out.reserve(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    auto c = AssignClass(probs[i], t_p);
    if (!c.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("patch ", i, ": ", c.status().message()));
    }
    out.push_back(*c);
  }
  return out;
}

MapGeometry MapGeometryFromPlan(const std::string& slide_id,
                                const PlanGeometry& plan) {
  MapGeometry g;
  g.slide_id = slide_id;
  g.level = plan.level;
  g.downsample = plan.downsample;
  g.level_width = plan.level_width;
  g.level_height = plan.level_height;
  g.stride = plan.cell_px;
  return g;
}

LocalizationMap::LocalizationMap(MapGeometry geometry)
    : geometry_(std::move(geometry)),
      width_(geometry_.grid_width()),
      height_(geometry_.grid_height()),
      cells_(static_cast<size_t>(width_ * height_), kAbsent) {}

std::optional<PatchClass> LocalizationMap::At(int64_t row, int64_t col) const {
  const uint8_t v = cells_[static_cast<size_t>(row * width_ + col)];
  if (v == kAbsent) return std::nullopt;
  return static_cast<PatchClass>(v);
}

void LocalizationMap::Set(int64_t row, int64_t col,
                          std::optional<PatchClass> value) {
  cells_[static_cast<size_t>(row * width_ + col)] =
      value ? static_cast<uint8_t>(*value) : kAbsent;
}

absl::StatusOr<std::pair<int64_t, int64_t>> LocalizationMap::CellOf(
    int64_t x, int64_t y) const {
  if (x < 0 || y < 0) {
    return absl::OutOfRangeError(
        absl::StrCat("negative patch origin (", x, ",", y, ")"));
  }
  const int64_t row = y / geometry_.downsample / geometry_.stride;
  const int64_t col = x / geometry_.downsample / geometry_.stride;
  if (row >= height_ || col >= width_) {
    return absl::OutOfRangeError(absl::StrCat(
        "patch origin (", x, ",", y, ") falls outside the ", width_, "x",
        height_, " map grid"));
  }
  return std::make_pair(row, col);
}

absl::StatusOr<LocalizationMap> BuildMap(std::span<const PatchRecord> records,
                                         std::span<const PatchClass> classes,
                                         const MapGeometry& geometry) {
  if (records.size() != classes.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("length mismatch: ", records.size(), " records but ",
                     classes.size(), " classes"));
  }
  if (geometry.stride <= 0 || geometry.downsample <= 0) {
    return absl::InvalidArgumentError("map stride and downsample must be positive");
  }
  LocalizationMap map(geometry);
  for (size_t i = 0; i < records.size(); ++i) {
    MELANOSCOPE_ASSIGN_OR_RETURN(auto cell,
                                 map.CellOf(records[i].x, records[i].y));
    if (map.At(cell.first, cell.second)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "duplicate cell (row ", cell.first, ", col ", cell.second,
          ") for record ", i));
    }
    map.Set(cell.first, cell.second, classes[i]);
  }
  return map;
}

absl::Status MergeMaps(const LocalizationMap& part, LocalizationMap* map) {
  if (part.grid_width() != map->grid_width() ||
      part.grid_height() != map->grid_height()) {
    return absl::InvalidArgumentError("cannot merge maps of different grids");
  }
  for (int64_t r = 0; r < part.grid_height(); ++r) {
    for (int64_t c = 0; c < part.grid_width(); ++c) {
      const auto v = part.At(r, c);
      if (!v) continue;
      if (map->At(r, c)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "duplicate cell (row ", r, ", col ", c, ") while merging"));
      }
      map->Set(r, c, v);
    }
  }
  return absl::OkStatus();
}

void ClassCounts::Add(PatchClass c) {
  switch (c) {
    case PatchClass::kBenign: ++benign; break;
    case PatchClass::kMalignant: ++malignant; break;
    case PatchClass::kNormal: ++normal; break;
    case PatchClass::kUnseen: ++unseen; break;
  }
}

ClassCounts CountCells(const LocalizationMap& map) {
  ClassCounts counts;
  for (int64_t r = 0; r < map.grid_height(); ++r) {
    for (int64_t c = 0; c < map.grid_width(); ++c) {
      if (const auto v = map.At(r, c)) counts.Add(*v);
    }
  }
  return counts;
}

RatioResult MalignancyRatio(const ClassCounts& counts) {
  RatioResult out;
  out.counts = counts;
  const int64_t lesion = counts.malignant + counts.benign;
  if (lesion == 0) {
    out.no_lesion = true;
    return out;
  }
  out.rho = static_cast<double>(counts.malignant) / static_cast<double>(lesion);
  return out;
}

RatioResult MalignancyRatio(const LocalizationMap& map) {
  return MalignancyRatio(CountCells(map));
}

Verdict DecideVerdict(double rho, double t_r, bool no_lesion) {
  return (!no_lesion && rho >= t_r) ? Verdict::kMelanoma : Verdict::kBenignNevus;
}

SlideVerdict MakeSlideVerdict(const LocalizationMap& map,
                              const Thresholds& thresholds) {
  const RatioResult ratio = MalignancyRatio(map);
  SlideVerdict v;
  v.slide_id = map.slide_id();
  v.rho = ratio.rho;
  v.thresholds = thresholds;
  v.verdict = DecideVerdict(ratio.rho, thresholds.t_r, ratio.no_lesion);
  v.counts = ratio.counts;
  v.no_lesion_flag = ratio.no_lesion;
  return v;
}

std::string SlideVerdictToJson(const SlideVerdict& v) {
  Json j;
  j["slide_id"] = v.slide_id;
  j["rho"] = v.rho;
  j["t_p"] = v.thresholds.t_p;
  j["t_r"] = v.thresholds.t_r;
  j["verdict"] = VerdictName(v.verdict);
  j["counts"] = {{"benign", v.counts.benign},
                 {"malignant", v.counts.malignant},
                 {"normal", v.counts.normal},
                 {"unseen", v.counts.unseen}};
  j["no_lesion_flag"] = v.no_lesion_flag;
  return j.dump(2) + "\n";
}

absl::StatusOr<SlideVerdict> SlideVerdictFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    SlideVerdict v;
    v.slide_id = j.at("slide_id").get<std::string>();
    v.rho = j.at("rho").get<double>();
    v.thresholds.t_p = j.at("t_p").get<double>();
    v.thresholds.t_r = j.at("t_r").get<double>();
    MELANOSCOPE_ASSIGN_OR_RETURN(v.verdict,
                                 ParseVerdict(j.at("verdict").get<std::string>()));
    const Json& c = j.at("counts");
    v.counts.benign = c.at("benign").get<int64_t>();
    v.counts.malignant = c.at("malignant").get<int64_t>();
    v.counts.normal = c.at("normal").get<int64_t>();
    v.counts.unseen = c.at("unseen").get<int64_t>();
    v.no_lesion_flag = j.at("no_lesion_flag").get<bool>();
    return v;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed verdict JSON: ", e.what()));
  }
}

std::string LocalizationMapToJson(const LocalizationMap& map) {
  const MapGeometry& g = map.geometry();
  Json j;
  j["slide_id"] = g.slide_id;
  j["level"] = g.level;
  j["downsample"] = g.downsample;
  j["level_width"] = g.level_width;
  j["level_height"] = g.level_height;
  j["stride"] = g.stride;
  j["grid_width"] = map.grid_width();
  j["grid_height"] = map.grid_height();
  Json rows = Json::array();
  std::string row;
  for (int64_t r = 0; r < map.grid_height(); ++r) {
    row.clear();
    for (int64_t c = 0; c < map.grid_width(); ++c) {
      const auto v = map.At(r, c);
      row.push_back(v ? PatchClassCode(*v) : '.');
    }
    rows.push_back(row);
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

absl::StatusOr<LocalizationMap> LocalizationMapFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    MapGeometry g;
    g.slide_id = j.at("slide_id").get<std::string>();
    g.level = j.at("level").get<int>();
    g.downsample = j.at("downsample").get<int64_t>();
    g.level_width = j.at("level_width").get<int64_t>();
    g.level_height = j.at("level_height").get<int64_t>();
    g.stride = j.at("stride").get<int64_t>();
    if (g.stride <= 0 || g.downsample <= 0 || g.level_width < 0 ||
        g.level_height < 0) {
      return absl::InvalidArgumentError("map JSON has invalid geometry");
    }
    LocalizationMap map(g);
    const Json& rows = j.at("rows");
    if (static_cast<int64_t>(rows.size()) != map.grid_height()) {
      return absl::InvalidArgumentError("map JSON row count does not match grid");
    }
    for (int64_t r = 0; r < map.grid_height(); ++r) {
      const std::string row = rows[r].get<std::string>();
      if (static_cast<int64_t>(row.size()) != map.grid_width()) {
        return absl::InvalidArgumentError(
            absl::StrCat("map JSON row ", r, " has the wrong width"));
      }
      for (int64_t c = 0; c < map.grid_width(); ++c) {
        if (row[c] == '.') continue;
        MELANOSCOPE_ASSIGN_OR_RETURN(PatchClass v, PatchClassFromCode(row[c]));
        map.Set(r, c, v);
      }
    }
    return map;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed map JSON: ", e.what()));
  }
}

Rgb PatchClassColor(PatchClass c) {
  switch (c) {
    case PatchClass::kBenign: return kBenignColor;
    case PatchClass::kMalignant: return kMalignantColor;
    case PatchClass::kNormal: return kNormalColor;
    case PatchClass::kUnseen: return kUnseenColor;
  }
  return kAbsentColor;
}

absl::StatusOr<RgbTile> RenderMap(const LocalizationMap& map, int scale) {
  if (scale < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("render scale must be >= 1, got ", scale));
  }
  RgbTile img(map.grid_width() * scale, map.grid_height() * scale);
  for (int64_t r = 0; r < map.grid_height(); ++r) {
    for (int64_t c = 0; c < map.grid_width(); ++c) {
      const auto v = map.At(r, c);
      if (!v) continue;
      const Rgb color = PatchClassColor(*v);
      for (int64_t y = r * scale; y < (r + 1) * scale; ++y) {
        for (int64_t x = c * scale; x < (c + 1) * scale; ++x) {
          img.Set(x, y, color);
        }
      }
    }
  }
  return img;
}

RgbTile SideBySide(const RgbTile& left, const RgbTile& right, int gap) {
  RgbTile out(left.width + gap + right.width,
              std::max(left.height, right.height));
  for (int64_t y = 0; y < left.height; ++y) {
    auto src = left.Row(y);
    std::copy(src.begin(), src.end(), out.Row(y).begin());
  }
  for (int64_t y = 0; y < right.height; ++y) {
    auto src = right.Row(y);
    std::copy(src.begin(), src.end(),
              out.Row(y).begin() + (left.width + gap) * 3);
  }
  return out;
}

}  // namespace melanoscope
