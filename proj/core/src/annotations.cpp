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

#include <cmath>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/slide.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// One clip pass against the half-plane where inside(p) holds.
template <typename Inside, typename Intersect>
std::vector<Point> ClipEdge(const std::vector<Point>& in, Inside inside,
                            Intersect intersect) {
  std::vector<Point> out;
  if (in.empty()) return out;
  Point prev = in.back();
  bool prev_in = inside(prev);
  for (const Point& cur : in) {
    const bool cur_in = inside(cur);
    if (cur_in) {
      if (!prev_in) out.push_back(intersect(prev, cur));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(intersect(prev, cur));
    }
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

Point LerpX(const Point& a, const Point& b, double x) {
  const double t = (x - a.x) / (b.x - a.x);
  return {x, a.y + t * (b.y - a.y)};
}

Point LerpY(const Point& a, const Point& b, double y) {
  const double t = (y - a.y) / (b.y - a.y);
  return {a.x + t * (b.x - a.x), y};
}

absl::StatusOr<AnnotatedRegion> ParseFeature(const json& feature, size_t index) {
  auto err = [index](const std::string& what) {
    return absl::InvalidArgumentError(
        absl::StrCat("annotation feature ", index, ": ", what));
  };
  if (!feature.is_object()) return err("feature is not an object");
  const auto props = feature.find("properties");
  if (props == feature.end() || !props->is_object() ||
      !props->contains("label") || !(*props)["label"].is_string()) {
    return err("missing string property \"label\"");
  }
  auto label = ParseLabel((*props)["label"].get<std::string>());
  if (!label.ok()) return err(std::string(label.status().message()));

  const auto geom = feature.find("geometry");
  if (geom == feature.end() || !geom->is_object()) {
    return err("malformed geometry: missing geometry object");
  }
  if (geom->value("type", "") != "Polygon") {
    return err("malformed geometry: only Polygon geometries are supported");
  }
  const auto coords = geom->find("coordinates");
  if (coords == geom->end() || !coords->is_array() || coords->empty()) {
    return err("malformed geometry: missing coordinates");
  }
  if (coords->size() != 1) {
    return err("malformed geometry: polygons with holes are not supported");
  }
  const json& ring = (*coords)[0];
  if (!ring.is_array()) return err("malformed geometry: ring is not an array");

  AnnotatedRegion region;
  region.label = *label;
  for (const auto& v : ring) {
    if (!v.is_array() || v.size() < 2 || !v[0].is_number() ||
        !v[1].is_number()) {
      return err("malformed geometry: vertex is not [x, y]");
    }
    const Point p{v[0].get<double>(), v[1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      return err("malformed geometry: non-finite vertex");
    }
    region.polygon.push_back(p);
  }
  if (region.polygon.size() >= 2 &&
      region.polygon.front() == region.polygon.back()) {
    region.polygon.pop_back();
  }
  if (region.polygon.size() < 3) {
    return err(absl::StrCat("malformed geometry: polygon has ",
                            region.polygon.size(),
                            " vertices, at least 3 required"));
  }
  return region;
}

}  // namespace

std::vector<Point> ClipPolygon(const std::vector<Point>& polygon, double width,
                               double height) {
  std::vector<Point> p = polygon;
  p = ClipEdge(p, [](const Point& q) { return q.x >= 0.0; },
               [](const Point& a, const Point& b) { return LerpX(a, b, 0.0); });
  p = ClipEdge(p, [&](const Point& q) { return q.x <= width; },
               [&](const Point& a, const Point& b) { return LerpX(a, b, width); });
  p = ClipEdge(p, [](const Point& q) { return q.y >= 0.0; },
               [](const Point& a, const Point& b) { return LerpY(a, b, 0.0); });
  p = ClipEdge(p, [&](const Point& q) { return q.y <= height; },
               [&](const Point& a, const Point& b) { return LerpY(a, b, height); });
  return p;
}

absl::StatusOr<AnnotationSet> ParseAnnotations(
    const std::string& geojson,
    std::optional<std::pair<int64_t, int64_t>> bounds) {
  json j;
  try {
    j = json::parse(geojson);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("annotations are not valid JSON: ", e.what()));
  }
  if (!j.is_object() || j.value("type", "") != "FeatureCollection" ||
      !j.contains("features") || !j["features"].is_array()) {
    return absl::InvalidArgumentError(
        "annotations must be a GeoJSON FeatureCollection");
  }
  AnnotationSet set;
  size_t index = 0;
  for (const auto& feature : j["features"]) {
    MELANOSCOPE_ASSIGN_OR_RETURN(AnnotatedRegion region,
                                 ParseFeature(feature, index++));
    if (bounds) {
      region.polygon =
          ClipPolygon(region.polygon, static_cast<double>(bounds->first),
                      static_cast<double>(bounds->second));
      if (region.polygon.size() < 3) continue;
    }
    set.regions.push_back(std::move(region));
  }
  return set;
}

absl::StatusOr<AnnotationSet> LoadAnnotations(
    const fs::path& path, std::optional<std::pair<int64_t, int64_t>> bounds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open annotations ", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  auto set = ParseAnnotations(ss.str(), bounds);
  if (!set.ok()) {
    return absl::Status(set.status().code(),
                        absl::StrCat(path.string(), ": ", set.status().message()));
  }
  return set;
}

std::string SerializeAnnotations(const AnnotationSet& set) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = json::array();
  for (const auto& region : set.regions) {
    json ring = json::array();
    for (const auto& p : region.polygon) ring.push_back({p.x, p.y});
    if (!region.polygon.empty()) {
      ring.push_back({region.polygon.front().x, region.polygon.front().y});
    }
    json feature;
    feature["type"] = "Feature";
    feature["properties"] = {{"label", LabelName(region.label)}};
    feature["geometry"] = {{"type", "Polygon"},
                           {"coordinates", json::array({ring})}};
    fc["features"].push_back(std::move(feature));
  }
  return fc.dump();
}

absl::Status SaveAnnotations(const fs::path& path, const AnnotationSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  out << SerializeAnnotations(set) << "\n";
  return out ? absl::OkStatus()
             : absl::DataLossError(absl::StrCat("failed writing ", path.string()));
}

}  // namespace melanoscope
