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

#include "gtest/gtest.h"
#include "melanoscope/slide.h"
#include "test_util.h"

namespace melanoscope {
namespace {

constexpr char kTwoRegions[] = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "properties": {"label": "malignant"},
     "geometry": {"type": "Polygon",
                  "coordinates": [[[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]]}},
    {"type": "Feature", "properties": {"label": "Benign"},
     "geometry": {"type": "Polygon",
                  "coordinates": [[[5, 5], [30, 5], [30, 30]]]}}
  ]
})";

TEST(AnnotationsTest, ParsesFeatureCollection) {
  auto set = ParseAnnotations(kTwoRegions);
  ASSERT_OK(set);
  ASSERT_EQ(set->regions.size(), 2u);
  EXPECT_EQ(set->regions[0].label, Label::kMalignant);
  EXPECT_EQ(set->regions[0].polygon.size(), 4u);  // closing vertex dropped
  EXPECT_EQ(set->regions[1].label, Label::kBenign);
  EXPECT_EQ(set->regions[1].polygon[2], (Point{30, 30}));
}

TEST(AnnotationsTest, ClipsToBounds) {
  auto set = ParseAnnotations(kTwoRegions, std::make_pair<int64_t, int64_t>(20, 20));
  ASSERT_OK(set);
  ASSERT_EQ(set->regions.size(), 2u);
  for (const Point& p : set->regions[1].polygon) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, 20.0);
    EXPECT_LE(p.y, 20.0);
  }
  // Entirely outside: dropped.
  auto tiny = ParseAnnotations(kTwoRegions, std::make_pair<int64_t, int64_t>(4, 4));
  ASSERT_OK(tiny);
  EXPECT_EQ(tiny->regions.size(), 1u);
}

TEST(AnnotationsTest, ClipPolygonSquare) {
  const std::vector<Point> sq = {{-5, -5}, {5, -5}, {5, 5}, {-5, 5}};
  const auto clipped = ClipPolygon(sq, 10, 10);
  double area = 0;
  for (size_t i = 0; i < clipped.size(); ++i) {
    const Point& a = clipped[i];
    const Point& b = clipped[(i + 1) % clipped.size()];
    area += a.x * b.y - b.x * a.y;
  }
  EXPECT_DOUBLE_EQ(std::abs(area) / 2, 25.0);
}

TEST(AnnotationsTest, SerializeRoundTrip) {
  auto set = ParseAnnotations(kTwoRegions);
  ASSERT_OK(set);
  auto again = ParseAnnotations(SerializeAnnotations(*set));
  ASSERT_OK(again);
  EXPECT_EQ(*again, *set);

  testing::TempDir dir;
  ASSERT_OK(SaveAnnotations(dir / "a.geojson", *set));
  auto loaded = LoadAnnotations(dir / "a.geojson");
  ASSERT_OK(loaded);
  EXPECT_EQ(*loaded, *set);
  EXPECT_EQ(LoadAnnotations(dir / "none.geojson").status().code(),
            absl::StatusCode::kNotFound);
}

TEST(AnnotationsTest, RejectsMalformedInput) {
  const char* bad[] = {
      "not json",
      R"({"type": "Feature"})",
      R"({"type": "FeatureCollection", "features": [{"properties": {},
          "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1]]]}}]})",
      R"({"type": "FeatureCollection", "features": [{"properties": {"label": "tumor"},
          "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1]]]}}]})",
      R"({"type": "FeatureCollection", "features": [{"properties": {"label": "normal"},
          "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[0,0]]]}}]})",
      R"({"type": "FeatureCollection", "features": [{"properties": {"label": "normal"},
          "geometry": {"type": "Point", "coordinates": [0, 0]}}]})",
      R"({"type": "FeatureCollection", "features": [{"properties": {"label": "normal"},
          "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1]],
                                                           [[0,0],[1,0],[1,1]]]}}]})",
  };
  for (const char* text : bad) {
    auto set = ParseAnnotations(text);
    EXPECT_FALSE(set.ok()) << text;
    EXPECT_EQ(set.status().code(), absl::StatusCode::kInvalidArgument);
  }
  auto few = ParseAnnotations(bad[4]);
  EXPECT_NE(few.status().message().find("at least 3"), std::string::npos);
}

}  // namespace
}  // namespace melanoscope
