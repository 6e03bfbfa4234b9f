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

#include "melanoscope/image.h"

#include <algorithm>
#include <cmath>

#include "gtest/gtest.h"

namespace melanoscope {
namespace {

TEST(RgbTileTest, FillAndAccess) {
  RgbTile t(3, 2, {1, 2, 3});
  EXPECT_TRUE(t.Valid());
  EXPECT_EQ(t.ByteSize(), 18u);
  EXPECT_EQ(t.At(2, 1), (Rgb{1, 2, 3}));
  t.Set(0, 1, {9, 8, 7});
  EXPECT_EQ(t.Row(1)[0], 9);
  EXPECT_EQ(RgbTile(2, 2).At(1, 1), kWhite);
}

TEST(ResizeTest, SameSizeIsIdentity) {
  RgbTile t(5, 4);
  for (size_t i = 0; i < t.pixels.size(); ++i) t.pixels[i] = static_cast<uint8_t>(i);
  EXPECT_EQ(ResizeBilinear(t, 5, 4).pixels, t.pixels);
}

TEST(ResizeTest, ConstantStaysConstant) {
  const RgbTile t(256, 256, {90, 60, 150});
  const RgbTile out = ResizeBilinear(t, 224, 224);
  for (int64_t y = 0; y < 224; y += 7) {
    for (int64_t x = 0; x < 224; x += 5) EXPECT_EQ(out.At(x, y), (Rgb{90, 60, 150}));
  }
}

// Half-pixel centers: output pixel i samples source coordinate
// (i + 0.5) * in / out - 0.5, clamped to the edge.
TEST(ResizeTest, HalfPixelCenterConvention) {
  RgbTile t(4, 1);
  const uint8_t v[4] = {0, 40, 80, 120};
  for (int x = 0; x < 4; ++x) t.Set(x, 0, {v[x], v[x], v[x]});
  const std::vector<float> up = ResizeBilinearFloat(t, 8, 1);
  for (int i = 0; i < 8; ++i) {
    double s = (i + 0.5) * 4.0 / 8.0 - 0.5;
    s = std::clamp(s, 0.0, 3.0);
    const int x0 = static_cast<int>(std::floor(s));
    const int x1 = std::min(x0 + 1, 3);
    const double want = v[x0] + (s - x0) * (v[x1] - v[x0]);
    EXPECT_NEAR(up[i * 3], want, 1e-4) << i;
  }
  const RgbTile down = ResizeBilinear(t, 2, 1);
  EXPECT_EQ(down.At(0, 0).r, 20);
  EXPECT_EQ(down.At(1, 0).r, 100);
}

}  // namespace
}  // namespace melanoscope
