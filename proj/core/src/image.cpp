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

namespace melanoscope {

RgbTile::RgbTile(int64_t w, int64_t h, Rgb fill) : width(w), height(h) {
  pixels.resize(static_cast<size_t>(w * h * 3));
  for (size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

namespace {

struct Tap {
  int64_t i0;
  int64_t i1;
  float frac;
};

std::vector<Tap> ComputeTaps(int64_t in_size, int64_t out_size) {
  std::vector<Tap> taps(static_cast<size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int64_t o = 0; o < out_size; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
    const int64_t i0 = static_cast<int64_t>(std::floor(s));
    const int64_t i1 = std::min(i0 + 1, in_size - 1);
    taps[static_cast<size_t>(o)] = {i0, i1, static_cast<float>(s - i0)};
  }
  return taps;
}

}  // namespace

std::vector<float> ResizeBilinearFloat(const RgbTile& src, int64_t out_width,
                                       int64_t out_height) {
  std::vector<float> out(static_cast<size_t>(out_width * out_height * 3));
  if (src.width == out_width && src.height == out_height) {
    std::copy(src.pixels.begin(), src.pixels.end(), out.begin());
    return out;
  }
  const auto xt = ComputeTaps(src.width, out_width);
  const auto yt = ComputeTaps(src.height, out_height);
  for (int64_t oy = 0; oy < out_height; ++oy) {
    const Tap& ty = yt[static_cast<size_t>(oy)];
    const uint8_t* r0 = src.pixels.data() + ty.i0 * src.width * 3;
    const uint8_t* r1 = src.pixels.data() + ty.i1 * src.width * 3;
    float* dst = out.data() + oy * out_width * 3;
    for (int64_t ox = 0; ox < out_width; ++ox) {
      const Tap& tx = xt[static_cast<size_t>(ox)];
      for (int c = 0; c < 3; ++c) {
        const float a = r0[tx.i0 * 3 + c] +
                        (r0[tx.i1 * 3 + c] - r0[tx.i0 * 3 + c]) * tx.frac;
        const float b = r1[tx.i0 * 3 + c] +
                        (r1[tx.i1 * 3 + c] - r1[tx.i0 * 3 + c]) * tx.frac;
        dst[ox * 3 + c] = a + (b - a) * ty.frac;
      }
    }
  }
  return out;
}

RgbTile ResizeBilinear(const RgbTile& src, int64_t out_width,
                       int64_t out_height) {
  const std::vector<float> f = ResizeBilinearFloat(src, out_width, out_height);
  RgbTile out(out_width, out_height);
  for (size_t i = 0; i < f.size(); ++i) {
    out.pixels[i] =
        static_cast<uint8_t>(std::clamp(std::lround(f[i]), 0L, 255L));
  }
  return out;
}

}  // namespace melanoscope
