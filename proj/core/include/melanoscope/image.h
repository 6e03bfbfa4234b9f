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

#ifndef MELANOSCOPE_IMAGE_H_
#define MELANOSCOPE_IMAGE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace melanoscope {

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};

/// A rectangle of 8-bit RGB pixels, row-major, interleaved.
///
/// `origin_x`/`origin_y` locate the tile in the pixel space of `level`; plain
/// images (rendered maps, thumbnails) leave them at zero.
struct RgbTile {
  int64_t origin_x = 0;
  int64_t origin_y = 0;
  int level = 0;
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  RgbTile() = default;
  RgbTile(int64_t w, int64_t h, Rgb fill = kWhite);

  size_t ByteSize() const { return pixels.size(); }
  bool Valid() const {
    return width >= 0 && height >= 0 &&
           pixels.size() == static_cast<size_t>(width * height * 3);
  }

  Rgb At(int64_t x, int64_t y) const {
    const uint8_t* p = &pixels[static_cast<size_t>((y * width + x) * 3)];
    return {p[0], p[1], p[2]};
  }
  void Set(int64_t x, int64_t y, Rgb c) {
    uint8_t* p = &pixels[static_cast<size_t>((y * width + x) * 3)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  std::span<const uint8_t> Row(int64_t y) const {
    return {pixels.data() + y * width * 3, static_cast<size_t>(width * 3)};
  }
  std::span<uint8_t> Row(int64_t y) {
    return {pixels.data() + y * width * 3, static_cast<size_t>(width * 3)};
  }
};

/// Single-channel 8-bit image (masks written as PNG).
struct GrayImage {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> pixels;
};

/// Bilinear resample with half-pixel centers (the common "align_corners =
/// false" convention). Same-size input is returned unchanged. Output values
/// are floats in the input's 0..255 range, channel-interleaved.
std::vector<float> ResizeBilinearFloat(const RgbTile& src, int64_t out_width,
                                       int64_t out_height);

/// Bilinear resample rounded back to 8 bits.
RgbTile ResizeBilinear(const RgbTile& src, int64_t out_width,
                       int64_t out_height);

}  // namespace melanoscope

#endif  // MELANOSCOPE_IMAGE_H_
