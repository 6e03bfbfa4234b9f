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

// Peak heap during streaming extraction, sampled from glibc's allocator
// statistics so libpng/zlib buffers count too.

#include <malloc.h>

#include <algorithm>

#include "gtest/gtest.h"
#include "melanoscope/synthgen.h"
#include "melanoscope/tiling.h"
#include "test_util.h"

namespace melanoscope {
namespace {

using testing::TempDir;

int64_t HeapInUse() {
  const struct mallinfo2 mi = mallinfo2();
  return static_cast<int64_t>(mi.uordblks + mi.hblkhd);
}

TEST(ExtractMemoryTest, PeakStaysWithinOnePatchBand) {
  constexpr int64_t kSide = 4096;
  constexpr int64_t kCell = 256;
  TempDir dir;
  SynthSpec spec;
  spec.slide_id = "mem";
  spec.width = spec.height = kSide;
  spec.blobs = {MakeBlob(Label::kMalignant, 2048, 2048, 1500)};
  auto out = GenerateSlide(spec, dir.path());
  ASSERT_OK(out);
  auto slide = Slide::Open(out->slide_dir);
  ASSERT_OK(slide);

  // Every full cell of level 0.
  std::vector<PatchRecord> records;
  for (int64_t y = 0; y < kSide; y += kCell) {
    for (int64_t x = 0; x < kSide; x += kCell) {
      PatchRecord r;
      r.slide_id = "mem";
      r.x = x;
      r.y = y;
      r.size_px = kCell;
      records.push_back(r);
    }
  }

  malloc_trim(0);
  const int64_t baseline = HeapInUse();
  int64_t peak = 0;
  size_t seen = 0;
  ASSERT_OK(ExtractPatches(*slide, records, [&](size_t, RgbTile tile) {
    peak = std::max(peak, HeapInUse() - baseline);
    ++seen;
    return absl::OkStatus();
  }));
  ASSERT_EQ(seen, records.size());

  const int64_t row_bytes = kSide * 3;
  const int64_t band_bytes = kCell * row_bytes;
  const int64_t tile_bytes = kCell * kCell * 3;
  const int64_t level_bytes = kSide * row_bytes;
  RecordProperty("peak_bytes", std::to_string(peak));
  std::printf("peak %lld bytes: %.1f level-0 rows, %.3f of one patch band, "
              "%.4f of the level\n",
              static_cast<long long>(peak), static_cast<double>(peak) / row_bytes,
              static_cast<double>(peak) / band_bytes,
              static_cast<double>(peak) / level_bytes);
  // One band of decoded rows, the tile handed to the sink, and decoder state.
  EXPECT_LE(peak, band_bytes + tile_bytes + 512 * 1024);
  EXPECT_LT(peak, level_bytes / 8);
}

}  // namespace
}  // namespace melanoscope
