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
#include <random>

#include "absl/strings/str_cat.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

absl::Status ValidateStats(const NormalizationStats& stats) {
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(stats.mean[c]) || !std::isfinite(stats.stddev[c])) {
      return absl::InvalidArgumentError("normalization stats must be finite");
    }
    if (!(stats.stddev[c] > 0.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "normalization std of channel ", c, " must be positive"));
    }
  }
  return absl::OkStatus();
}

NormalizationStats ImageNetStats() {
  return {{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
}

void ChannelStatsAccumulator::Add(const RgbTile& tile) {
  const size_t n = tile.pixels.size() / 3;
  // Per-tile partial sums stay far below 2^64 (n * 255^2).
  std::array<uint64_t, 3> s = {0, 0, 0};
  std::array<uint64_t, 3> sq = {0, 0, 0};
  const uint8_t* p = tile.pixels.data();
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const uint64_t v = p[i * 3 + c];
      s[c] += v;
      sq[c] += v * v;
    }
  }
  count_ += n;
  for (int c = 0; c < 3; ++c) {
    sum_[c] += s[c];
    sum_sq_[c] += sq[c];
  }
}

void ChannelStatsAccumulator::Merge(const ChannelStatsAccumulator& other) {
  count_ += other.count_;
  for (int c = 0; c < 3; ++c) {
    sum_[c] += other.sum_[c];
    sum_sq_[c] += other.sum_sq_[c];
  }
}

absl::StatusOr<NormalizationStats> ChannelStatsAccumulator::Finish() const {
  if (count_ == 0) {
    return absl::InvalidArgumentError("cannot compute statistics of an empty stream");
  }
  NormalizationStats stats;
  const long double n = static_cast<long double>(count_);
  for (int c = 0; c < 3; ++c) {
    // n^2 * var = n * sum(x^2) - sum(x)^2, exact in 128-bit integers.
    const unsigned __int128 a =
        static_cast<unsigned __int128>(count_) * sum_sq_[c];
    const unsigned __int128 b =
        static_cast<unsigned __int128>(sum_[c]) * sum_[c];
    if (a <= b) {
      return absl::InvalidArgumentError(absl::StrCat(
          "zero-variance channel ", c, "; normalization is undefined"));
    }
    const long double var = static_cast<long double>(a - b) / (n * n);
    stats.mean[c] = static_cast<double>(sum_[c] / n / 255.0L);
    stats.stddev[c] = static_cast<double>(std::sqrt(var) / 255.0L);
  }
  return stats;
}

absl::StatusOr<NormalizationStats> ComputeChannelStats(
    std::span<const RgbTile> patches) {
  ChannelStatsAccumulator acc;
  for (const auto& tile : patches) acc.Add(tile);
  return acc.Finish();
}

absl::StatusOr<TensorPatch> NormalizePatch(const RgbTile& tile,
                                           const NormalizationStats& stats) {
  if (auto st = ValidateStats(stats); !st.ok()) return st;
  if (!tile.Valid() || tile.width <= 0) {
    return absl::InvalidArgumentError("malformed RGB tile");
  }
  if (tile.width != tile.height) {
    return absl::InvalidArgumentError(absl::StrCat(
        "patch must be square, got ", tile.width, "x", tile.height));
  }
  const std::vector<float> resized =
      ResizeBilinearFloat(tile, kModelInputSize, kModelInputSize);
  const size_t plane = static_cast<size_t>(kModelInputSize * kModelInputSize);
  TensorPatch out;
  out.data.resize(plane * 3);
  for (int c = 0; c < 3; ++c) {
    const double mean = stats.mean[c];
    const double inv_std = 1.0 / stats.stddev[c];
    float* dst = out.data.data() + c * plane;
    for (size_t i = 0; i < plane; ++i) {
      dst[i] = static_cast<float>((resized[i * 3 + c] / 255.0 - mean) * inv_std);
    }
  }
  return out;
}

absl::StatusOr<RgbTile> AugmentPatch(const RgbTile& tile, uint64_t seed) {
  constexpr int64_t kCrop = kModelInputSize;
  if (!tile.Valid()) return absl::InvalidArgumentError("malformed RGB tile");
  if (tile.width < kCrop || tile.height < kCrop) {
    return absl::InvalidArgumentError(absl::StrCat(
        "tile ", tile.width, "x", tile.height, " is smaller than the ", kCrop,
        "x", kCrop, " crop"));
  }
  // Raw engine output with modulo keeps the result identical across
  // standard-library implementations.
  std::mt19937_64 rng(seed);
  const int64_t ox = static_cast<int64_t>(rng() % static_cast<uint64_t>(tile.width - kCrop + 1));
  const int64_t oy = static_cast<int64_t>(rng() % static_cast<uint64_t>(tile.height - kCrop + 1));
  const int op = static_cast<int>(rng() % 6);

  RgbTile out(kCrop, kCrop);
  constexpr int64_t m = kCrop - 1;
  for (int64_t y = 0; y < kCrop; ++y) {
    for (int64_t x = 0; x < kCrop; ++x) {
      int64_t sx = x;
      int64_t sy = y;
      switch (op) {
        case 0:  // identity
          break;
        case 1:  // horizontal flip
          sx = m - x;
          break;
        case 2:  // vertical flip
          sy = m - y;
          break;
        case 3:  // rotate 90 clockwise
          sx = y;
          sy = m - x;
          break;
        case 4:  // rotate 180
          sx = m - x;
          sy = m - y;
          break;
        default:  // rotate 270 clockwise
          sx = m - y;
          sy = x;
          break;
      }
      out.Set(x, y, tile.At(ox + sx, oy + sy));
    }
  }
  return out;
}

}  // namespace melanoscope
