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

/// @file png_io.h
/// @brief Row-streaming PNG access.
///
/// Pyramid levels are stored as plain PNG files. PNG has no random access, so
/// region reads decode rows sequentially and keep only one scanline buffered;
/// writers accept one row at a time so multi-gigapixel levels never need to be
/// materialized.

#ifndef MELANOSCOPE_PNG_IO_H_
#define MELANOSCOPE_PNG_IO_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/image.h"

namespace melanoscope {

struct PngInfo {
  int64_t width = 0;
  int64_t height = 0;
  bool interlaced = false;
};

/// Reads only the PNG header.
absl::StatusOr<PngInfo> ReadPngInfo(const std::filesystem::path& path);

/// Sequential scanline decoder. Any bit depth / color type is converted to
/// 8-bit RGB. Interlaced files are rejected.
class PngRowReader {
 public:
  static absl::StatusOr<std::unique_ptr<PngRowReader>> Open(
      const std::filesystem::path& path);
  ~PngRowReader();

  PngRowReader(const PngRowReader&) = delete;
  PngRowReader& operator=(const PngRowReader&) = delete;

  int64_t width() const { return width_; }
  int64_t height() const { return height_; }
  int64_t next_row() const { return next_row_; }

  /// Decodes the next row into `rgb` (width * 3 bytes).
  absl::Status ReadRow(std::span<uint8_t> rgb);

  /// Decodes and discards rows until `row` is the next row to be read.
  absl::Status SkipTo(int64_t row, std::span<uint8_t> scratch);

 private:
  struct Impl;
  explicit PngRowReader(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
  int64_t width_ = 0;
  int64_t height_ = 0;
  int64_t next_row_ = 0;
};

/// Sequential scanline encoder for 8-bit RGB (channels = 3) or gray
/// (channels = 1). Output bytes depend only on the pixels and settings.
class PngRowWriter {
 public:
  static absl::StatusOr<std::unique_ptr<PngRowWriter>> Create(
      const std::filesystem::path& path, int64_t width, int64_t height,
      int channels, int compression_level = 6);
  ~PngRowWriter();

  PngRowWriter(const PngRowWriter&) = delete;
  PngRowWriter& operator=(const PngRowWriter&) = delete;

  absl::Status WriteRow(std::span<const uint8_t> row);

  /// Must be called after the last row; the file is incomplete otherwise.
  absl::Status Finish();

 private:
  struct Impl;
  explicit PngRowWriter(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
  int64_t width_ = 0;
  int64_t height_ = 0;
  int channels_ = 3;
  int64_t rows_written_ = 0;
  bool finished_ = false;
};

absl::StatusOr<RgbTile> ReadPng(const std::filesystem::path& path);
absl::Status WritePng(const std::filesystem::path& path, const RgbTile& image,
                      int compression_level = 6);
absl::Status WriteGrayPng(const std::filesystem::path& path,
                          const GrayImage& image, int compression_level = 6);

}  // namespace melanoscope

#endif  // MELANOSCOPE_PNG_IO_H_
