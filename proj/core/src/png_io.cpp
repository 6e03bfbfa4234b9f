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

#include "melanoscope/png_io.h"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {
namespace {

// libpng reports errors by longjmp. Every png_* call that may fail runs inside
// a frame that owns a setjmp point and holds no objects with destructors.
struct ErrorSink {
  char message[256] = {0};
};

void OnPngError(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  if (sink != nullptr) {
    std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  }
  png_longjmp(png, 1);
}

void OnPngWarning(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

absl::Status PngError(const std::filesystem::path& path, const ErrorSink& sink,
                      const char* what) {
  return absl::DataLossError(absl::StrCat(what, " ", path.string(), ": ",
                                          std::string(sink.message)));
}

// Header read + transform setup. Returns false on libpng error.
bool SetupRead(png_structp png, png_infop info, std::FILE* fp,
               png_uint_32* width, png_uint_32* height, int* interlace,
               bool apply_transforms) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_read_info(png, info);
  int bit_depth = 0;
  int color_type = 0;
  png_get_IHDR(png, info, width, height, &bit_depth, &color_type, interlace,
               nullptr, nullptr);
  if (!apply_transforms) return true;
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);
  return true;
}

bool ReadOneRow(png_structp png, png_bytep row) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_row(png, row, nullptr);
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

struct PngRowReader::Impl {
  std::filesystem::path path;
  FilePtr file;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ErrorSink sink;

  ~Impl() {
    if (png != nullptr) png_destroy_read_struct(&png, &info, nullptr);
  }
};

PngRowReader::PngRowReader(std::unique_ptr<Impl> impl)
    : impl_(std::move(impl)) {}

PngRowReader::~PngRowReader() = default;

absl::StatusOr<std::unique_ptr<PngRowReader>> PngRowReader::Open(
    const std::filesystem::path& path) {
  auto impl = std::make_unique<Impl>();
  impl->path = path;
  impl->file.reset(std::fopen(path.c_str(), "rb"));
  if (!impl->file) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  png_byte sig[8];
  if (std::fread(sig, 1, 8, impl->file.get()) != 8 || png_sig_cmp(sig, 0, 8)) {
    return absl::InvalidArgumentError(
        absl::StrCat("not a PNG file: ", path.string()));
  }
  impl->png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &impl->sink,
                                     OnPngError, OnPngWarning);
  if (impl->png == nullptr) return absl::InternalError("png_create_read_struct");
  impl->info = png_create_info_struct(impl->png);
  if (impl->info == nullptr) return absl::InternalError("png_create_info_struct");
  png_set_sig_bytes(impl->png, 8);

  png_uint_32 w = 0;
  png_uint_32 h = 0;
  int interlace = 0;
  if (!SetupRead(impl->png, impl->info, impl->file.get(), &w, &h, &interlace,
                 /*apply_transforms=*/true)) {
    return PngError(path, impl->sink, "failed to read PNG header of");
  }
  if (interlace != PNG_INTERLACE_NONE) {
    return absl::UnimplementedError(
        absl::StrCat("interlaced PNG is not supported: ", path.string()));
  }
  if (png_get_rowbytes(impl->png, impl->info) != static_cast<size_t>(w) * 3) {
    return absl::InternalError(
        absl::StrCat("unexpected decoded row size in ", path.string()));
  }
  std::unique_ptr<PngRowReader> reader(new PngRowReader(std::move(impl)));
  reader->width_ = w;
  reader->height_ = h;
  return reader;
}

absl::Status PngRowReader::ReadRow(std::span<uint8_t> rgb) {
  if (next_row_ >= height_) {
    return absl::OutOfRangeError(
        absl::StrCat("read past last row of ", impl_->path.string()));
  }
  if (rgb.size() < static_cast<size_t>(width_ * 3)) {
    return absl::InvalidArgumentError("row buffer too small");
  }
  if (!ReadOneRow(impl_->png, rgb.data())) {
    return PngError(impl_->path, impl_->sink, "failed to decode row of");
  }
  ++next_row_;
  return absl::OkStatus();
}

absl::Status PngRowReader::SkipTo(int64_t row, std::span<uint8_t> scratch) {
  if (row < next_row_) {
    return absl::FailedPreconditionError("PngRowReader cannot seek backwards");
  }
  while (next_row_ < row) {
    MELANOSCOPE_RETURN_IF_ERROR(ReadRow(scratch));
  }
  return absl::OkStatus();
}

absl::StatusOr<PngInfo> ReadPngInfo(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8)) {
    return absl::InvalidArgumentError(
        absl::StrCat("not a PNG file: ", path.string()));
  }
  ErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink,
                                           OnPngError, OnPngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return absl::InternalError("png_create_read_struct");
  }
  png_set_sig_bytes(png, 8);
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  int interlace = 0;
  const bool ok = SetupRead(png, info, file.get(), &w, &h, &interlace,
                            /*apply_transforms=*/false);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) return PngError(path, sink, "failed to read PNG header of");
  return PngInfo{w, h, interlace != PNG_INTERLACE_NONE};
}

absl::StatusOr<RgbTile> ReadPng(const std::filesystem::path& path) {
  MELANOSCOPE_ASSIGN_OR_RETURN(auto reader, PngRowReader::Open(path));
  RgbTile tile(reader->width(), reader->height());
  for (int64_t y = 0; y < tile.height; ++y) {
    MELANOSCOPE_RETURN_IF_ERROR(reader->ReadRow(tile.Row(y)));
  }
  return tile;
}

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

namespace {

bool SetupWrite(png_structp png, png_infop info, std::FILE* fp, png_uint_32 w,
                png_uint_32 h, int channels, int level) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, level);
  if (level <= 3) png_set_filter(png, 0, PNG_FILTER_SUB);
  png_write_info(png, info);
  return true;
}

bool WriteOneRow(png_structp png, png_const_bytep row) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_write_row(png, row);
  return true;
}

bool WriteEnd(png_structp png, png_infop info) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_write_end(png, info);
  return true;
}

}  // namespace

struct PngRowWriter::Impl {
  std::filesystem::path path;
  FilePtr file;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ErrorSink sink;

  ~Impl() {
    if (png != nullptr) png_destroy_write_struct(&png, &info);
  }
};

PngRowWriter::PngRowWriter(std::unique_ptr<Impl> impl)
    : impl_(std::move(impl)) {}

PngRowWriter::~PngRowWriter() = default;

absl::StatusOr<std::unique_ptr<PngRowWriter>> PngRowWriter::Create(
    const std::filesystem::path& path, int64_t width, int64_t height,
    int channels, int compression_level) {
  if (width <= 0 || height <= 0 || width > 0x7fffffff || height > 0x7fffffff) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid PNG dimensions ", width, "x", height));
  }
  if (channels != 1 && channels != 3) {
    return absl::InvalidArgumentError("PNG writer supports 1 or 3 channels");
  }
  auto impl = std::make_unique<Impl>();
  impl->path = path;
  impl->file.reset(std::fopen(path.c_str(), "wb"));
  if (!impl->file) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create ", path.string()));
  }
  impl->png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &impl->sink,
                                      OnPngError, OnPngWarning);
  if (impl->png == nullptr) return absl::InternalError("png_create_write_struct");
  impl->info = png_create_info_struct(impl->png);
  if (impl->info == nullptr) return absl::InternalError("png_create_info_struct");
  if (!SetupWrite(impl->png, impl->info, impl->file.get(),
                  static_cast<png_uint_32>(width),
                  static_cast<png_uint_32>(height), channels,
                  compression_level)) {
    return PngError(path, impl->sink, "failed to start PNG");
  }
  std::unique_ptr<PngRowWriter> writer(new PngRowWriter(std::move(impl)));
  writer->width_ = width;
  writer->height_ = height;
  writer->channels_ = channels;
  return writer;
}

absl::Status PngRowWriter::WriteRow(std::span<const uint8_t> row) {
  if (finished_ || rows_written_ >= height_) {
    return absl::OutOfRangeError("write past last PNG row");
  }
  if (row.size() < static_cast<size_t>(width_ * channels_)) {
    return absl::InvalidArgumentError("PNG row too short");
  }
  if (!WriteOneRow(impl_->png, row.data())) {
    return PngError(impl_->path, impl_->sink, "failed to write row of");
  }
  ++rows_written_;
  return absl::OkStatus();
}

absl::Status PngRowWriter::Finish() {
  if (finished_) return absl::OkStatus();
  if (rows_written_ != height_) {
    return absl::FailedPreconditionError(absl::StrCat(
        "PNG ", impl_->path.string(), " finished after ", rows_written_,
        " of ", height_, " rows"));
  }
  if (!WriteEnd(impl_->png, impl_->info)) {
    return PngError(impl_->path, impl_->sink, "failed to finish");
  }
  finished_ = true;
  std::FILE* fp = impl_->file.release();
  if (std::fclose(fp) != 0) {
    return absl::DataLossError(
        absl::StrCat("failed to close ", impl_->path.string()));
  }
  return absl::OkStatus();
}

absl::Status WritePng(const std::filesystem::path& path, const RgbTile& image,
                      int compression_level) {
  MELANOSCOPE_ASSIGN_OR_RETURN(
      auto writer, PngRowWriter::Create(path, image.width, image.height, 3,
                                        compression_level));
  for (int64_t y = 0; y < image.height; ++y) {
    MELANOSCOPE_RETURN_IF_ERROR(writer->WriteRow(image.Row(y)));
  }
  return writer->Finish();
}

absl::Status WriteGrayPng(const std::filesystem::path& path,
                          const GrayImage& image, int compression_level) {
  MELANOSCOPE_ASSIGN_OR_RETURN(
      auto writer, PngRowWriter::Create(path, image.width, image.height, 1,
                                        compression_level));
  for (int64_t y = 0; y < image.height; ++y) {
    MELANOSCOPE_RETURN_IF_ERROR(writer->WriteRow(std::span<const uint8_t>(
        image.pixels.data() + y * image.width, static_cast<size_t>(image.width))));
  }
  return writer->Finish();
}

}  // namespace melanoscope
