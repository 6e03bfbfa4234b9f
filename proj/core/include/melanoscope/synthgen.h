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

/// @file synthgen.h
/// @brief Synthetic pyramid slides with known ground truth.
///
/// A slide is a white field with colored discs ("blobs"). Each blob is
/// painted in its label's mock-classifier anchor color plus clamped Gaussian
/// jitter, annotated with a 64-gon outline, and counted toward the truth
/// verdict by exact pixel area.

#ifndef MELANOSCOPE_SYNTHGEN_H_
#define MELANOSCOPE_SYNTHGEN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/image.h"
#include "melanoscope/labels.h"
#include "melanoscope/slide.h"

namespace melanoscope {

/// Largest jitter sigma accepted. At 3 sigma per channel a Benign or
/// Malignant pixel stays in the foreground hue band and nearest its anchor.
inline constexpr double kMaxJitterSigma = 6.0;

/// Vertex count of a blob's annotation outline.
inline constexpr int kBlobOutlineVertices = 64;

/// Truth verdict threshold on malignant / (malignant + benign) area.
inline constexpr double kTruthRatioThreshold = 0.04;

struct Blob {
  Label label = Label::kBenign;
  double cx = 0.0;  // level-0 pixels
  double cy = 0.0;
  double radius = 0.0;
  Rgb color;                 // defaults to the label's anchor
  double jitter_sigma = 4.0;

  friend bool operator==(const Blob&, const Blob&) = default;
};

Blob MakeBlob(Label label, double cx, double cy, double radius,
              double jitter_sigma = 4.0);

struct SynthSpec {
  std::string slide_id = "synth";
  int64_t width = 1024;
  int64_t height = 1024;
  int level_count = 1;  // power-of-two pyramid
  double base_magnification = kDefaultBaseMagnification;
  std::vector<Blob> blobs;  // later blobs paint over earlier ones
  Rgb background = kWhite;
  uint64_t seed = 0;
  /// zlib level for the level PNGs.
  int compression_level = 1;
};

absl::Status ValidateSynthSpec(const SynthSpec& spec);

struct LabelAreas {
  int64_t benign = 0;
  int64_t malignant = 0;
  int64_t normal = 0;

  friend bool operator==(const LabelAreas&, const LabelAreas&) = default;
};

struct SynthTruth {
  std::string slide_id;
  Verdict verdict = Verdict::kBenignNevus;
  LabelAreas areas;
};

/// Melanoma iff malignant / (malignant + benign) >= kTruthRatioThreshold.
Verdict TruthVerdict(const LabelAreas& areas);

std::string SynthTruthToJson(const SynthTruth& truth);
absl::StatusOr<SynthTruth> SynthTruthFromJson(const std::string& json);
absl::StatusOr<SynthTruth> LoadSynthTruth(const std::filesystem::path& path);

std::string SynthSpecToJson(const SynthSpec& spec);
absl::StatusOr<SynthSpec> SynthSpecFromJson(const std::string& json);

/// Blob coverage of one level-0 row: code 0 for background, label + 1
/// otherwise. A pixel belongs to a disc when its center lies within the
/// radius.
void BlobRow(const SynthSpec& spec, int64_t y, std::span<uint8_t> codes);

/// Exact blob areas without rendering pixels.
LabelAreas ComputeLabelAreas(const SynthSpec& spec);

/// 64-gon outline of every blob, in blob order.
AnnotationSet BlobAnnotations(const SynthSpec& spec);

struct SynthOutputs {
  std::filesystem::path slide_dir;   // <out>/<id>/
  std::filesystem::path annotations; // <out>/<id>.geojson
  std::filesystem::path truth;       // <out>/<id>.truth.json
  SynthTruth truth_record;
};

/// Writes the pyramid, annotations and truth record under `out_dir`. Every
/// level is the box average of level 0 over its downsample block (partial
/// edge blocks average the pixels present). Output depends only on `spec`.
absl::StatusOr<SynthOutputs> GenerateSlide(const SynthSpec& spec,
                                           const std::filesystem::path& out_dir);

/// Generates slides in parallel; results follow input order.
absl::StatusOr<std::vector<SynthOutputs>> GenerateSlides(
    std::span<const SynthSpec> specs, const std::filesystem::path& out_dir,
    int workers);

struct RandomSpecOptions {
  // At the default 10x on a 40x slide one 256 px cell spans 1024 level-0
  // pixels, so this gives an 8x8 grid with blobs several cells across.
  int64_t width = 8192;
  int64_t height = 8192;
  int level_count = 3;
  double min_radius = 1000.0;
  double max_radius = 2000.0;
  int min_blobs = 2;
  int max_blobs = 4;
  double jitter_sigma = 4.0;
  bool include_normal = true;
  int compression_level = 1;
};

/// Random non-overlapping blobs whose truth equals `target`. The malignant
/// area ratio is kept out of [0.01, 0.15] so the verdict is not decided by a
/// handful of boundary pixels.
absl::StatusOr<SynthSpec> RandomSynthSpec(const std::string& slide_id,
                                          uint64_t seed, Verdict target,
                                          const RandomSpecOptions& options);

}  // namespace melanoscope

#endif  // MELANOSCOPE_SYNTHGEN_H_
