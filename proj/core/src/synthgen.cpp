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

#include "melanoscope/synthgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/classifier.h"
#include "melanoscope/parallel.h"
#include "melanoscope/png_io.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {
namespace {

using Json = nlohmann::ordered_json;

double ColorDistance(Rgb a, Rgb b) {
  const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

// Largest distance a jittered, rounded pixel can land from its base color.
double JitterReach(double sigma) { return (3.0 * sigma + 0.5) * std::sqrt(3.0); }

// Index of the blob covering each pixel of row y, -1 for background.
void BlobIndexRow(const SynthSpec& spec, int64_t y, std::span<int16_t> out) {
  std::fill(out.begin(), out.end(), int16_t{-1});
  const double py = static_cast<double>(y) + 0.5;
  for (size_t b = 0; b < spec.blobs.size(); ++b) {
    const Blob& blob = spec.blobs[b];
    const double dy = py - blob.cy;
    const double rem = blob.radius * blob.radius - dy * dy;
    if (rem < 0.0) continue;
    const double hw = std::sqrt(rem);
    int64_t x0 = static_cast<int64_t>(std::ceil(blob.cx - hw - 0.5));
    int64_t x1 = static_cast<int64_t>(std::floor(blob.cx + hw - 0.5));
    // Settle floating-point edge cases against the exact predicate.
    auto inside = [&](int64_t x) {
      const double dx = static_cast<double>(x) + 0.5 - blob.cx;
      return dx * dx + dy * dy <= blob.radius * blob.radius;
    };
    while (x0 <= x1 && !inside(x0)) ++x0;
    while (x0 - 1 >= 0 && inside(x0 - 1)) --x0;
    while (x1 >= x0 && !inside(x1)) --x1;
    while (x1 + 1 < spec.width && inside(x1 + 1)) ++x1;
    x0 = std::max<int64_t>(x0, 0);
    x1 = std::min<int64_t>(x1, spec.width - 1);
    for (int64_t x = x0; x <= x1; ++x) out[x] = static_cast<int16_t>(b);
  }
}

std::mt19937_64 RowRng(uint64_t seed, int64_t row) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(row), static_cast<uint32_t>(row >> 32)};
  return std::mt19937_64(seq);
}

uint8_t Jitter(uint8_t base, double sigma, std::normal_distribution<double>& nd,
               std::mt19937_64& rng) {
  const double n = std::clamp(nd(rng) * sigma, -3.0 * sigma, 3.0 * sigma);
  return static_cast<uint8_t>(
      std::clamp(std::lround(static_cast<double>(base) + n), 0L, 255L));
}

// Running box sums for one reduced level.
struct LevelAccumulator {
  int64_t downsample = 1;
  int64_t width = 0;
  int64_t rows_in_block = 0;
  std::vector<uint32_t> sums;  // width * 3
  std::unique_ptr<PngRowWriter> writer;
};

Json RgbJson(Rgb c) { return Json::array({c.r, c.g, c.b}); }

absl::StatusOr<Rgb> RgbFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 3) {
    return absl::InvalidArgumentError("color must be [r,g,b]");
  }
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k] = j[k].get<int>();
    if (c[k] < 0 || c[k] > 255) {
      return absl::InvalidArgumentError("color channel outside 0..255");
    }
  }
  return Rgb{static_cast<uint8_t>(c[0]), static_cast<uint8_t>(c[1]),
             static_cast<uint8_t>(c[2])};
}

absl::Status WriteText(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) {
    return absl::InternalError(absl::StrCat("cannot write ", path.string()));
  }
  return absl::OkStatus();
}

}  // namespace

Blob MakeBlob(Label label, double cx, double cy, double radius,
              double jitter_sigma) {
  Blob b;
  b.label = label;
  b.cx = cx;
  b.cy = cy;
  b.radius = radius;
  b.color = kMockAnchors[static_cast<size_t>(label)];
  b.jitter_sigma = jitter_sigma;
  return b;
}

absl::Status ValidateSynthSpec(const SynthSpec& spec) {
  if (spec.slide_id.empty() ||
      spec.slide_id.find_first_of("/\\") != std::string::npos) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid slide id \"", spec.slide_id, "\""));
  }
  if (spec.width <= 0 || spec.height <= 0) {
    return absl::InvalidArgumentError("slide dimensions must be positive");
  }
  if (spec.level_count < 1 || spec.level_count > 16) {
    return absl::InvalidArgumentError(
        absl::StrCat("level count must be in [1, 16], got ", spec.level_count));
  }
  if (spec.compression_level < 0 || spec.compression_level > 9) {
    return absl::InvalidArgumentError("compression level must be in [0, 9]");
  }
  if (spec.blobs.size() > 32767) {
    return absl::InvalidArgumentError("too many blobs");
  }
  for (size_t i = 0; i < spec.blobs.size(); ++i) {
    const Blob& b = spec.blobs[i];
    if (!(b.radius > 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("blob ", i, " has non-positive radius"));
    }
    if (b.cx - b.radius < 0.0 || b.cy - b.radius < 0.0 ||
        b.cx + b.radius > static_cast<double>(spec.width) ||
        b.cy + b.radius > static_cast<double>(spec.height)) {
      return absl::OutOfRangeError(absl::StrCat(
          "blob ", i, " (center ", b.cx, ",", b.cy, " radius ", b.radius,
          ") is out of bounds of the ", spec.width, "x", spec.height, " slide"));
    }
    if (!(b.jitter_sigma >= 0.0 && b.jitter_sigma <= kMaxJitterSigma)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "blob ", i, " jitter sigma must be in [0, ", kMaxJitterSigma, "]"));
    }
    const double reach = JitterReach(b.jitter_sigma);
    for (int c = 0; c < 3; ++c) {
      const double v = c == 0 ? b.color.r : c == 1 ? b.color.g : b.color.b;
      if (v - 3.0 * b.jitter_sigma < 0.0 || v + 3.0 * b.jitter_sigma > 255.0) {
        return absl::InvalidArgumentError(absl::StrCat(
            "blob ", i, " jitter would clip at the color range"));
      }
    }
    // Every jittered pixel must stay strictly nearest its own anchor.
    const size_t own = static_cast<size_t>(b.label);
    const double d_own = ColorDistance(b.color, kMockAnchors[own]);
    for (size_t k = 0; k < kMockAnchors.size(); ++k) {
      if (k == own) continue;
      if (d_own + 2.0 * reach >= ColorDistance(b.color, kMockAnchors[k])) {
        return absl::InvalidArgumentError(absl::StrCat(
            "blob ", i, " color with jitter is not strictly nearest the ",
            LabelName(b.label), " anchor"));
      }
    }
  }
  return absl::OkStatus();
}

Verdict TruthVerdict(const LabelAreas& areas) {
  const int64_t lesion = areas.malignant + areas.benign;
  if (lesion == 0) return Verdict::kBenignNevus;
  // Integer form of malignant / lesion >= 0.04.
  return areas.malignant * 25 >= lesion ? Verdict::kMelanoma
                                        : Verdict::kBenignNevus;
}

std::string SynthTruthToJson(const SynthTruth& truth) {
  Json j;
  j["slide_id"] = truth.slide_id;
  j["verdict"] = VerdictName(truth.verdict);
  j["areas"] = {{"benign", truth.areas.benign},
                {"malignant", truth.areas.malignant},
                {"normal", truth.areas.normal}};
  return j.dump(2) + "\n";
}

absl::StatusOr<SynthTruth> SynthTruthFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    SynthTruth t;
    t.slide_id = j.at("slide_id").get<std::string>();
    MELANOSCOPE_ASSIGN_OR_RETURN(t.verdict,
                                 ParseVerdict(j.at("verdict").get<std::string>()));
    const Json& a = j.at("areas");
    t.areas.benign = a.at("benign").get<int64_t>();
    t.areas.malignant = a.at("malignant").get<int64_t>();
    t.areas.normal = a.at("normal").get<int64_t>();
    return t;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed truth JSON: ", e.what()));
  }
}

absl::StatusOr<SynthTruth> LoadSynthTruth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot read ", path.string()));
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return SynthTruthFromJson(text);
}

std::string SynthSpecToJson(const SynthSpec& spec) {
  Json j;
  j["slide_id"] = spec.slide_id;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["level_count"] = spec.level_count;
  j["base_magnification"] = spec.base_magnification;
  j["background"] = RgbJson(spec.background);
  j["seed"] = spec.seed;
  j["compression_level"] = spec.compression_level;
  Json blobs = Json::array();
  for (const Blob& b : spec.blobs) {
    blobs.push_back({{"label", LabelName(b.label)},
                     {"cx", b.cx},
                     {"cy", b.cy},
                     {"radius", b.radius},
                     {"color", RgbJson(b.color)},
                     {"jitter_sigma", b.jitter_sigma}});
  }
  j["blobs"] = std::move(blobs);
  return j.dump(2) + "\n";
}

absl::StatusOr<SynthSpec> SynthSpecFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    SynthSpec s;
    s.slide_id = j.value("slide_id", s.slide_id);
    s.width = j.at("width").get<int64_t>();
    s.height = j.at("height").get<int64_t>();
    s.level_count = j.value("level_count", s.level_count);
    s.base_magnification = j.value("base_magnification", s.base_magnification);
    if (j.contains("background")) {
      MELANOSCOPE_ASSIGN_OR_RETURN(s.background, RgbFromJson(j["background"]));
    }
    s.seed = j.value("seed", s.seed);
    s.compression_level = j.value("compression_level", s.compression_level);
    for (const Json& jb : j.value("blobs", Json::array())) {
      MELANOSCOPE_ASSIGN_OR_RETURN(Label label,
                                   ParseLabel(jb.at("label").get<std::string>()));
      Blob b = MakeBlob(label, jb.at("cx").get<double>(), jb.at("cy").get<double>(),
                        jb.at("radius").get<double>(),
                        jb.value("jitter_sigma", 4.0));
      if (jb.contains("color")) {
        MELANOSCOPE_ASSIGN_OR_RETURN(b.color, RgbFromJson(jb["color"]));
      }
      s.blobs.push_back(b);
    }
    return s;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed synth spec JSON: ", e.what()));
  }
}

void BlobRow(const SynthSpec& spec, int64_t y, std::span<uint8_t> codes) {
  std::vector<int16_t> idx(static_cast<size_t>(spec.width));
  BlobIndexRow(spec, y, idx);
  for (int64_t x = 0; x < spec.width; ++x) {
    codes[x] = idx[x] < 0 ? 0
                          : static_cast<uint8_t>(
                                static_cast<uint8_t>(spec.blobs[idx[x]].label) + 1);
  }
}

LabelAreas ComputeLabelAreas(const SynthSpec& spec) {
  LabelAreas areas;
  std::vector<int16_t> idx(static_cast<size_t>(spec.width));
  for (int64_t y = 0; y < spec.height; ++y) {
    BlobIndexRow(spec, y, idx);
    for (int16_t b : idx) {
      if (b < 0) continue;
      switch (spec.blobs[b].label) {
        case Label::kBenign: ++areas.benign; break;
        case Label::kMalignant: ++areas.malignant; break;
        case Label::kNormal: ++areas.normal; break;
      }
    }
  }
  return areas;
}

AnnotationSet BlobAnnotations(const SynthSpec& spec) {
  AnnotationSet set;
  for (const Blob& b : spec.blobs) {
    AnnotatedRegion region;
    region.label = b.label;
    for (int k = 0; k < kBlobOutlineVertices; ++k) {
      const double a = 2.0 * std::numbers::pi * k / kBlobOutlineVertices;
      region.polygon.push_back({b.cx + b.radius * std::cos(a),
                                b.cy + b.radius * std::sin(a)});
    }
    set.regions.push_back(std::move(region));
  }
  return set;
}

absl::StatusOr<SynthOutputs> GenerateSlide(const SynthSpec& spec,
                                           const std::filesystem::path& out_dir) {
  MELANOSCOPE_RETURN_IF_ERROR(ValidateSynthSpec(spec));
  SynthOutputs out;
  out.slide_dir = out_dir / spec.slide_id;
  out.annotations = out_dir / (spec.slide_id + ".geojson");
  out.truth = out_dir / (spec.slide_id + ".truth.json");
  std::error_code ec;
  std::filesystem::create_directories(out.slide_dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat(
        "cannot create ", out.slide_dir.string(), ": ", ec.message()));
  }

  SlideMetadata meta = MakePyramidMetadata(spec.slide_id, spec.width, spec.height,
                                           spec.level_count, spec.base_magnification);
  MELANOSCOPE_RETURN_IF_ERROR(WriteSlideMetadata(out.slide_dir, meta));

  std::unique_ptr<PngRowWriter> base_writer;
  MELANOSCOPE_ASSIGN_OR_RETURN(
      base_writer, PngRowWriter::Create(out.slide_dir / meta.levels[0].file,
                                        spec.width, spec.height, 3,
                                        spec.compression_level));
  std::vector<LevelAccumulator> levels(static_cast<size_t>(spec.level_count - 1));
  for (int i = 1; i < spec.level_count; ++i) {
    LevelAccumulator& acc = levels[i - 1];
    acc.downsample = meta.levels[i].downsample;
    acc.width = meta.levels[i].width;
    acc.sums.assign(static_cast<size_t>(acc.width * 3), 0);
    MELANOSCOPE_ASSIGN_OR_RETURN(
        acc.writer, PngRowWriter::Create(out.slide_dir / meta.levels[i].file,
                                         acc.width, meta.levels[i].height, 3,
                                         spec.compression_level));
  }

  std::vector<int16_t> idx(static_cast<size_t>(spec.width));
  std::vector<uint8_t> row(static_cast<size_t>(spec.width * 3));
  // Horizontal block sums of the current row, halving per level.
  std::vector<std::vector<uint32_t>> hsums(levels.size());
  std::vector<uint8_t> out_row;
  std::normal_distribution<double> nd(0.0, 1.0);
  LabelAreas areas;

  for (int64_t y = 0; y < spec.height; ++y) {
    BlobIndexRow(spec, y, idx);
    bool any_blob = false;
    for (int64_t x = 0; x < spec.width; ++x) {
      uint8_t* p = &row[static_cast<size_t>(x * 3)];
      if (idx[x] < 0) {
        p[0] = spec.background.r;
        p[1] = spec.background.g;
        p[2] = spec.background.b;
      } else {
        any_blob = true;
      }
    }
    if (any_blob) {
      std::mt19937_64 rng = RowRng(spec.seed, y);
      nd.reset();
      for (int64_t x = 0; x < spec.width; ++x) {
        if (idx[x] < 0) continue;
        const Blob& b = spec.blobs[idx[x]];
        uint8_t* p = &row[static_cast<size_t>(x * 3)];
        p[0] = Jitter(b.color.r, b.jitter_sigma, nd, rng);
        p[1] = Jitter(b.color.g, b.jitter_sigma, nd, rng);
        p[2] = Jitter(b.color.b, b.jitter_sigma, nd, rng);
        switch (b.label) {
          case Label::kBenign: ++areas.benign; break;
          case Label::kMalignant: ++areas.malignant; break;
          case Label::kNormal: ++areas.normal; break;
        }
      }
    }
    MELANOSCOPE_RETURN_IF_ERROR(base_writer->WriteRow(row));

    for (size_t l = 0; l < levels.size(); ++l) {
      LevelAccumulator& acc = levels[l];
      // Pairwise sums of the previous level's horizontal sums (or of the
      // row itself for the first reduced level).
      std::vector<uint32_t>& cur = hsums[l];
      cur.assign(static_cast<size_t>(acc.width * 3), 0);
      const int64_t src_w = l == 0 ? spec.width : levels[l - 1].width;
      for (int64_t x = 0; x < src_w; ++x) {
        for (int c = 0; c < 3; ++c) {
          const uint32_t v = l == 0 ? row[static_cast<size_t>(x * 3 + c)]
                                    : hsums[l - 1][static_cast<size_t>(x * 3 + c)];
          cur[static_cast<size_t>((x / 2) * 3 + c)] += v;
        }
      }
      for (size_t k = 0; k < cur.size(); ++k) acc.sums[k] += cur[k];
      ++acc.rows_in_block;
      if (acc.rows_in_block == acc.downsample || y == spec.height - 1) {
        out_row.resize(static_cast<size_t>(acc.width * 3));
        for (int64_t x = 0; x < acc.width; ++x) {
          const int64_t cols =
              std::min(acc.downsample, spec.width - x * acc.downsample);
          const uint32_t n = static_cast<uint32_t>(cols * acc.rows_in_block);
          for (int c = 0; c < 3; ++c) {
            const size_t k = static_cast<size_t>(x * 3 + c);
            out_row[k] = static_cast<uint8_t>((acc.sums[k] + n / 2) / n);
          }
        }
        MELANOSCOPE_RETURN_IF_ERROR(acc.writer->WriteRow(out_row));
        std::fill(acc.sums.begin(), acc.sums.end(), 0);
        acc.rows_in_block = 0;
      }
    }
  }
  MELANOSCOPE_RETURN_IF_ERROR(base_writer->Finish());
  for (LevelAccumulator& acc : levels) {
    MELANOSCOPE_RETURN_IF_ERROR(acc.writer->Finish());
  }

  MELANOSCOPE_RETURN_IF_ERROR(
      SaveAnnotations(out.annotations, BlobAnnotations(spec)));
  out.truth_record.slide_id = spec.slide_id;
  out.truth_record.areas = areas;
  out.truth_record.verdict = TruthVerdict(areas);
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteText(out.truth, SynthTruthToJson(out.truth_record)));
  return out;
}

absl::StatusOr<std::vector<SynthOutputs>> GenerateSlides(
    std::span<const SynthSpec> specs, const std::filesystem::path& out_dir,
    int workers) {
  std::vector<SynthOutputs> outs(specs.size());
  MELANOSCOPE_RETURN_IF_ERROR(ParallelFor(specs.size(), workers, [&](size_t i) {
    auto r = GenerateSlide(specs[i], out_dir);
    if (!r.ok()) return r.status();
    outs[i] = std::move(*r);
    return absl::OkStatus();
  }));
  return outs;
}

absl::StatusOr<SynthSpec> RandomSynthSpec(const std::string& slide_id,
                                          uint64_t seed, Verdict target,
                                          const RandomSpecOptions& o) {
  if (o.min_blobs < 1 || o.max_blobs < o.min_blobs) {
    return absl::InvalidArgumentError("invalid blob count range");
  }
  if (!(o.min_radius > 0.0) || o.max_radius < o.min_radius ||
      2.0 * o.max_radius >= static_cast<double>(std::min(o.width, o.height))) {
    return absl::InvalidArgumentError("blob radius range does not fit the slide");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Blobs keep at least this gap so no grid cell touches two lesions.
  const double gap = std::max(64.0, o.min_radius / 2.0);
  constexpr int kAttempts = 2000;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    SynthSpec spec;
    spec.slide_id = slide_id;
    spec.width = o.width;
    spec.height = o.height;
    spec.level_count = o.level_count;
    spec.seed = seed;
    spec.compression_level = o.compression_level;
    const int n = o.min_blobs +
                  static_cast<int>(rng() % static_cast<uint64_t>(
                                             o.max_blobs - o.min_blobs + 1));
    bool placed_all = true;
    for (int k = 0; k < n && placed_all; ++k) {
      Label label;
      if (k == 0) {
        label = target == Verdict::kMelanoma ? Label::kMalignant : Label::kBenign;
      } else {
        const uint64_t pick = rng() % (o.include_normal ? 3 : 2);
        label = pick == 2 ? Label::kNormal
                : pick == 1 && target == Verdict::kMelanoma ? Label::kMalignant
                                                            : Label::kBenign;
      }
      const double r = o.min_radius + unit(rng) * (o.max_radius - o.min_radius);
      placed_all = false;
      for (int tries = 0; tries < 200 && !placed_all; ++tries) {
        const double cx = r + unit(rng) * (static_cast<double>(o.width) - 2.0 * r);
        const double cy = r + unit(rng) * (static_cast<double>(o.height) - 2.0 * r);
        bool clear = true;
        for (const Blob& other : spec.blobs) {
          if (std::hypot(cx - other.cx, cy - other.cy) < r + other.radius + gap) {
            clear = false;
            break;
          }
        }
        if (clear) {
          spec.blobs.push_back(MakeBlob(label, std::floor(cx), std::floor(cy),
                                        std::floor(r), o.jitter_sigma));
          placed_all = true;
        }
      }
    }
    if (!placed_all) continue;
    const LabelAreas areas = ComputeLabelAreas(spec);
    const int64_t lesion = areas.benign + areas.malignant;
    if (lesion == 0) continue;
    const double ratio = static_cast<double>(areas.malignant) / lesion;
    if (ratio >= 0.01 && ratio <= 0.15) continue;
    if (TruthVerdict(areas) != target) continue;
    MELANOSCOPE_RETURN_IF_ERROR(ValidateSynthSpec(spec));
    return spec;
  }
  return absl::ResourceExhaustedError(
      "could not place non-overlapping blobs; enlarge the slide or shrink radii");
}

}  // namespace melanoscope
