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

#include "melanoscope/dataset.h"

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/artifacts.h"
#include "melanoscope/png_io.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {
namespace {

using Json = nlohmann::ordered_json;

Json StatsJson(const NormalizationStats& s) {
  return {{"mean", s.mean}, {"std", s.stddev}};
}

NormalizationStats StatsFromJson(const Json& j) {
  NormalizationStats s;
  s.mean = j.at("mean").get<std::array<double, 3>>();
  s.stddev = j.at("std").get<std::array<double, 3>>();
  return s;
}

}  // namespace

std::string PatchFileName(const PatchRecord& r) {
  return absl::StrCat(r.slide_id, "_", r.x, "_", r.y, "_", r.level, ".png");
}

DatasetWriter::DatasetWriter(DatasetOptions options)
    : options_(std::move(options)) {
  manifest_.patch_size = options_.patch_size;
}

absl::Status DatasetWriter::AddSlide(const Slide& slide,
                                     std::span<const PatchRecord> records) {
  std::vector<PatchRecord> labeled;
  for (const PatchRecord& r : records) {
    if (r.ground_label) labeled.push_back(r);
  }
  for (Label l : kAllLabels) {
    std::error_code ec;
    std::filesystem::create_directories(options_.root / LabelName(l), ec);
    if (ec) {
      return absl::InternalError(absl::StrCat(
          "cannot create dataset directory: ", ec.message()));
    }
  }
  return ExtractPatches(
      slide, labeled, [&](size_t index, RgbTile tile) -> absl::Status {
        const PatchRecord& r = labeled[index];
        if (tile.width != options_.patch_size ||
            tile.height != options_.patch_size) {
          tile = ResizeBilinear(tile, options_.patch_size, options_.patch_size);
        }
        const std::string rel =
            absl::StrCat(LabelName(*r.ground_label), "/", PatchFileName(r));
        MELANOSCOPE_RETURN_IF_ERROR(
            WritePng(options_.root / rel, tile, options_.png_compression));
        stats_.Add(tile);
        manifest_.entries.push_back({r, rel});
        ++manifest_.class_counts[static_cast<size_t>(*r.ground_label)];
        return absl::OkStatus();
      });
}

absl::StatusOr<DatasetManifest> DatasetWriter::Finish() {
  if (manifest_.entries.empty()) {
    return absl::FailedPreconditionError(
        "no labeled patches were exported; check annotations and overlap_min");
  }
  MELANOSCOPE_ASSIGN_OR_RETURN(manifest_.stats, stats_.Finish());

  if (options_.augment_underrepresented) {
    const int64_t target = *std::max_element(manifest_.class_counts.begin(),
                                             manifest_.class_counts.end());
    for (Label l : kAllLabels) {
      std::vector<const DatasetEntry*> pool;
      for (const DatasetEntry& e : manifest_.entries) {
        if (*e.record.ground_label == l) pool.push_back(&e);
      }
      if (pool.empty()) continue;
      const int64_t missing = target - static_cast<int64_t>(pool.size());
      for (int64_t k = 0; k < missing; ++k) {
        const DatasetEntry& src = *pool[static_cast<size_t>(k) % pool.size()];
        MELANOSCOPE_ASSIGN_OR_RETURN(RgbTile tile, ReadPng(options_.root / src.file));
        const uint64_t seed =
            options_.seed * 1000003u + static_cast<uint64_t>(l) * 7919u +
            static_cast<uint64_t>(k);
        MELANOSCOPE_ASSIGN_OR_RETURN(RgbTile aug, AugmentPatch(tile, seed));
        if (aug.width != options_.patch_size) {
          aug = ResizeBilinear(aug, options_.patch_size, options_.patch_size);
        }
        std::string rel = src.file;
        rel.insert(rel.size() - 4, absl::StrCat("_aug", k));
        MELANOSCOPE_RETURN_IF_ERROR(
            WritePng(options_.root / rel, aug, options_.png_compression));
        manifest_.augmented.push_back({rel, src.file, l, seed});
      }
    }
  }
  MELANOSCOPE_RETURN_IF_ERROR(WriteTextFile(options_.root / "manifest.json",
                                            ManifestToJson(manifest_)));
  return manifest_;
}

std::string ManifestToJson(const DatasetManifest& m) {
  Json j;
  j["version"] = 1;
  j["patch_size"] = m.patch_size;
  j["stats"] = StatsJson(m.stats);
  j["class_counts"] = {{"benign", m.class_counts[0]},
                       {"malignant", m.class_counts[1]},
                       {"normal", m.class_counts[2]}};
  Json records = Json::array();
  for (const DatasetEntry& e : m.entries) {
    records.push_back({{"file", e.file},
                       {"slide_id", e.record.slide_id},
                       {"x", e.record.x},
                       {"y", e.record.y},
                       {"level", e.record.level},
                       {"size_px", e.record.size_px},
                       {"label", LabelName(*e.record.ground_label)},
                       {"fraction", e.record.qualifying_fraction}});
  }
  j["records"] = std::move(records);
  Json aug = Json::array();
  for (const AugmentedEntry& a : m.augmented) {
    aug.push_back({{"file", a.file},
                   {"source", a.source},
                   {"label", LabelName(a.label)},
                   {"seed", a.seed}});
  }
  j["augmented"] = std::move(aug);
  return j.dump(1) + "\n";
}

absl::StatusOr<DatasetManifest> ManifestFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    DatasetManifest m;
    m.patch_size = j.at("patch_size").get<int64_t>();
    m.stats = StatsFromJson(j.at("stats"));
    for (const Json& jr : j.at("records")) {
      DatasetEntry e;
      e.file = jr.at("file").get<std::string>();
      e.record.slide_id = jr.at("slide_id").get<std::string>();
      e.record.x = jr.at("x").get<int64_t>();
      e.record.y = jr.at("y").get<int64_t>();
      e.record.level = jr.at("level").get<int>();
      e.record.size_px = jr.at("size_px").get<int64_t>();
      MELANOSCOPE_ASSIGN_OR_RETURN(Label l,
                                   ParseLabel(jr.at("label").get<std::string>()));
      e.record.ground_label = l;
      e.record.qualifying_fraction = jr.at("fraction").get<double>();
      ++m.class_counts[static_cast<size_t>(l)];
      m.entries.push_back(std::move(e));
    }
    for (const Json& ja : j.value("augmented", Json::array())) {
      AugmentedEntry a;
      a.file = ja.at("file").get<std::string>();
      a.source = ja.at("source").get<std::string>();
      MELANOSCOPE_ASSIGN_OR_RETURN(a.label,
                                   ParseLabel(ja.at("label").get<std::string>()));
      a.seed = ja.at("seed").get<uint64_t>();
      m.augmented.push_back(std::move(a));
    }
    return m;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed manifest JSON: ", e.what()));
  }
}

absl::StatusOr<NormalizationStats> LoadManifestStats(
    const std::filesystem::path& path) {
  MELANOSCOPE_ASSIGN_OR_RETURN(std::string text, ReadTextFile(path));
  try {
    NormalizationStats s = StatsFromJson(Json::parse(text).at("stats"));
    MELANOSCOPE_RETURN_IF_ERROR(ValidateStats(s));
    return s;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat(
        "manifest ", path.string(), " has no usable stats: ", e.what()));
  }
}

}  // namespace melanoscope
