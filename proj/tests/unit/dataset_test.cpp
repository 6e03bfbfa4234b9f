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

#include "gtest/gtest.h"
#include "melanoscope/artifacts.h"
#include "melanoscope/png_io.h"
#include "melanoscope/synthgen.h"
#include "test_util.h"

namespace melanoscope {
namespace {

using testing::ReadBytes;
using testing::TempDir;

// A 768 x 512 single-level slide; records are 128 px level-0 cells.
class DatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthSpec spec;
    spec.slide_id = "d";
    spec.width = 768;
    spec.height = 512;
    spec.blobs = {MakeBlob(Label::kBenign, 200, 250, 180),
                  MakeBlob(Label::kMalignant, 600, 250, 120)};
    auto out = GenerateSlide(spec, dir_.path());
    ASSERT_OK(out);
    auto slide = Slide::Open(out->slide_dir);
    ASSERT_OK(slide);
    slide_.emplace(*std::move(slide));
    for (int64_t y = 0; y < 512; y += 128) {
      for (int64_t x = 0; x < 768; x += 128) {
        PatchRecord r;
        r.slide_id = "d";
        r.x = x;
        r.y = y;
        r.size_px = 128;
        if (x < 384 && y < 256) r.ground_label = Label::kBenign;
        if (x >= 512 && y == 128) r.ground_label = Label::kMalignant;
        records_.push_back(r);
      }
    }
  }

  TempDir dir_;
  std::optional<Slide> slide_;
  std::vector<PatchRecord> records_;
};

TEST_F(DatasetTest, WritesLabeledPatchesAndManifest) {
  DatasetOptions o;
  o.root = dir_ / "ds";
  o.patch_size = 128;
  DatasetWriter writer(o);
  ASSERT_OK(writer.AddSlide(*slide_, records_));
  auto manifest = writer.Finish();
  ASSERT_OK(manifest);
  ASSERT_EQ(manifest->entries.size(), 8u);
  EXPECT_EQ(manifest->class_counts, (std::array<int64_t, 3>{6, 2, 0}));
  EXPECT_TRUE(manifest->augmented.empty());

  std::vector<RgbTile> written;
  for (const DatasetEntry& e : manifest->entries) {
    EXPECT_EQ(e.file, absl::StrCat(LabelName(*e.record.ground_label), "/d_",
                                   e.record.x, "_", e.record.y, "_0.png"));
    auto tile = ReadPng(o.root / e.file);
    ASSERT_OK(tile);
    auto want = slide_->ReadRegion(0, e.record.x, e.record.y, 128, 128);
    EXPECT_EQ(tile->pixels, want->pixels) << e.file;
    written.push_back(*tile);
  }
  EXPECT_TRUE(std::filesystem::is_directory(o.root / "normal"));
  auto stats = ComputeChannelStats(written);
  ASSERT_OK(stats);
  EXPECT_EQ(manifest->stats, *stats);

  auto text = ReadTextFile(o.root / "manifest.json");
  ASSERT_OK(text);
  auto back = ManifestFromJson(*text);
  ASSERT_OK(back);
  EXPECT_EQ(back->entries.size(), 8u);
  EXPECT_EQ(back->entries[3].record, manifest->entries[3].record);
  EXPECT_EQ(back->stats, manifest->stats);
  EXPECT_EQ(ManifestToJson(*back), *text);
  auto loaded = LoadManifestStats(o.root / "manifest.json");
  ASSERT_OK(loaded);
  EXPECT_EQ(*loaded, manifest->stats);
}

TEST_F(DatasetTest, ResizesToPatchSize) {
  DatasetOptions o;
  o.root = dir_ / "ds";
  o.patch_size = 64;
  DatasetWriter writer(o);
  ASSERT_OK(writer.AddSlide(*slide_, records_));
  auto manifest = writer.Finish();
  ASSERT_OK(manifest);
  auto info = ReadPngInfo(o.root / manifest->entries[0].file);
  ASSERT_OK(info);
  EXPECT_EQ(info->width, 64);
  EXPECT_EQ(info->height, 64);
}

TEST_F(DatasetTest, AugmentationBalancesClassesDeterministically) {
  auto run = [&](const std::filesystem::path& root) {
    DatasetOptions o;
    o.root = root;
    o.patch_size = 256;  // augmentation crops 224 px
    o.augment_underrepresented = true;
    o.seed = 3;
    DatasetWriter writer(o);
    EXPECT_OK(writer.AddSlide(*slide_, records_));
    return writer.Finish();
  };
  auto a = run(dir_ / "a");
  auto b = run(dir_ / "b");
  ASSERT_OK(a);
  ASSERT_OK(b);
  ASSERT_EQ(a->augmented.size(), 4u);  // malignant 2 -> 6, normal has no pool
  for (const AugmentedEntry& e : a->augmented) {
    EXPECT_EQ(e.label, Label::kMalignant);
    EXPECT_NE(e.file.find("_aug"), std::string::npos);
    auto info = ReadPngInfo(dir_ / "a" / e.file);
    ASSERT_OK(info);
    EXPECT_EQ(info->width, 256);
    EXPECT_EQ(ReadBytes(dir_ / "a" / e.file), ReadBytes(dir_ / "b" / e.file));
  }
  EXPECT_EQ(ReadBytes(dir_ / "a" / "manifest.json"),
            ReadBytes(dir_ / "b" / "manifest.json"));
}

TEST_F(DatasetTest, EmptyExportFails) {
  DatasetOptions o;
  o.root = dir_ / "ds";
  DatasetWriter writer(o);
  for (PatchRecord& r : records_) r.ground_label.reset();
  ASSERT_OK(writer.AddSlide(*slide_, records_));
  auto manifest = writer.Finish();
  EXPECT_EQ(manifest.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(ManifestTest, RejectsMalformed) {
  EXPECT_FALSE(ManifestFromJson("{}").ok());
  EXPECT_FALSE(ManifestFromJson("[1,2").ok());
  EXPECT_FALSE(LoadManifestStats("/nonexistent/manifest.json").ok());
}

}  // namespace
}  // namespace melanoscope
