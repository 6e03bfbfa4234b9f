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

#include "melanoscope/pipeline.h"

#include <map>

#include "gtest/gtest.h"
#include "json.hpp"
#include "melanoscope/png_io.h"
#include "test_util.h"

namespace melanoscope {
namespace {

using testing::ReadBytes;
using testing::TempDir;

// Every file under `root` except timing.json, keyed by relative path.
std::map<std::string, std::string> Snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    files[std::filesystem::relative(e.path(), root).string()] = ReadBytes(e.path());
  }
  return files;
}

// Four 2048 x 2048 synthetic slides planned at 40x: an 8 x 8 grid each.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    SynthRunOptions o;
    o.count = 4;
    o.seed = 3;
    o.out = (*dir_ / "synth").string();
    o.spec.width = 2048;
    o.spec.height = 2048;
    o.spec.level_count = 2;
    o.spec.min_radius = 250;
    o.spec.max_radius = 500;
    auto outs = RunSynth(o);
    ASSERT_TRUE(outs.ok()) << outs.status();
    auto config = LoadConfig(*dir_ / "synth" / "config.json");
    ASSERT_TRUE(config.ok()) << config.status();
    config->magnification = 40.0;
    config_ = new PipelineConfig(*config);
  }
  static void TearDownTestSuite() {
    delete config_;
    delete dir_;
  }

  PipelineConfig Config(const std::string& out, int workers = 1) const {
    PipelineConfig c = *config_;
    c.out = (*dir_ / out).string();
    c.workers = workers;
    return c;
  }

  static TempDir* dir_;
  static PipelineConfig* config_;
};

TempDir* PipelineTest::dir_ = nullptr;
PipelineConfig* PipelineTest::config_ = nullptr;

TEST_F(PipelineTest, SynthConfigListsEverySlide) {
  EXPECT_EQ(config_->slides.size(), 4u);
  EXPECT_EQ(config_->annotations.size(), 4u);
  EXPECT_EQ(config_->truths.size(), 4u);
  EXPECT_OK(ValidateConfig(*config_));
}

TEST_F(PipelineTest, VerdictsMatchTruth) {
  const PipelineConfig c = Config("run");
  auto result = RunPipeline(c);
  ASSERT_OK(result);
  ASSERT_EQ(result->verdicts.size(), 4u);
  for (size_t i = 0; i < 4; ++i) {
    const Verdict want = i % 2 == 0 ? Verdict::kMelanoma : Verdict::kBenignNevus;
    EXPECT_EQ(result->verdicts[i].verdict, want) << result->verdicts[i].slide_id;
    EXPECT_FALSE(result->verdicts[i].no_lesion_flag);
  }
  const OutputPaths out{c.out};
  const std::string id = result->verdicts[0].slide_id;
  for (const auto& p : {out.Plan(id), out.Infer(id), out.MapJson(id), out.MapPng(id),
                        out.MapComposite(id), out.Verdict(id), out.Timing(),
                        out.Dataset() / "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(p)) << p;
  }
  const auto timing = nlohmann::json::parse(ReadBytes(out.Timing()));
  EXPECT_EQ(timing["slides"].size(), 4u);
  EXPECT_FALSE(timing["over_budget"].get<bool>());
}

TEST_F(PipelineTest, ChainedStagesEqualPipeline) {
  const PipelineConfig whole = Config("whole");
  ASSERT_OK(RunPipeline(whole));
  const PipelineConfig chained = Config("chained");
  for (Stage s : {Stage::kExtract, Stage::kInfer, Stage::kMap, Stage::kVerdict}) {
    ASSERT_OK(CheckStageInputs(chained, s));
    const absl::Status st = RunStage(chained, s);
    ASSERT_TRUE(st.ok()) << StageName(s) << ": " << st;
  }
  const auto a = Snapshot(whole.out);
  const auto b = Snapshot(chained.out);
  EXPECT_GT(a.size(), 20u);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [rel, bytes] : a) {
    ASSERT_TRUE(b.contains(rel)) << rel;
    EXPECT_EQ(b.at(rel), bytes) << rel;
  }
}

TEST_F(PipelineTest, OutputIndependentOfWorkerCount) {
  PipelineConfig one = Config("w1", 1);
  PipelineConfig many = Config("w8", 8);
  one.batch_size = many.batch_size = 37;  // batches straddle slide rows
  ASSERT_OK(RunPipeline(one));
  ASSERT_OK(RunPipeline(many));
  ASSERT_OK(RunEvaluate(one));
  ASSERT_OK(RunEvaluate(many));
  EXPECT_EQ(Snapshot(one.out), Snapshot(many.out));
}

TEST_F(PipelineTest, EvaluateWritesPatchAndSlideMetrics) {
  const PipelineConfig c = Config("eval");
  ASSERT_OK(RunPipeline(c));
  auto report = RunEvaluate(c);
  ASSERT_OK(report);
  EXPECT_GT(report->total, 0);
  EXPECT_GT(*report->accuracy, 0.9);
  const OutputPaths out{c.out};
  const std::string csv = ReadBytes(out.MetricsCsv());
  EXPECT_EQ(csv.rfind(MetricsCsvHeader(), 0), 0u);
  EXPECT_NE(csv.find("\nmock-multiclass/patch,"), std::string::npos);
  EXPECT_NE(csv.find("\nmock-multiclass/slide,100.00,"), std::string::npos);
  const auto j = nlohmann::json::parse(ReadBytes(out.MetricsJson()));
  EXPECT_TRUE(j.contains("patch"));
  EXPECT_EQ(j["slide"]["n"], 4);
  EXPECT_FALSE(j["evaluated_after_threshold"].get<bool>());
}

TEST_F(PipelineTest, CalibrateSeparatesTheSet) {
  const PipelineConfig c = Config("cal");
  ASSERT_OK(RunStage(c, Stage::kExtract));
  ASSERT_OK(RunStage(c, Stage::kInfer));
  auto r = RunCalibrate(c);
  ASSERT_OK(r);
  EXPECT_DOUBLE_EQ(r->sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(r->specificity, 1.0);
  EXPECT_FALSE(r->single_class);
  const auto j = nlohmann::json::parse(ReadBytes(OutputPaths{c.out}.Thresholds()));
  EXPECT_DOUBLE_EQ(j["t_p"].get<double>(), r->thresholds.t_p);
  EXPECT_DOUBLE_EQ(j["t_r"].get<double>(), r->thresholds.t_r);
}

TEST_F(PipelineTest, SegmentWritesBinaryMask) {
  PipelineConfig c = Config("seg");
  c.slides.resize(1);
  c.annotations.resize(1);
  c.truths.resize(1);
  ASSERT_OK(RunSegment(c));
  auto id = SlideIdForPath(c.slides[0]);
  ASSERT_OK(id);
  auto mask = ReadPng(OutputPaths{c.out}.Segment(*id));
  ASSERT_OK(mask);
  EXPECT_EQ(mask->width, 2048);
  int64_t fg = 0;
  for (size_t k = 0; k < mask->pixels.size(); k += 3) {
    ASSERT_TRUE(mask->pixels[k] == 0 || mask->pixels[k] == 255);
    fg += mask->pixels[k] == 255;
  }
  EXPECT_GT(fg, 0);
}

TEST_F(PipelineTest, TissueModeAndBudgetWarning) {
  PipelineConfig c = Config("tissue");
  c.plan_mode = PlanMode::kTissue;
  c.annotations.clear();
  c.export_dataset = false;
  c.time_budget_s = 1e-6;
  auto r = RunPipeline(c);
  ASSERT_OK(r);
  EXPECT_TRUE(r->over_budget);
  EXPECT_FALSE(std::filesystem::exists(OutputPaths{c.out}.Dataset()));
  for (const SlideVerdict& v : r->verdicts) EXPECT_FALSE(v.no_lesion_flag);
}

TEST_F(PipelineTest, StagesFailWithoutEarlierArtifacts) {
  const PipelineConfig c = Config("empty");
  EXPECT_FALSE(RunStage(c, Stage::kMap).ok());
  EXPECT_FALSE(CheckStageInputs(c, Stage::kMap).ok());
}

TEST(SynthRunTest, RejectsBadOptions) {
  SynthRunOptions o;
  o.count = 0;
  EXPECT_EQ(RunSynth(o).status().code(), absl::StatusCode::kInvalidArgument);
  o.count = 1;
  o.workers = 0;
  EXPECT_EQ(RunSynth(o).status().code(), absl::StatusCode::kInvalidArgument);
}

}  // namespace
}  // namespace melanoscope
