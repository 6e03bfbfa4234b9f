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

#include "gtest/gtest.h"
#include "melanoscope/artifacts.h"
#include "melanoscope/png_io.h"
#include "melanoscope/pipeline.h"
#include "test_util.h"

namespace melanoscope {
namespace {

using testing::ReadBytes;
using testing::TempDir;

TEST(ConfigTest, DefaultsAndOverrides) {
  auto c = ParseConfig(R"({
    "slides": ["a", "/abs/b"],
    "magnification": 20,
    "overlap_rule": "independent",
    "plan_mode": "tissue",
    "hue_range": [120, 170],
    "backend": {"kind": "neural", "arity": "binary", "model": "m.onnx"},
    "thresholds": {"t_r": 0.1},
    "workers": 4,
    "out": "o"
  })", "/base");
  ASSERT_OK(c);
  EXPECT_EQ(c->slides, (std::vector<std::string>{"/base/a", "/abs/b"}));
  EXPECT_EQ(c->magnification, 20.0);
  EXPECT_EQ(c->overlap_rule, OverlapRule::kIndependent);
  EXPECT_EQ(c->plan_mode, PlanMode::kTissue);
  EXPECT_EQ(c->foreground.hue8_lo, 120);
  EXPECT_EQ(c->backend, BackendKind::kNeural);
  EXPECT_EQ(c->arity, Arity::kBinary);
  EXPECT_EQ(c->model, "/base/m.onnx");
  EXPECT_EQ(c->thresholds.t_p, 0.99);
  EXPECT_EQ(c->thresholds.t_r, 0.1);
  EXPECT_EQ(c->overlap_min, 0.70);
  EXPECT_EQ(c->out, "/base/o");
  EXPECT_OK(ValidateConfig(*c));
}

TEST(ConfigTest, JsonRoundTrip) {
  PipelineConfig c;
  c.slides = {"/s/a", "/s/b"};
  c.annotations = {"/s/a.geojson", "/s/b.geojson"};
  c.stats = NormalizationStats{{0.5, 0.4, 0.3}, {0.2, 0.2, 0.25}};
  c.thresholds = {0.9, 0.2};
  c.seed = 12;
  const std::string json = ConfigToJson(c);
  auto back = ParseConfig(json);
  ASSERT_OK(back);
  EXPECT_EQ(ConfigToJson(*back), json);
  EXPECT_EQ(back->stats, c.stats);
}

TEST(ConfigTest, UnknownKeysAreErrors) {
  auto c = ParseConfig(R"({"slides": ["a"], "overlap": 0.5})");
  ASSERT_FALSE(c.ok());
  EXPECT_NE(c.status().message().find("unknown config key \"overlap\""),
            std::string::npos);
  c = ParseConfig(R"({"slides": ["a"], "thresholds": {"tp": 0.5}})");
  ASSERT_FALSE(c.ok());
  EXPECT_NE(c.status().message().find("thresholds.tp"), std::string::npos);
  EXPECT_FALSE(ParseConfig("[]").ok());
  EXPECT_FALSE(ParseConfig(R"({"plan_mode": "all"})").ok());
  EXPECT_FALSE(ParseConfig(R"({"magnification": "ten"})").ok());
}

TEST(ConfigTest, RangeMessagesNameFieldAndRange) {
  PipelineConfig c;
  c.slides = {"a"};
  c.overlap_min = 1.5;
  absl::Status st = ValidateConfig(c);
  EXPECT_EQ(st.code(), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(st.message(), "overlap_min must be in (0, 1], got 1.5");

  c = {};
  c.slides = {"a"};
  c.thresholds.t_p = 0;
  EXPECT_EQ(ValidateConfig(c).message(), "t_p must be in (0, 1], got 0");
  c = {};
  c.slides = {"a"};
  c.workers = 0;
  EXPECT_FALSE(ValidateConfig(c).ok());
  c = {};
  EXPECT_FALSE(ValidateConfig(c).ok());  // no slides
  c.slides = {"a", "b"};
  c.annotations = {"x"};
  EXPECT_FALSE(ValidateConfig(c).ok());
  c = {};
  c.slides = {"a"};
  c.backend = BackendKind::kNeural;
  EXPECT_FALSE(ValidateConfig(c).ok());
}

TEST(StageTest, Names) {
  for (const char* name : {"segment", "extract", "infer", "map", "verdict",
                           "calibrate", "evaluate", "pipeline"}) {
    auto s = ParseStage(name);
    ASSERT_OK(s);
    EXPECT_STREQ(StageName(*s), name);
  }
  EXPECT_FALSE(ParseStage("train").ok());
}

TEST(StageTest, CheckInputsReportsMissingFiles) {
  TempDir dir;
  PipelineConfig c;
  c.slides = {(dir / "absent").string()};
  c.out = (dir / "out").string();
  EXPECT_EQ(CheckStageInputs(c, Stage::kSegment).code(),
            absl::StatusCode::kNotFound);

  RgbTile tile(32, 32);
  ASSERT_OK(WritePng(dir / "s.png", tile));
  c.slides = {(dir / "s.png").string()};
  EXPECT_OK(CheckStageInputs(c, Stage::kSegment));
  // Annotated planning needs annotations; later stages need earlier outputs.
  EXPECT_FALSE(CheckStageInputs(c, Stage::kExtract).ok());
  auto st = CheckStageInputs(c, Stage::kInfer);
  EXPECT_NE(st.message().find("run extract first"), std::string::npos);
  EXPECT_FALSE(CheckStageInputs(c, Stage::kVerdict).ok());
  EXPECT_FALSE(CheckStageInputs(c, Stage::kCalibrate).ok());
  c.plan_mode = PlanMode::kTissue;
  EXPECT_OK(CheckStageInputs(c, Stage::kExtract));
  c.slides.push_back(c.slides[0]);
  EXPECT_NE(CheckStageInputs(c, Stage::kSegment).message().find("duplicate"),
            std::string::npos);
}

TEST(OutputPathsTest, Layout) {
  const OutputPaths out{"/o"};
  EXPECT_EQ(out.Plan("s"), "/o/plan/s.json");
  EXPECT_EQ(out.Infer("s"), "/o/infer/s.jsonl");
  EXPECT_EQ(out.MapJson("s"), "/o/map/s.json");
  EXPECT_EQ(out.Verdict("s"), "/o/verdict/s.json");
  EXPECT_EQ(out.MetricsCsv(), "/o/metrics.csv");
  EXPECT_EQ(out.Dataset(), "/o/dataset");
}

}  // namespace
}  // namespace melanoscope
