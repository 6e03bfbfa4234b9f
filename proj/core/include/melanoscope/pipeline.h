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

/// @file pipeline.h
/// @brief Pipeline configuration and stage runners.
///
/// Every stage reads and writes files under the output directory:
///
///   segment/<id>.png          foreground mask at the planning level
///   plan/<id>.json            planned patch records (extract)
///   dataset/...               exported labeled patches (extract)
///   infer/<id>.jsonl          per-patch probability vectors
///   map/<id>.json, .png       localization map and its rendering
///   verdict/<id>.json         slide verdict
///   thresholds.json           calibrated thresholds
///   metrics.json, .csv        evaluation report
///   timing.json               wall-clock timings (the only nondeterministic file)
///
/// `pipeline` runs extract, infer, map and verdict through the same stage
/// functions, so its artifacts equal those of the chained subcommands.

#ifndef MELANOSCOPE_PIPELINE_H_
#define MELANOSCOPE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/artifacts.h"
#include "melanoscope/classifier.h"
#include "melanoscope/decision.h"
#include "melanoscope/evaluation.h"
#include "melanoscope/synthgen.h"
#include "melanoscope/tiling.h"

namespace melanoscope {

struct PipelineConfig {
  std::vector<std::string> slides;
  std::vector<std::string> annotations;  // empty or one per slide
  std::vector<std::string> truths;       // empty or one per slide
  double magnification = 10.0;
  int64_t patch_size = 256;
  double overlap_min = 0.70;
  OverlapRule overlap_rule = OverlapRule::kConjunction;
  PlanMode plan_mode = PlanMode::kAnnotated;
  ForegroundOptions foreground;
  BackendKind backend = BackendKind::kMock;
  Arity arity = Arity::kMulticlass;
  std::optional<std::string> model;
  /// Normalization stats: a dataset manifest to read them from, or inline
  /// values. ImageNet statistics otherwise.
  std::optional<std::string> stats_manifest;
  std::optional<NormalizationStats> stats;
  Thresholds thresholds;
  int64_t batch_size = 256;
  int workers = 1;
  std::string out = "melanoscope_out";
  uint64_t seed = 0;
  double time_budget_s = 180.0;
  bool augment_underrepresented = false;
  bool export_dataset = true;
  bool evaluate_after_threshold = false;
  int map_render_scale = 4;
};

/// Range checks on every field. Messages name the field and its range.
absl::Status ValidateConfig(const PipelineConfig& config);

/// Parses a JSON config. Relative paths resolve against `base_dir`. Unknown
/// keys are errors.
absl::StatusOr<PipelineConfig> ParseConfig(
    const std::string& json, const std::filesystem::path& base_dir = {});
absl::StatusOr<PipelineConfig> LoadConfig(const std::filesystem::path& path);
std::string ConfigToJson(const PipelineConfig& config);

absl::StatusOr<OverlapRule> ParseOverlapRule(const std::string& text);
absl::StatusOr<PlanMode> ParsePlanMode(const std::string& text);

enum class Stage : uint8_t {
  kSegment,
  kExtract,
  kInfer,
  kMap,
  kVerdict,
  kCalibrate,
  kEvaluate,
  kPipeline,
};

absl::StatusOr<Stage> ParseStage(const std::string& name);
const char* StageName(Stage stage);

/// Checks that the inputs a stage needs exist: slides, annotations in
/// annotated mode, model files, truth records for calibration, and the
/// artifacts of earlier stages.
absl::Status CheckStageInputs(const PipelineConfig& config, Stage stage);

/// Stable identifier of the slide at `path` (pyramid id or file stem).
absl::StatusOr<std::string> SlideIdForPath(const std::string& path);

struct OutputPaths {
  std::filesystem::path root;

  std::filesystem::path Segment(const std::string& id) const;
  std::filesystem::path Plan(const std::string& id) const;
  std::filesystem::path Dataset() const;
  std::filesystem::path Infer(const std::string& id) const;
  std::filesystem::path MapJson(const std::string& id) const;
  std::filesystem::path MapPng(const std::string& id) const;
  std::filesystem::path MapComposite(const std::string& id) const;
  std::filesystem::path Verdict(const std::string& id) const;
  std::filesystem::path Thresholds() const;
  std::filesystem::path MetricsJson() const;
  std::filesystem::path MetricsCsv() const;
  std::filesystem::path Timing() const;
};

absl::Status RunSegment(const PipelineConfig& config);
absl::Status RunExtract(const PipelineConfig& config);
absl::Status RunInfer(const PipelineConfig& config);
absl::Status RunMap(const PipelineConfig& config);
absl::StatusOr<std::vector<SlideVerdict>> RunVerdict(const PipelineConfig& config);
absl::StatusOr<CalibrationResult> RunCalibrate(const PipelineConfig& config);
absl::StatusOr<MetricsReport> RunEvaluate(const PipelineConfig& config);

struct PipelineResult {
  std::vector<SlideVerdict> verdicts;
  std::vector<double> slide_seconds;
  double total_seconds = 0.0;
  bool over_budget = false;
};

absl::StatusOr<PipelineResult> RunPipeline(const PipelineConfig& config);

/// Dispatches one stage; `pipeline` is RunPipeline.
absl::Status RunStage(const PipelineConfig& config, Stage stage);

struct SynthRunOptions {
  int count = 4;
  RandomSpecOptions spec;
  uint64_t seed = 0;
  std::string out = "synth";
  int workers = 1;
  /// Alternate Melanoma and BenignNevus truths starting with Melanoma.
  bool mixed = true;
};

/// Writes `count` random slides plus a config.json listing slides,
/// annotations and truths.
absl::StatusOr<std::vector<SynthOutputs>> RunSynth(const SynthRunOptions& options);

}  // namespace melanoscope

#endif  // MELANOSCOPE_PIPELINE_H_
