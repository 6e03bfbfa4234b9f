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

// melanoscope: command-line driver for the slide pipeline.
//
//   melanoscope pipeline --config run.json --workers 4
//   melanoscope synth --count 8 --out synth && \
//     melanoscope pipeline --config synth/config.json
//
// Exit status: 0 on success, 1 on invalid flags/config/missing inputs,
// 2 when a stage fails at run time.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "melanoscope/logging.h"
#include "melanoscope/pipeline.h"

namespace {

using melanoscope::PipelineConfig;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

// Flag values. Only flags given on the command line override the config.
struct Overrides {
  std::string config;
  double magnification = 0;
  double t_p = 0;
  double t_r = 0;
  std::string backend;
  std::string model;
  std::string arity;
  std::string plan_mode;
  std::string stats_manifest;
  int workers = 0;
  int64_t batch_size = 0;
  uint64_t seed = 0;
  std::string out;
  double time_budget = 0;
  std::vector<std::string> slides;
  std::vector<std::string> annotations;
  std::vector<std::string> truths;
  bool after_threshold = false;
  bool no_dataset = false;
};

void AddStageFlags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file");
  app->add_option("--magnification", o.magnification, "Target magnification");
  app->add_option("--t-p", o.t_p, "Probability threshold for the Unseen class");
  app->add_option("--t-r", o.t_r, "Malignancy ratio threshold");
  app->add_option("--backend", o.backend, "mock or neural");
  app->add_option("--model", o.model, "ONNX model for the neural backend");
  app->add_option("--arity", o.arity, "binary or multiclass");
  app->add_option("--plan-mode", o.plan_mode, "annotated or tissue");
  app->add_option("--stats-manifest", o.stats_manifest,
                  "Dataset manifest holding normalization stats");
  app->add_option("--workers", o.workers, "Worker threads");
  app->add_option("--batch-size", o.batch_size, "Patches per inference batch");
  app->add_option("--seed", o.seed, "Seed for augmentation");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--time-budget", o.time_budget,
                  "Per-slide seconds before a budget warning");
  app->add_option("--slide", o.slides, "Slide path (repeatable)");
  app->add_option("--annotation", o.annotations,
                  "GeoJSON annotation per slide (repeatable)");
  app->add_option("--truth", o.truths, "Truth record per slide (repeatable)");
  app->add_flag("--after-threshold", o.after_threshold,
                "Evaluate classes after the Unseen threshold");
  app->add_flag("--no-dataset", o.no_dataset, "Skip the labeled patch export");
}

bool Given(const CLI::App* app, const std::string& name) {
  return app->count(name) > 0;
}

// Loads the config named by --config (or defaults) and applies overrides.
// Returns false with a message printed on invalid input.
bool BuildConfig(const CLI::App* app, const Overrides& o, PipelineConfig* c) {
  if (!o.config.empty()) {
    auto loaded = melanoscope::LoadConfig(o.config);
    if (!loaded.ok()) {
      std::fprintf(stderr, "error: %s\n",
                   std::string(loaded.status().message()).c_str());
      return false;
    }
    *c = *std::move(loaded);
  }
  if (Given(app, "--magnification")) c->magnification = o.magnification;
  if (Given(app, "--t-p")) c->thresholds.t_p = o.t_p;
  if (Given(app, "--t-r")) c->thresholds.t_r = o.t_r;
  if (Given(app, "--model")) c->model = o.model;
  if (Given(app, "--stats-manifest")) c->stats_manifest = o.stats_manifest;
  if (Given(app, "--workers")) c->workers = o.workers;
  if (Given(app, "--batch-size")) c->batch_size = o.batch_size;
  if (Given(app, "--seed")) c->seed = o.seed;
  if (Given(app, "--out")) c->out = o.out;
  if (Given(app, "--time-budget")) c->time_budget_s = o.time_budget;
  if (Given(app, "--slide")) c->slides = o.slides;
  if (Given(app, "--annotation")) c->annotations = o.annotations;
  if (Given(app, "--truth")) c->truths = o.truths;
  if (o.after_threshold) c->evaluate_after_threshold = true;
  if (o.no_dataset) c->export_dataset = false;

  absl::Status st;
  if (Given(app, "--backend")) {
    auto kind = melanoscope::ParseBackendKind(o.backend);
    if (kind.ok()) c->backend = *kind; else st = kind.status();
  }
  if (st.ok() && Given(app, "--arity")) {
    auto arity = melanoscope::ParseArity(o.arity);
    if (arity.ok()) c->arity = *arity; else st = arity.status();
  }
  if (st.ok() && Given(app, "--plan-mode")) {
    auto mode = melanoscope::ParsePlanMode(o.plan_mode);
    if (mode.ok()) c->plan_mode = *mode; else st = mode.status();
  }
  if (st.ok()) st = melanoscope::ValidateConfig(*c);
  if (!st.ok()) {
    std::fprintf(stderr, "error: %s\n", std::string(st.message()).c_str());
    return false;
  }
  return true;
}

void PrintVerdicts(const std::vector<melanoscope::SlideVerdict>& verdicts) {
  std::printf("%-24s %8s %8s %8s  %s\n", "slide", "M", "B", "rho", "verdict");
  for (const auto& v : verdicts) {
    std::printf("%-24s %8lld %8lld %8.4f  %s%s\n", v.slide_id.c_str(),
                static_cast<long long>(v.counts.malignant),
                static_cast<long long>(v.counts.benign), v.rho,
                melanoscope::VerdictName(v.verdict),
                v.no_lesion_flag ? " (no lesion)" : "");
  }
}

int RunStageCommand(const CLI::App* app, melanoscope::Stage stage,
                    const Overrides& o) {
  PipelineConfig config;
  if (!BuildConfig(app, o, &config)) return kExitInvalid;
  if (absl::Status st = melanoscope::CheckStageInputs(config, stage); !st.ok()) {
    std::fprintf(stderr, "error: %s\n", std::string(st.message()).c_str());
    return kExitInvalid;
  }
  absl::Status st;
  switch (stage) {
    case melanoscope::Stage::kVerdict: {
      auto v = melanoscope::RunVerdict(config);
      st = v.status();
      if (v.ok()) PrintVerdicts(*v);
      break;
    }
    case melanoscope::Stage::kPipeline: {
      auto r = melanoscope::RunPipeline(config);
      st = r.status();
      if (r.ok()) {
        PrintVerdicts(r->verdicts);
        std::printf("total %.1f s%s\n", r->total_seconds,
                    r->over_budget ? " (over budget)" : "");
      }
      break;
    }
    case melanoscope::Stage::kCalibrate: {
      auto r = melanoscope::RunCalibrate(config);
      st = r.status();
      if (r.ok()) {
        std::printf("t_p=%.2f t_r=%.2f sensitivity=%.4f specificity=%.4f\n",
                    r->thresholds.t_p, r->thresholds.t_r, r->sensitivity,
                    r->specificity);
      }
      break;
    }
    case melanoscope::Stage::kEvaluate: {
      auto r = melanoscope::RunEvaluate(config);
      st = r.status();
      if (r.ok()) {
        std::fputs(melanoscope::MetricsCsvHeader().c_str(), stdout);
        std::fputs(melanoscope::MetricsCsvRow("patch", *r).c_str(), stdout);
      }
      break;
    }
    default:
      st = melanoscope::RunStage(config, stage);
  }
  if (!st.ok()) {
    std::fprintf(stderr, "error: %s\n", st.ToString().c_str());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (absl::Status st = melanoscope::InitLoggingFromEnv(); !st.ok()) {
    std::fprintf(stderr, "error: %s\n", std::string(st.message()).c_str());
    return kExitInvalid;
  }

  CLI::App app{"Melanoma detection on whole-slide images"};
  app.require_subcommand(1);

  Overrides overrides;
  struct Command {
    const char* name;
    const char* help;
    melanoscope::Stage stage;
  };
  const Command commands[] = {
      {"segment", "Write the foreground mask", melanoscope::Stage::kSegment},
      {"extract", "Plan patches and export the labeled dataset",
       melanoscope::Stage::kExtract},
      {"infer", "Classify planned patches", melanoscope::Stage::kInfer},
      {"map", "Build localization maps", melanoscope::Stage::kMap},
      {"verdict", "Decide slide verdicts", melanoscope::Stage::kVerdict},
      {"calibrate", "Grid-search thresholds against truth records",
       melanoscope::Stage::kCalibrate},
      {"evaluate", "Write patch and slide metrics", melanoscope::Stage::kEvaluate},
      {"pipeline", "Run extract, infer, map and verdict",
       melanoscope::Stage::kPipeline},
  };
  std::vector<std::pair<CLI::App*, melanoscope::Stage>> stage_apps;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    AddStageFlags(sub, overrides);
    stage_apps.emplace_back(sub, c.stage);
  }

  melanoscope::SynthRunOptions synth;
  std::string synth_verdicts = "mixed";
  CLI::App* synth_app = app.add_subcommand("synth", "Generate synthetic slides");
  synth_app->add_option("--count", synth.count, "Number of slides");
  synth_app->add_option("--width", synth.spec.width, "Level-0 width");
  synth_app->add_option("--height", synth.spec.height, "Level-0 height");
  synth_app->add_option("--levels", synth.spec.level_count, "Pyramid levels");
  synth_app->add_option("--min-radius", synth.spec.min_radius,
                        "Smallest blob radius, level-0 pixels");
  synth_app->add_option("--max-radius", synth.spec.max_radius,
                        "Largest blob radius, level-0 pixels");
  synth_app->add_option("--seed", synth.seed, "Generation seed");
  synth_app->add_option("--out", synth.out, "Output directory");
  synth_app->add_option("--workers", synth.workers, "Slides generated in parallel");
  synth_app->add_option("--verdicts", synth_verdicts, "mixed or melanoma")
      ->check(CLI::IsMember({"mixed", "melanoma"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (*synth_app) {
    synth.mixed = synth_verdicts == "mixed";
    // Without explicit radii, blobs scale with the slide's shorter side.
    if (!Given(synth_app, "--min-radius") && !Given(synth_app, "--max-radius")) {
      const melanoscope::RandomSpecOptions defaults;
      const double scale =
          static_cast<double>(std::min(synth.spec.width, synth.spec.height)) /
          static_cast<double>(std::min(defaults.width, defaults.height));
      synth.spec.min_radius = defaults.min_radius * scale;
      synth.spec.max_radius = defaults.max_radius * scale;
    }
    auto outs = melanoscope::RunSynth(synth);
    if (!outs.ok()) {
      std::fprintf(stderr, "error: %s\n", outs.status().ToString().c_str());
      return absl::IsInvalidArgument(outs.status()) ? kExitInvalid : kExitRuntime;
    }
    for (const auto& o : *outs) {
      std::printf("%s %s\n", o.slide_dir.string().c_str(),
                  melanoscope::VerdictName(o.truth_record.verdict));
    }
    return kExitOk;
  }
  for (const auto& [sub, stage] : stage_apps) {
    if (*sub) return RunStageCommand(sub, stage, overrides);
  }
  return kExitInvalid;
}
