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

#include <algorithm>
#include <chrono>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/dataset.h"
#include "melanoscope/parallel.h"
#include "melanoscope/png_io.h"
#include "melanoscope/slide.h"
#include "melanoscope/status_macros.h"
#include "spdlog/spdlog.h"

namespace melanoscope {
namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

PlanOptions PlanOptionsFor(const PipelineConfig& c) {
  PlanOptions o;
  o.patch_size = c.patch_size;
  o.overlap_min = c.overlap_min;
  o.target_mag = c.magnification;
  o.rule = c.overlap_rule;
  o.mode = c.plan_mode;
  return o;
}

absl::StatusOr<NormalizationStats> ResolveStats(const PipelineConfig& c) {
  if (c.stats) return *c.stats;
  if (c.stats_manifest) return LoadManifestStats(*c.stats_manifest);
  return ImageNetStats();
}

std::string ModelName(const PipelineConfig& c) {
  if (c.backend == BackendKind::kNeural && c.model) {
    return std::filesystem::path(*c.model).stem().string();
  }
  return absl::StrCat(BackendKindName(c.backend), "-", ArityName(c.arity));
}

// Opened slides and lazily created backend shared by the stages of a run.
class RunContext {
 public:
  static absl::StatusOr<RunContext> Create(const PipelineConfig& config) {
    MELANOSCOPE_RETURN_IF_ERROR(ValidateConfig(config));
    RunContext ctx(config);
    for (const std::string& path : config.slides) {
      MELANOSCOPE_ASSIGN_OR_RETURN(Slide slide, Slide::Open(path));
      ctx.slides_.push_back(std::move(slide));
    }
    return ctx;
  }

  const PipelineConfig& config() const { return config_; }
  const OutputPaths& out() const { return out_; }
  size_t slide_count() const { return slides_.size(); }
  const Slide& slide(size_t i) const { return slides_[i]; }
  const std::string& id(size_t i) const { return slides_[i].id(); }

  absl::StatusOr<const Backend*> backend() {
    if (!backend_) {
      BackendDescriptor d;
      d.kind = config_.backend;
      d.arity = config_.arity;
      MELANOSCOPE_ASSIGN_OR_RETURN(d.stats, ResolveStats(config_));
      d.stats_id = config_.stats ? "inline"
                   : config_.stats_manifest ? *config_.stats_manifest
                                            : "imagenet";
      std::optional<std::filesystem::path> model;
      if (config_.model) model = *config_.model;
      MELANOSCOPE_ASSIGN_OR_RETURN(backend_, LoadBackend(d, model));
    }
    return backend_.get();
  }

  absl::StatusOr<PlanArtifact> LoadPlan(size_t i) const {
    MELANOSCOPE_ASSIGN_OR_RETURN(std::string text,
                                 ReadTextFile(out_.Plan(id(i))));
    MELANOSCOPE_ASSIGN_OR_RETURN(PlanArtifact plan, PlanFromJson(text));
    if (plan.slide_id != id(i)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "plan ", out_.Plan(id(i)).string(), " belongs to slide ",
          plan.slide_id));
    }
    return plan;
  }

  absl::StatusOr<std::vector<InferRow>> LoadInfer(size_t i,
                                                  const PlanArtifact& plan) const {
    MELANOSCOPE_ASSIGN_OR_RETURN(std::string text,
                                 ReadTextFile(out_.Infer(id(i))));
    MELANOSCOPE_ASSIGN_OR_RETURN(auto rows, ParseInferJsonl(text));
    MELANOSCOPE_RETURN_IF_ERROR(MatchInferToPlan(plan, rows));
    return rows;
  }

 private:
  explicit RunContext(const PipelineConfig& config)
      : config_(config), out_{config.out} {}

  PipelineConfig config_;
  OutputPaths out_;
  std::vector<Slide> slides_;
  std::unique_ptr<Backend> backend_;
};

absl::Status SegmentSlide(const RunContext& ctx, size_t i) {
  const Slide& slide = ctx.slide(i);
  MELANOSCOPE_ASSIGN_OR_RETURN(
      PlanGeometry g,
      ResolvePlanGeometry(slide.metadata(), PlanOptionsFor(ctx.config())));
  MELANOSCOPE_ASSIGN_OR_RETURN(auto reader,
                               PngRowReader::Open(slide.LevelPath(g.level)));
  const auto path = ctx.out().Segment(ctx.id(i));
  std::filesystem::create_directories(path.parent_path());
  MELANOSCOPE_ASSIGN_OR_RETURN(
      auto writer, PngRowWriter::Create(path, g.level_width, g.level_height, 1));
  std::vector<uint8_t> rgb(static_cast<size_t>(g.level_width * 3));
  std::vector<uint8_t> mask(static_cast<size_t>(g.level_width));
  for (int64_t y = 0; y < g.level_height; ++y) {
    MELANOSCOPE_RETURN_IF_ERROR(reader->ReadRow(rgb));
    ForegroundRow(rgb, mask, ctx.config().foreground);
    for (uint8_t& v : mask) v = v ? 255 : 0;
    MELANOSCOPE_RETURN_IF_ERROR(writer->WriteRow(mask));
  }
  return writer->Finish();
}

absl::Status ExtractSlide(const RunContext& ctx, size_t i,
                          DatasetWriter* dataset) {
  const PipelineConfig& c = ctx.config();
  const Slide& slide = ctx.slide(i);
  const std::pair<int64_t, int64_t> bounds{slide.base_width(),
                                           slide.base_height()};
  AnnotationSet annotations;
  if (!c.annotations.empty()) {
    MELANOSCOPE_ASSIGN_OR_RETURN(annotations,
                                 LoadAnnotations(c.annotations[i], bounds));
  }
  const PlanOptions options = PlanOptionsFor(c);
  PlanArtifact plan;
  plan.slide_id = ctx.id(i);
  plan.slide_path = c.slides[i];
  plan.options = options;
  MELANOSCOPE_ASSIGN_OR_RETURN(plan.geometry,
                               ResolvePlanGeometry(slide.metadata(), options));
  MELANOSCOPE_ASSIGN_OR_RETURN(
      plan.records,
      PlanPatchesStreaming(slide, annotations, options, c.foreground));
  spdlog::info("{}: planned {} patches at level {} ({}px cells)", plan.slide_id,
               plan.records.size(), plan.geometry.level, plan.geometry.cell_px);
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteTextFile(ctx.out().Plan(plan.slide_id), PlanToJson(plan)));
  if (dataset != nullptr) {
    MELANOSCOPE_RETURN_IF_ERROR(dataset->AddSlide(slide, plan.records));
  }
  return absl::OkStatus();
}

absl::Status FinishDataset(DatasetWriter* dataset) {
  auto manifest = dataset->Finish();
  if (manifest.ok()) {
    spdlog::info("dataset: {} patches, {} augmented", manifest->entries.size(),
                 manifest->augmented.size());
    return absl::OkStatus();
  }
  if (absl::IsFailedPrecondition(manifest.status())) {
    spdlog::warn("dataset export skipped: {}", std::string(manifest.status().message()));
    return absl::OkStatus();
  }
  return manifest.status();
}

std::optional<DatasetWriter> MakeDatasetWriter(const RunContext& ctx) {
  const PipelineConfig& c = ctx.config();
  if (!c.export_dataset) return std::nullopt;
  DatasetOptions o;
  o.root = ctx.out().Dataset();
  o.patch_size = c.patch_size;
  o.augment_underrepresented = c.augment_underrepresented;
  o.seed = c.seed;
  return DatasetWriter(o);
}

absl::Status InferSlide(RunContext& ctx, size_t i) {
  const PipelineConfig& c = ctx.config();
  MELANOSCOPE_ASSIGN_OR_RETURN(const Backend* backend, ctx.backend());
  MELANOSCOPE_ASSIGN_OR_RETURN(PlanArtifact plan, ctx.LoadPlan(i));
  const NormalizationStats& stats = backend->descriptor().stats;

  std::string jsonl;
  std::vector<RgbTile> tiles;
  size_t first_index = 0;
  auto flush = [&]() -> absl::Status {
    if (tiles.empty()) return absl::OkStatus();
    std::vector<TensorPatch> tensors(tiles.size());
    MELANOSCOPE_RETURN_IF_ERROR(ParallelFor(tiles.size(), c.workers, [&](size_t k) {
      auto t = NormalizePatch(tiles[k], stats);
      if (!t.ok()) return t.status();
      tensors[k] = std::move(*t);
      return absl::OkStatus();
    }));
    MELANOSCOPE_ASSIGN_OR_RETURN(auto probs,
                                 Predict(*backend, tensors, c.workers));
    for (size_t k = 0; k < probs.size(); ++k) {
      const PatchRecord& r = plan.records[first_index + k];
      InferRow row{first_index + k, r.x, r.y, r.level, std::move(probs[k])};
      jsonl += InferRowToJsonLine(row);
    }
    first_index += tiles.size();
    tiles.clear();
    return absl::OkStatus();
  };
  MELANOSCOPE_RETURN_IF_ERROR(ExtractPatches(
      ctx.slide(i), plan.records, [&](size_t, RgbTile tile) {
        tiles.push_back(std::move(tile));
        if (static_cast<int64_t>(tiles.size()) >= c.batch_size) return flush();
        return absl::OkStatus();
      }));
  MELANOSCOPE_RETURN_IF_ERROR(flush());
  return WriteTextFile(ctx.out().Infer(ctx.id(i)), jsonl);
}

// Nearest-neighbour thumbnail of the smallest level, `height` rows tall.
// Streams the level so memory stays at one source row plus the output.
absl::StatusOr<RgbTile> Thumbnail(const Slide& slide, int64_t height) {
  const int top = slide.level_count() - 1;
  const LevelInfo& info = slide.level(top);
  height = std::max<int64_t>(1, height);
  const int64_t width = std::max<int64_t>(
      1, std::llround(static_cast<double>(info.width) * height /
                      static_cast<double>(info.height)));
  MELANOSCOPE_ASSIGN_OR_RETURN(auto reader,
                               PngRowReader::Open(slide.LevelPath(top)));
  RgbTile thumb(width, height);
  std::vector<uint8_t> row(static_cast<size_t>(info.width * 3));
  for (int64_t oy = 0; oy < height; ++oy) {
    const int64_t sy = std::min(info.height - 1, (2 * oy + 1) * info.height /
                                                     (2 * height));
    // When upscaling, consecutive output rows reuse the row already read.
    if (reader->next_row() <= sy) {
      MELANOSCOPE_RETURN_IF_ERROR(reader->SkipTo(sy, row));
      MELANOSCOPE_RETURN_IF_ERROR(reader->ReadRow(row));
    }
    for (int64_t ox = 0; ox < width; ++ox) {
      const int64_t sx = std::min(info.width - 1,
                                  (2 * ox + 1) * info.width / (2 * width));
      const uint8_t* p = &row[static_cast<size_t>(sx * 3)];
      thumb.Set(ox, oy, Rgb{p[0], p[1], p[2]});
    }
  }
  return thumb;
}

absl::Status MapSlide(const RunContext& ctx, size_t i) {
  const PipelineConfig& c = ctx.config();
  MELANOSCOPE_ASSIGN_OR_RETURN(PlanArtifact plan, ctx.LoadPlan(i));
  MELANOSCOPE_ASSIGN_OR_RETURN(auto rows, ctx.LoadInfer(i, plan));
  std::vector<ProbabilityVector> probs;
  probs.reserve(rows.size());
  for (InferRow& r : rows) probs.push_back(std::move(r.probs));
  MELANOSCOPE_ASSIGN_OR_RETURN(auto classes,
                               AssignClasses(probs, c.thresholds.t_p));
  MELANOSCOPE_ASSIGN_OR_RETURN(
      LocalizationMap map,
      BuildMap(plan.records, classes,
               MapGeometryFromPlan(plan.slide_id, plan.geometry)));
  const std::string& id = ctx.id(i);
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteTextFile(ctx.out().MapJson(id), LocalizationMapToJson(map)));
  MELANOSCOPE_ASSIGN_OR_RETURN(RgbTile image, RenderMap(map, c.map_render_scale));
  MELANOSCOPE_RETURN_IF_ERROR(WritePng(ctx.out().MapPng(id), image));

  MELANOSCOPE_ASSIGN_OR_RETURN(RgbTile thumb,
                               Thumbnail(ctx.slide(i), image.height));
  return WritePng(ctx.out().MapComposite(id), SideBySide(thumb, image, 8));
}

absl::StatusOr<SlideVerdict> VerdictSlide(const RunContext& ctx, size_t i) {
  const std::string& id = ctx.id(i);
  MELANOSCOPE_ASSIGN_OR_RETURN(std::string text,
                               ReadTextFile(ctx.out().MapJson(id)));
  MELANOSCOPE_ASSIGN_OR_RETURN(LocalizationMap map, LocalizationMapFromJson(text));
  SlideVerdict v = MakeSlideVerdict(map, ctx.config().thresholds);
  if (v.no_lesion_flag) {
    spdlog::warn("{}: no malignant or benign cells; reporting BenignNevus", id);
  }
  spdlog::info("{}: rho={:.4f} verdict={}", id, v.rho, VerdictName(v.verdict));
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteTextFile(ctx.out().Verdict(id), SlideVerdictToJson(v)));
  return v;
}

absl::StatusOr<Verdict> LoadTruthVerdict(const std::string& path) {
  MELANOSCOPE_ASSIGN_OR_RETURN(SynthTruth truth, LoadSynthTruth(path));
  return truth.verdict;
}

}  // namespace

absl::Status RunSegment(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_RETURN_IF_ERROR(SegmentSlide(ctx, i));
  }
  return absl::OkStatus();
}

absl::Status RunExtract(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  std::optional<DatasetWriter> dataset = MakeDatasetWriter(ctx);
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_RETURN_IF_ERROR(
        ExtractSlide(ctx, i, dataset ? &*dataset : nullptr));
  }
  if (dataset) MELANOSCOPE_RETURN_IF_ERROR(FinishDataset(&*dataset));
  return absl::OkStatus();
}

absl::Status RunInfer(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_RETURN_IF_ERROR(InferSlide(ctx, i));
  }
  return absl::OkStatus();
}

absl::Status RunMap(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_RETURN_IF_ERROR(MapSlide(ctx, i));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<SlideVerdict>> RunVerdict(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  std::vector<SlideVerdict> verdicts;
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_ASSIGN_OR_RETURN(SlideVerdict v, VerdictSlide(ctx, i));
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

absl::StatusOr<CalibrationResult> RunCalibrate(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  if (config.truths.size() != ctx.slide_count()) {
    return absl::InvalidArgumentError("calibration needs one truth file per slide");
  }
  std::vector<CalibrationSlide> slides;
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_ASSIGN_OR_RETURN(PlanArtifact plan, ctx.LoadPlan(i));
    MELANOSCOPE_ASSIGN_OR_RETURN(auto rows, ctx.LoadInfer(i, plan));
    CalibrationSlide s;
    s.geometry = MapGeometryFromPlan(plan.slide_id, plan.geometry);
    s.records = std::move(plan.records);
    for (InferRow& r : rows) s.probs.push_back(std::move(r.probs));
    MELANOSCOPE_ASSIGN_OR_RETURN(s.truth, LoadTruthVerdict(config.truths[i]));
    slides.push_back(std::move(s));
  }
  const auto tp_grid = DefaultProbabilityGrid();
  const auto tr_grid = DefaultRatioGrid();
  MELANOSCOPE_ASSIGN_OR_RETURN(CalibrationResult result,
                               Calibrate(slides, tp_grid, tr_grid, config.workers));
  Json j;
  j["t_p"] = result.thresholds.t_p;
  j["t_r"] = result.thresholds.t_r;
  j["sensitivity"] = result.sensitivity;
  j["specificity"] = result.specificity;
  j["single_class"] = result.single_class;
  j["slides"] = slides.size();
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteTextFile(ctx.out().Thresholds(), j.dump(2) + "\n"));
  spdlog::info("calibrated t_p={} t_r={} (sensitivity {}, specificity {})",
               result.thresholds.t_p, result.thresholds.t_r, result.sensitivity,
               result.specificity);
  return result;
}

absl::StatusOr<MetricsReport> RunEvaluate(const PipelineConfig& config) {
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  ConfusionMatrix cm(config.arity);
  int64_t skipped = 0;
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    MELANOSCOPE_ASSIGN_OR_RETURN(PlanArtifact plan, ctx.LoadPlan(i));
    MELANOSCOPE_ASSIGN_OR_RETURN(auto rows, ctx.LoadInfer(i, plan));
    std::vector<PatchClass> preds;
    std::vector<Label> truths;
    for (size_t k = 0; k < rows.size(); ++k) {
      const auto& label = plan.records[k].ground_label;
      if (!label) continue;
      if (static_cast<int>(*label) >= ArityWidth(config.arity)) {
        ++skipped;
        continue;
      }
      MELANOSCOPE_RETURN_IF_ERROR(ValidateProbabilityVector(rows[k].probs));
      if (config.evaluate_after_threshold) {
        MELANOSCOPE_ASSIGN_OR_RETURN(
            PatchClass p, AssignClass(rows[k].probs, config.thresholds.t_p));
        preds.push_back(p);
      } else {
        preds.push_back(static_cast<PatchClass>(ArgMax(rows[k].probs)));
      }
      truths.push_back(*label);
    }
    MELANOSCOPE_ASSIGN_OR_RETURN(ConfusionMatrix part,
                                 Confusion(preds, truths, config.arity));
    MELANOSCOPE_RETURN_IF_ERROR(cm.Merge(part));
  }
  if (skipped > 0) {
    spdlog::info("evaluate: skipped {} patches whose label is outside {} classes",
                 skipped, ArityName(config.arity));
  }
  MELANOSCOPE_ASSIGN_OR_RETURN(MetricsReport patch, Metrics(cm));
  const std::string model = ModelName(config);
  Json report;
  report["patch"] = Json::parse(MetricsReportToJson(model, patch, &cm));
  std::string csv = MetricsCsvHeader() + MetricsCsvRow(model + "/patch", patch);

  // Slide-level metrics when truths and verdicts are both available.
  if (!config.truths.empty()) {
    std::vector<Verdict> predicted, truth;
    bool complete = true;
    for (size_t i = 0; i < ctx.slide_count() && complete; ++i) {
      auto text = ReadTextFile(ctx.out().Verdict(ctx.id(i)));
      if (!text.ok()) {
        complete = false;
        break;
      }
      MELANOSCOPE_ASSIGN_OR_RETURN(SlideVerdict v, SlideVerdictFromJson(*text));
      predicted.push_back(v.verdict);
      MELANOSCOPE_ASSIGN_OR_RETURN(Verdict t, LoadTruthVerdict(config.truths[i]));
      truth.push_back(t);
    }
    if (complete) {
      MELANOSCOPE_ASSIGN_OR_RETURN(BinaryCounts counts,
                                   SlideCounts(predicted, truth));
      MELANOSCOPE_ASSIGN_OR_RETURN(MetricsReport slide, Metrics(counts));
      report["slide"] = Json::parse(MetricsReportToJson(model, slide));
      csv += MetricsCsvRow(model + "/slide", slide);
    } else {
      spdlog::info("evaluate: verdicts missing, skipping slide-level metrics");
    }
  }
  report["evaluated_after_threshold"] = config.evaluate_after_threshold;
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteTextFile(ctx.out().MetricsJson(), report.dump(2) + "\n"));
  MELANOSCOPE_RETURN_IF_ERROR(WriteTextFile(ctx.out().MetricsCsv(), csv));
  return patch;
}

absl::StatusOr<PipelineResult> RunPipeline(const PipelineConfig& config) {
  const auto run_start = Clock::now();
  MELANOSCOPE_ASSIGN_OR_RETURN(RunContext ctx, RunContext::Create(config));
  std::optional<DatasetWriter> dataset = MakeDatasetWriter(ctx);
  PipelineResult result;
  Json timing_slides = Json::array();
  for (size_t i = 0; i < ctx.slide_count(); ++i) {
    const auto slide_start = Clock::now();
    Json stages;
    auto t = Clock::now();
    MELANOSCOPE_RETURN_IF_ERROR(
        ExtractSlide(ctx, i, dataset ? &*dataset : nullptr));
    stages["extract"] = SecondsSince(t);
    t = Clock::now();
    MELANOSCOPE_RETURN_IF_ERROR(InferSlide(ctx, i));
    stages["infer"] = SecondsSince(t);
    t = Clock::now();
    MELANOSCOPE_RETURN_IF_ERROR(MapSlide(ctx, i));
    stages["map"] = SecondsSince(t);
    t = Clock::now();
    MELANOSCOPE_ASSIGN_OR_RETURN(SlideVerdict v, VerdictSlide(ctx, i));
    stages["verdict"] = SecondsSince(t);
    const double seconds = SecondsSince(slide_start);
    if (seconds > config.time_budget_s) {
      result.over_budget = true;
      spdlog::warn("{}: took {:.1f} s, over the {:.0f} s budget", ctx.id(i),
                   seconds, config.time_budget_s);
    }
    result.verdicts.push_back(std::move(v));
    result.slide_seconds.push_back(seconds);
    timing_slides.push_back(
        {{"slide_id", ctx.id(i)}, {"seconds", seconds}, {"stages", stages}});
  }
  if (dataset) MELANOSCOPE_RETURN_IF_ERROR(FinishDataset(&*dataset));
  result.total_seconds = SecondsSince(run_start);
  Json timing;
  timing["slides"] = std::move(timing_slides);
  timing["total_seconds"] = result.total_seconds;
  timing["time_budget_s"] = config.time_budget_s;
  timing["over_budget"] = result.over_budget;
  MELANOSCOPE_RETURN_IF_ERROR(
      WriteTextFile(ctx.out().Timing(), timing.dump(2) + "\n"));
  return result;
}

absl::Status RunStage(const PipelineConfig& config, Stage stage) {
  switch (stage) {
    case Stage::kSegment: return RunSegment(config);
    case Stage::kExtract: return RunExtract(config);
    case Stage::kInfer: return RunInfer(config);
    case Stage::kMap: return RunMap(config);
    case Stage::kVerdict: return RunVerdict(config).status();
    case Stage::kCalibrate: return RunCalibrate(config).status();
    case Stage::kEvaluate: return RunEvaluate(config).status();
    case Stage::kPipeline: return RunPipeline(config).status();
  }
  return absl::InvalidArgumentError("unknown stage");
}

absl::StatusOr<std::vector<SynthOutputs>> RunSynth(const SynthRunOptions& o) {
  if (o.count < 1 || o.count > 10000) {
    return absl::InvalidArgumentError(
        absl::StrCat("count must be in [1, 10000], got ", o.count));
  }
  if (o.workers < 1 || o.workers > 256) {
    return absl::InvalidArgumentError(
        absl::StrCat("workers must be in [1, 256], got ", o.workers));
  }
  std::vector<SynthSpec> specs;
  for (int k = 0; k < o.count; ++k) {
    const Verdict target = (!o.mixed || k % 2 == 0) ? Verdict::kMelanoma
                                                    : Verdict::kBenignNevus;
    MELANOSCOPE_ASSIGN_OR_RETURN(
        SynthSpec spec,
        RandomSynthSpec(absl::StrCat("synth_", k), o.seed * 7919u + k, target,
                        o.spec));
    specs.push_back(std::move(spec));
  }
  const std::filesystem::path root(o.out);
  MELANOSCOPE_ASSIGN_OR_RETURN(auto outs, GenerateSlides(specs, root, o.workers));
  Json cfg;
  Json slides = Json::array(), annotations = Json::array(), truths = Json::array();
  for (const SynthOutputs& s : outs) {
    slides.push_back(s.slide_dir.filename().string());
    annotations.push_back(s.annotations.filename().string());
    truths.push_back(s.truth.filename().string());
  }
  cfg["slides"] = std::move(slides);
  cfg["annotations"] = std::move(annotations);
  cfg["truths"] = std::move(truths);
  MELANOSCOPE_RETURN_IF_ERROR(WriteTextFile(root / "config.json", cfg.dump(2) + "\n"));
  for (size_t k = 0; k < specs.size(); ++k) {
    MELANOSCOPE_RETURN_IF_ERROR(WriteTextFile(
        root / (specs[k].slide_id + ".spec.json"), SynthSpecToJson(specs[k])));
  }
  return outs;
}

}  // namespace melanoscope
