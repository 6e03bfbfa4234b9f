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

#include <set>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/pipeline.h"
#include "melanoscope/slide.h"
#include "melanoscope/status_macros.h"

namespace melanoscope {
namespace {

using Json = nlohmann::ordered_json;

absl::Status RangeError(const std::string& field, const std::string& range,
                        double value) {
  return absl::InvalidArgumentError(
      absl::StrCat(field, " must be in ", range, ", got ", value));
}

std::string Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  if (base.empty() || path.is_absolute()) return p;
  return (base / path).lexically_normal().string();
}

absl::Status CheckKeys(const Json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown config key \"", where, key, "\""));
    }
  }
  return absl::OkStatus();
}

absl::Status RequireExists(const std::string& what, const std::string& path) {
  if (!std::filesystem::exists(path)) {
    return absl::NotFoundError(absl::StrCat("missing ", what, ": ", path));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<OverlapRule> ParseOverlapRule(const std::string& text) {
  if (text == "conjunction") return OverlapRule::kConjunction;
  if (text == "independent") return OverlapRule::kIndependent;
  return absl::InvalidArgumentError(absl::StrCat(
      "overlap_rule must be conjunction|independent, got \"", text, "\""));
}

absl::StatusOr<PlanMode> ParsePlanMode(const std::string& text) {
  if (text == "annotated") return PlanMode::kAnnotated;
  if (text == "tissue") return PlanMode::kTissue;
  return absl::InvalidArgumentError(absl::StrCat(
      "plan_mode must be annotated|tissue, got \"", text, "\""));
}

absl::Status ValidateConfig(const PipelineConfig& c) {
  if (c.slides.empty()) {
    return absl::InvalidArgumentError("config lists no slides");
  }
  if (!c.annotations.empty() && c.annotations.size() != c.slides.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "annotations must be empty or one per slide (", c.slides.size(),
        "), got ", c.annotations.size()));
  }
  if (!c.truths.empty() && c.truths.size() != c.slides.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "truths must be empty or one per slide (", c.slides.size(), "), got ",
        c.truths.size()));
  }
  if (!(c.magnification > 0.0 && c.magnification <= 200.0)) {
    return RangeError("magnification", "(0, 200]", c.magnification);
  }
  if (c.patch_size < 16 || c.patch_size > 4096) {
    return RangeError("patch_size", "[16, 4096]",
                      static_cast<double>(c.patch_size));
  }
  if (!(c.overlap_min > 0.0 && c.overlap_min <= 1.0)) {
    return RangeError("overlap_min", "(0, 1]", c.overlap_min);
  }
  MELANOSCOPE_RETURN_IF_ERROR(ValidateForegroundOptions(c.foreground));
  if (c.backend == BackendKind::kNeural && !c.model) {
    return absl::InvalidArgumentError("the neural backend requires a model path");
  }
  if (c.stats) MELANOSCOPE_RETURN_IF_ERROR(ValidateStats(*c.stats));
  if (c.stats && c.stats_manifest) {
    return absl::InvalidArgumentError(
        "give either inline stats or a stats manifest, not both");
  }
  if (!(c.thresholds.t_p > 0.0 && c.thresholds.t_p <= 1.0)) {
    return RangeError("t_p", "(0, 1]", c.thresholds.t_p);
  }
  if (!(c.thresholds.t_r >= 0.0 && c.thresholds.t_r <= 1.0)) {
    return RangeError("t_r", "[0, 1]", c.thresholds.t_r);
  }
  if (c.batch_size < 1 || c.batch_size > 65536) {
    return RangeError("batch_size", "[1, 65536]",
                      static_cast<double>(c.batch_size));
  }
  if (c.workers < 1 || c.workers > 256) {
    return RangeError("workers", "[1, 256]", c.workers);
  }
  if (!(c.time_budget_s > 0.0)) {
    return RangeError("time_budget_s", "(0, inf)", c.time_budget_s);
  }
  if (c.map_render_scale < 1 || c.map_render_scale > 64) {
    return RangeError("map_render_scale", "[1, 64]", c.map_render_scale);
  }
  if (c.out.empty()) {
    return absl::InvalidArgumentError("out must name a directory");
  }
  return absl::OkStatus();
}

absl::StatusOr<PipelineConfig> ParseConfig(const std::string& text,
                                           const std::filesystem::path& base) {
  PipelineConfig c;
  try {
    const Json j = Json::parse(text);
    if (!j.is_object()) {
      return absl::InvalidArgumentError("config must be a JSON object");
    }
    MELANOSCOPE_RETURN_IF_ERROR(CheckKeys(
        j,
        {"slides", "annotations", "truths", "magnification", "patch_size",
         "overlap_min", "overlap_rule", "plan_mode", "hue_range", "sat_min",
         "backend", "thresholds", "batch_size", "workers", "out", "seed",
         "time_budget_s", "augment_underrepresented", "export_dataset",
         "evaluate_after_threshold", "map_render_scale"},
        ""));
    auto paths = [&](const char* key) {
      std::vector<std::string> out;
      for (const Json& p : j.value(key, Json::array())) {
        out.push_back(Resolve(base, p.get<std::string>()));
      }
      return out;
    };
    c.slides = paths("slides");
    c.annotations = paths("annotations");
    c.truths = paths("truths");
    c.magnification = j.value("magnification", c.magnification);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.overlap_min = j.value("overlap_min", c.overlap_min);
    if (j.contains("overlap_rule")) {
      MELANOSCOPE_ASSIGN_OR_RETURN(
          c.overlap_rule, ParseOverlapRule(j["overlap_rule"].get<std::string>()));
    }
    if (j.contains("plan_mode")) {
      MELANOSCOPE_ASSIGN_OR_RETURN(
          c.plan_mode, ParsePlanMode(j["plan_mode"].get<std::string>()));
    }
    if (j.contains("hue_range")) {
      const auto range = j["hue_range"].get<std::vector<int>>();
      if (range.size() != 2) {
        return absl::InvalidArgumentError("hue_range must be [lo, hi]");
      }
      c.foreground.hue8_lo = range[0];
      c.foreground.hue8_hi = range[1];
    }
    c.foreground.sat_min = j.value("sat_min", c.foreground.sat_min);
    if (j.contains("backend")) {
      const Json& b = j["backend"];
      MELANOSCOPE_RETURN_IF_ERROR(CheckKeys(
          b, {"kind", "arity", "model", "stats_manifest", "stats"}, "backend."));
      if (b.contains("kind")) {
        MELANOSCOPE_ASSIGN_OR_RETURN(c.backend,
                                     ParseBackendKind(b["kind"].get<std::string>()));
      }
      if (b.contains("arity")) {
        MELANOSCOPE_ASSIGN_OR_RETURN(c.arity,
                                     ParseArity(b["arity"].get<std::string>()));
      }
      if (b.contains("model") && !b["model"].is_null()) {
        c.model = Resolve(base, b["model"].get<std::string>());
      }
      if (b.contains("stats_manifest") && !b["stats_manifest"].is_null()) {
        c.stats_manifest = Resolve(base, b["stats_manifest"].get<std::string>());
      }
      if (b.contains("stats") && !b["stats"].is_null()) {
        NormalizationStats s;
        s.mean = b["stats"].at("mean").get<std::array<double, 3>>();
        s.stddev = b["stats"].at("std").get<std::array<double, 3>>();
        c.stats = s;
      }
    }
    if (j.contains("thresholds")) {
      const Json& t = j["thresholds"];
      MELANOSCOPE_RETURN_IF_ERROR(CheckKeys(t, {"t_p", "t_r"}, "thresholds."));
      c.thresholds.t_p = t.value("t_p", c.thresholds.t_p);
      c.thresholds.t_r = t.value("t_r", c.thresholds.t_r);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.workers = j.value("workers", c.workers);
    if (j.contains("out")) c.out = Resolve(base, j["out"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.time_budget_s = j.value("time_budget_s", c.time_budget_s);
    c.augment_underrepresented =
        j.value("augment_underrepresented", c.augment_underrepresented);
    c.export_dataset = j.value("export_dataset", c.export_dataset);
    c.evaluate_after_threshold =
        j.value("evaluate_after_threshold", c.evaluate_after_threshold);
    c.map_render_scale = j.value("map_render_scale", c.map_render_scale);
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("invalid config: ", e.what()));
  }
  return c;
}

absl::StatusOr<PipelineConfig> LoadConfig(const std::filesystem::path& path) {
  MELANOSCOPE_ASSIGN_OR_RETURN(std::string text, ReadTextFile(path));
  return ParseConfig(text, path.parent_path());
}

std::string ConfigToJson(const PipelineConfig& c) {
  Json j;
  j["slides"] = c.slides;
  j["annotations"] = c.annotations;
  j["truths"] = c.truths;
  j["magnification"] = c.magnification;
  j["patch_size"] = c.patch_size;
  j["overlap_min"] = c.overlap_min;
  j["overlap_rule"] =
      c.overlap_rule == OverlapRule::kConjunction ? "conjunction" : "independent";
  j["plan_mode"] = c.plan_mode == PlanMode::kAnnotated ? "annotated" : "tissue";
  j["hue_range"] = {c.foreground.hue8_lo, c.foreground.hue8_hi};
  j["sat_min"] = c.foreground.sat_min;
  Json b;
  b["kind"] = BackendKindName(c.backend);
  b["arity"] = ArityName(c.arity);
  b["model"] = c.model ? Json(*c.model) : Json(nullptr);
  b["stats_manifest"] = c.stats_manifest ? Json(*c.stats_manifest) : Json(nullptr);
  b["stats"] = c.stats ? Json{{"mean", c.stats->mean}, {"std", c.stats->stddev}}
                       : Json(nullptr);
  j["backend"] = std::move(b);
  j["thresholds"] = {{"t_p", c.thresholds.t_p}, {"t_r", c.thresholds.t_r}};
  j["batch_size"] = c.batch_size;
  j["workers"] = c.workers;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["time_budget_s"] = c.time_budget_s;
  j["augment_underrepresented"] = c.augment_underrepresented;
  j["export_dataset"] = c.export_dataset;
  j["evaluate_after_threshold"] = c.evaluate_after_threshold;
  j["map_render_scale"] = c.map_render_scale;
  return j.dump(2) + "\n";
}

absl::StatusOr<Stage> ParseStage(const std::string& name) {
  static const std::pair<const char*, Stage> kStages[] = {
      {"segment", Stage::kSegment},     {"extract", Stage::kExtract},
      {"infer", Stage::kInfer},         {"map", Stage::kMap},
      {"verdict", Stage::kVerdict},     {"calibrate", Stage::kCalibrate},
      {"evaluate", Stage::kEvaluate},   {"pipeline", Stage::kPipeline},
  };
  for (const auto& [n, s] : kStages) {
    if (name == n) return s;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown stage \"", name, "\""));
}

const char* StageName(Stage stage) {
  switch (stage) {
    case Stage::kSegment: return "segment";
    case Stage::kExtract: return "extract";
    case Stage::kInfer: return "infer";
    case Stage::kMap: return "map";
    case Stage::kVerdict: return "verdict";
    case Stage::kCalibrate: return "calibrate";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kPipeline: return "pipeline";
  }
  return "unknown";
}

absl::StatusOr<std::string> SlideIdForPath(const std::string& path) {
  MELANOSCOPE_ASSIGN_OR_RETURN(Slide slide, Slide::Open(path));
  return slide.id();
}

std::filesystem::path OutputPaths::Segment(const std::string& id) const {
  return root / "segment" / (id + ".png");
}
std::filesystem::path OutputPaths::Plan(const std::string& id) const {
  return root / "plan" / (id + ".json");
}
std::filesystem::path OutputPaths::Dataset() const { return root / "dataset"; }
std::filesystem::path OutputPaths::Infer(const std::string& id) const {
  return root / "infer" / (id + ".jsonl");
}
std::filesystem::path OutputPaths::MapJson(const std::string& id) const {
  return root / "map" / (id + ".json");
}
std::filesystem::path OutputPaths::MapPng(const std::string& id) const {
  return root / "map" / (id + ".png");
}
std::filesystem::path OutputPaths::MapComposite(const std::string& id) const {
  return root / "map" / (id + "_composite.png");
}
std::filesystem::path OutputPaths::Verdict(const std::string& id) const {
  return root / "verdict" / (id + ".json");
}
std::filesystem::path OutputPaths::Thresholds() const {
  return root / "thresholds.json";
}
std::filesystem::path OutputPaths::MetricsJson() const {
  return root / "metrics.json";
}
std::filesystem::path OutputPaths::MetricsCsv() const {
  return root / "metrics.csv";
}
std::filesystem::path OutputPaths::Timing() const { return root / "timing.json"; }

absl::Status CheckStageInputs(const PipelineConfig& c, Stage stage) {
  std::set<std::string> ids;
  std::vector<std::string> slide_ids;
  for (const std::string& s : c.slides) {
    MELANOSCOPE_RETURN_IF_ERROR(RequireExists("slide", s));
    auto id = SlideIdForPath(s);
    if (!id.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot open slide ", s, ": ", id.status().message()));
    }
    if (!ids.insert(*id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate slide id \"", *id, "\""));
    }
    slide_ids.push_back(*id);
  }
  const bool plans = stage == Stage::kExtract || stage == Stage::kPipeline;
  if (plans && c.plan_mode == PlanMode::kAnnotated) {
    if (c.annotations.empty()) {
      return absl::InvalidArgumentError(
          "annotated planning needs one annotation file per slide");
    }
  }
  for (const std::string& a : c.annotations) {
    MELANOSCOPE_RETURN_IF_ERROR(RequireExists("annotation file", a));
  }
  const bool infers = stage == Stage::kInfer || stage == Stage::kPipeline;
  if (infers) {
    if (c.model) MELANOSCOPE_RETURN_IF_ERROR(RequireExists("model", *c.model));
    if (c.stats_manifest) {
      MELANOSCOPE_RETURN_IF_ERROR(
          RequireExists("stats manifest", *c.stats_manifest));
    }
  }
  if (stage == Stage::kCalibrate && c.truths.empty()) {
    return absl::InvalidArgumentError("calibration needs one truth file per slide");
  }
  for (const std::string& t : c.truths) {
    MELANOSCOPE_RETURN_IF_ERROR(RequireExists("truth file", t));
  }

  const OutputPaths out{c.out};
  for (const std::string& id : slide_ids) {
    switch (stage) {
      case Stage::kInfer:
        MELANOSCOPE_RETURN_IF_ERROR(
            RequireExists("plan (run extract first)", out.Plan(id).string()));
        break;
      case Stage::kMap:
      case Stage::kCalibrate:
      case Stage::kEvaluate:
        MELANOSCOPE_RETURN_IF_ERROR(
            RequireExists("plan (run extract first)", out.Plan(id).string()));
        MELANOSCOPE_RETURN_IF_ERROR(RequireExists(
            "inference results (run infer first)", out.Infer(id).string()));
        break;
      case Stage::kVerdict:
        MELANOSCOPE_RETURN_IF_ERROR(
            RequireExists("map (run map first)", out.MapJson(id).string()));
        break;
      default:
        break;
    }
  }
  return absl::OkStatus();
}

}  // namespace melanoscope
