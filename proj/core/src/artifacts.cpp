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

#include "melanoscope/artifacts.h"

#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "melanoscope/status_macros.h"

namespace melanoscope {
namespace {

using Json = nlohmann::ordered_json;

const char* OverlapRuleName(OverlapRule r) {
  return r == OverlapRule::kConjunction ? "conjunction" : "independent";
}

const char* PlanModeName(PlanMode m) {
  return m == PlanMode::kAnnotated ? "annotated" : "tissue";
}

}  // namespace

absl::StatusOr<std::string> ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot read ", path.string()));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

absl::Status WriteTextFile(const std::filesystem::path& path,
                           const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      return absl::InternalError(absl::StrCat(
          "cannot create ", path.parent_path().string(), ": ", ec.message()));
    }
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) {
      return absl::InternalError(absl::StrCat("cannot write ", tmp.string()));
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot rename to ", path.string(), ": ", ec.message()));
  }
  return absl::OkStatus();
}

std::string PlanToJson(const PlanArtifact& plan) {
  Json j;
  j["slide_id"] = plan.slide_id;
  j["slide_path"] = plan.slide_path;
  j["options"] = {{"patch_size", plan.options.patch_size},
                  {"overlap_min", plan.options.overlap_min},
                  {"target_mag", plan.options.target_mag},
                  {"overlap_rule", OverlapRuleName(plan.options.rule)},
                  {"plan_mode", PlanModeName(plan.options.mode)}};
  const PlanGeometry& g = plan.geometry;
  j["geometry"] = {{"level", g.level},
                   {"downsample", g.downsample},
                   {"level_width", g.level_width},
                   {"level_height", g.level_height},
                   {"residual_scale", g.residual_scale},
                   {"cell_px", g.cell_px},
                   {"cols", g.cols},
                   {"rows", g.rows}};
  Json records = Json::array();
  for (const PatchRecord& r : plan.records) {
    records.push_back({{"x", r.x},
                       {"y", r.y},
                       {"level", r.level},
                       {"size_px", r.size_px},
                       {"label", r.ground_label ? Json(LabelName(*r.ground_label))
                                                : Json(nullptr)},
                       {"fraction", r.qualifying_fraction}});
  }
  j["records"] = std::move(records);
  return j.dump(1) + "\n";
}

absl::StatusOr<PlanArtifact> PlanFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    PlanArtifact plan;
    plan.slide_id = j.at("slide_id").get<std::string>();
    plan.slide_path = j.at("slide_path").get<std::string>();
    const Json& o = j.at("options");
    plan.options.patch_size = o.at("patch_size").get<int64_t>();
    plan.options.overlap_min = o.at("overlap_min").get<double>();
    plan.options.target_mag = o.at("target_mag").get<double>();
    plan.options.rule = o.at("overlap_rule").get<std::string>() == "independent"
                            ? OverlapRule::kIndependent
                            : OverlapRule::kConjunction;
    plan.options.mode = o.at("plan_mode").get<std::string>() == "tissue"
                            ? PlanMode::kTissue
                            : PlanMode::kAnnotated;
    const Json& g = j.at("geometry");
    plan.geometry.level = g.at("level").get<int>();
    plan.geometry.downsample = g.at("downsample").get<int64_t>();
    plan.geometry.level_width = g.at("level_width").get<int64_t>();
    plan.geometry.level_height = g.at("level_height").get<int64_t>();
    plan.geometry.residual_scale = g.at("residual_scale").get<double>();
    plan.geometry.cell_px = g.at("cell_px").get<int64_t>();
    plan.geometry.cols = g.at("cols").get<int64_t>();
    plan.geometry.rows = g.at("rows").get<int64_t>();
    for (const Json& jr : j.at("records")) {
      PatchRecord r;
      r.slide_id = plan.slide_id;
      r.x = jr.at("x").get<int64_t>();
      r.y = jr.at("y").get<int64_t>();
      r.level = jr.at("level").get<int>();
      r.size_px = jr.at("size_px").get<int64_t>();
      if (!jr.at("label").is_null()) {
        MELANOSCOPE_ASSIGN_OR_RETURN(
            r.ground_label, ParseLabel(jr.at("label").get<std::string>()));
      }
      r.qualifying_fraction = jr.at("fraction").get<double>();
      plan.records.push_back(std::move(r));
    }
    return plan;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed plan JSON: ", e.what()));
  }
}

std::string InferRowToJsonLine(const InferRow& row) {
  Json j;
  j["index"] = row.index;
  j["x"] = row.x;
  j["y"] = row.y;
  j["level"] = row.level;
  j["probs"] = row.probs.probs;
  return j.dump() + "\n";
}

absl::StatusOr<std::vector<InferRow>> ParseInferJsonl(const std::string& text) {
  std::vector<InferRow> rows;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      InferRow r;
      r.index = j.at("index").get<size_t>();
      r.x = j.at("x").get<int64_t>();
      r.y = j.at("y").get<int64_t>();
      r.level = j.at("level").get<int>();
      r.probs.probs = j.at("probs").get<std::vector<double>>();
      if (r.index != rows.size()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "inference line ", line_no, " has index ", r.index, ", expected ",
            rows.size()));
      }
      rows.push_back(std::move(r));
    } catch (const Json::exception& e) {
      return absl::InvalidArgumentError(absl::StrCat(
          "malformed inference line ", line_no, ": ", e.what()));
    }
  }
  return rows;
}

absl::Status MatchInferToPlan(const PlanArtifact& plan,
                              const std::vector<InferRow>& rows) {
  if (rows.size() != plan.records.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "inference has ", rows.size(), " rows but the plan has ",
        plan.records.size(), " records"));
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    const PatchRecord& r = plan.records[i];
    if (rows[i].x != r.x || rows[i].y != r.y || rows[i].level != r.level) {
      return absl::InvalidArgumentError(absl::StrCat(
          "inference row ", i, " does not match plan record (", r.x, ",", r.y,
          ") level ", r.level));
    }
  }
  return absl::OkStatus();
}

}  // namespace melanoscope
