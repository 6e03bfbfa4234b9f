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

#include <tuple>

#include "absl/strings/str_cat.h"
#include "melanoscope/decision.h"
#include "melanoscope/parallel.h"
#include "melanoscope/status_macros.h"
#include "spdlog/spdlog.h"

namespace melanoscope {

std::vector<double> DefaultProbabilityGrid() {
  std::vector<double> grid;
  for (int k = 50; k <= 99; ++k) grid.push_back(k / 100.0);
  return grid;
}

std::vector<double> DefaultRatioGrid() {
  std::vector<double> grid;
  for (int k = 1; k <= 50; ++k) grid.push_back(k / 100.0);
  return grid;
}

absl::StatusOr<CalibrationResult> Calibrate(
    std::span<const CalibrationSlide> slides, std::span<const double> tp_grid,
    std::span<const double> tr_grid, int workers) {
  if (tp_grid.empty() || tr_grid.empty()) {
    return absl::InvalidArgumentError("calibration grids must not be empty");
  }
  if (slides.empty()) {
    return absl::InvalidArgumentError("calibration needs at least one slide");
  }
  for (double t_p : tp_grid) {
    MELANOSCOPE_RETURN_IF_ERROR(ValidateThresholds({t_p, 0.0}));
  }
  for (double t_r : tr_grid) {
    MELANOSCOPE_RETURN_IF_ERROR(ValidateThresholds({1.0, t_r}));
  }
  int64_t positives = 0;
  for (size_t s = 0; s < slides.size(); ++s) {
    const CalibrationSlide& slide = slides[s];
    if (slide.records.size() != slide.probs.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "calibration slide ", s, ": ", slide.records.size(), " records but ",
          slide.probs.size(), " probability vectors"));
    }
    for (size_t i = 0; i < slide.probs.size(); ++i) {
      MELANOSCOPE_RETURN_IF_ERROR(ValidateProbabilityVector(slide.probs[i]));
    }
    // Rejects overlapping records up front.
    std::vector<PatchClass> probe(slide.records.size(), PatchClass::kUnseen);
    MELANOSCOPE_RETURN_IF_ERROR(
        BuildMap(slide.records, probe, slide.geometry).status());
    if (slide.truth == Verdict::kMelanoma) ++positives;
  }
  const int64_t negatives = static_cast<int64_t>(slides.size()) - positives;
  const bool single_class = positives == 0 || negatives == 0;
  if (single_class) {
    spdlog::warn(
        "calibration set has only {} slides; the missing class's rate is "
        "undefined and counted as 1",
        positives == 0 ? "benign" : "melanoma");
  }

  // Ratio of every slide under every t_p. Records occupy distinct cells, so
  // counting classes equals counting map cells.
  std::vector<std::vector<RatioResult>> ratios(tp_grid.size());
  MELANOSCOPE_RETURN_IF_ERROR(ParallelFor(tp_grid.size(), workers, [&](size_t k) {
    ratios[k].resize(slides.size());
    for (size_t s = 0; s < slides.size(); ++s) {
      ClassCounts counts;
      for (const ProbabilityVector& p : slides[s].probs) {
        const size_t best = ArgMax(p);
        counts.Add(p[best] >= tp_grid[k] ? static_cast<PatchClass>(best)
                                         : PatchClass::kUnseen);
      }
      ratios[k][s] = MalignancyRatio(counts);
    }
    return absl::OkStatus();
  }));

  CalibrationResult best;
  bool have_best = false;
  for (size_t k = 0; k < tp_grid.size(); ++k) {
    for (double t_r : tr_grid) {
      int64_t tp = 0, tn = 0;
      for (size_t s = 0; s < slides.size(); ++s) {
        const RatioResult& r = ratios[k][s];
        const Verdict v = DecideVerdict(r.rho, t_r, r.no_lesion);
        if (slides[s].truth == Verdict::kMelanoma) {
          tp += v == Verdict::kMelanoma;
        } else {
          tn += v == Verdict::kBenignNevus;
        }
      }
      const double sens =
          positives == 0 ? 1.0 : static_cast<double>(tp) / positives;
      const double spec =
          negatives == 0 ? 1.0 : static_cast<double>(tn) / negatives;
      const auto key = std::make_tuple(sens, spec, -t_r);
      if (!have_best ||
          key > std::make_tuple(best.sensitivity, best.specificity,
                                -best.thresholds.t_r)) {
        best.thresholds = {tp_grid[k], t_r};
        best.sensitivity = sens;
        best.specificity = spec;
        have_best = true;
      }
    }
  }
  best.single_class = single_class;
  return best;
}

}  // namespace melanoscope
