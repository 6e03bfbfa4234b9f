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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Tolerances are pinned below.
//
//   melanoscope_acceptance            all criteria
//   melanoscope_acceptance metrics    criteria whose key contains "metrics"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

#include "melanoscope/artifacts.h"
#include "melanoscope/decision.h"
#include "melanoscope/evaluation.h"
#include "melanoscope/logging.h"
#include "melanoscope/pipeline.h"
#include "melanoscope/status_macros.h"
#include "melanoscope/synthgen.h"
#include "melanoscope/tiling.h"

namespace melanoscope {
namespace {

namespace fs = std::filesystem;

// Pinned tolerances and sizes.
constexpr int kLawVectors = 10000;
constexpr int kRatioMaps = 1000;
constexpr int64_t kRatioMaxCells = 1000000;
constexpr int kPlanMaskPairs = 100;
constexpr int64_t kPlanMaxSide = 2048;
constexpr int kForegroundTiles = 100;
constexpr int kE2eSlides = 20;
constexpr double kE2eCellFraction = 0.95;
constexpr double kMetricsTolerance = 1e-4;
constexpr int64_t kBudgetSide = 20000;
constexpr double kBudgetSeconds = 180.0;
constexpr double kHardLimitSeconds = 600.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome Pass(std::string detail) { return {true, std::move(detail)}; }
Outcome Fail(std::string detail) { return {false, std::move(detail)}; }
Outcome Fail(const absl::Status& st) { return {false, st.ToString()}; }

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name)
      : path_(fs::temp_directory_path() /
              ("melanoscope_acceptance_" + std::to_string(::getpid()) + "_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<double> TpGrid() {
  std::vector<double> g;
  for (int k = 50; k <= 99; ++k) g.push_back(k / 100.0);
  return g;
}

// ---------------------------------------------------------------------------

Outcome ThresholdLaw() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double> grid = TpGrid();
  int64_t checks = 0, violations = 0;
  for (int n = 0; n < kLawVectors; ++n) {
    const int k = n % 2 ? 2 : 3;
    std::vector<double> v(static_cast<size_t>(k));
    if (n % 10 == 0) {
      // Maximum exactly on a grid point.
      const double top = grid[rng() % grid.size()];
      v.assign(v.size(), (1.0 - top) / (k - 1));
      v[rng() % v.size()] = top;
    } else {
      // Dirichlet with a random concentration: both flat and peaked vectors.
      const double alpha = n % 3 ? 0.05 : 1.0;
      std::gamma_distribution<double> gamma(alpha, 1.0);
      double sum = 0;
      for (double& x : v) sum += (x = gamma(rng) + 1e-300);
      for (double& x : v) x /= sum;
    }
    const ProbabilityVector p{v};
    if (!ValidateProbabilityVector(p).ok()) continue;
    const double mx = *std::max_element(v.begin(), v.end());
    const size_t arg = static_cast<size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
    for (double t_p : grid) {
      auto cls = AssignClass(p, t_p);
      ++checks;
      const bool unseen = cls.ok() && *cls == PatchClass::kUnseen;
      const bool ok = cls.ok() && unseen == (mx < t_p) &&
                      (unseen || static_cast<size_t>(*cls) == arg);
      violations += !ok;
    }
  }
  const std::string detail = absl::StrCat(checks, " checks, ", violations,
                                          " violations");
  return violations == 0 && checks >= int64_t{kLawVectors} * 45 ? Pass(detail)
                                                                  : Fail(detail);
}

// ---------------------------------------------------------------------------

Outcome RatioOracle() {
  std::mt19937_64 rng(2);
  int64_t mismatches = 0, largest = 0;
  for (int m = 0; m < kRatioMaps; ++m) {
    int64_t w, h;
    if (m < 4) {
      w = h = 1000;  // the full 10^6 cells
    } else {
      w = 1 + static_cast<int64_t>(rng() % 1000);
      h = 1 + static_cast<int64_t>(rng() % std::min<int64_t>(1000, kRatioMaxCells / w));
    }
    MapGeometry g;
    g.slide_id = "m";
    g.stride = 1;
    g.level_width = w;
    g.level_height = h;
    LocalizationMap map(g);
    // Skewed class mix so some maps have no lesion cells at all.
    const uint64_t mix = rng() % 4;
    int64_t mal = 0, ben = 0;
    for (int64_t r = 0; r < h; ++r) {
      for (int64_t c = 0; c < w; ++c) {
        const uint64_t v = rng() % (mix == 0 ? 64 : 5);
        if (mix == 0 && v >= 2) continue;  // mostly absent
        if (v == 4) continue;
        const auto cls = static_cast<PatchClass>(mix == 0 ? v + 2 : v);
        map.Set(r, c, cls);
        mal += cls == PatchClass::kMalignant;
        ben += cls == PatchClass::kBenign;
      }
    }
    largest = std::max(largest, w * h);
    const RatioResult got = MalignancyRatio(map);
    const bool none = mal + ben == 0;
    const double want = none ? 0.0 : static_cast<double>(mal) / (mal + ben);
    const bool ok = got.rho == want && got.no_lesion == none &&
                    got.counts.malignant == mal && got.counts.benign == ben;
    mismatches += !ok;
  }
  // Boundary: M=4, B=96 gives rho = 0.04 = t_r, which is Melanoma.
  const RatioResult edge = MalignancyRatio(ClassCounts{.benign = 96, .malignant = 4});
  const bool boundary =
      edge.rho == 0.04 &&
      DecideVerdict(edge.rho, Thresholds{}.t_r, edge.no_lesion) == Verdict::kMelanoma &&
      DecideVerdict(MalignancyRatio(ClassCounts{.benign = 97, .malignant = 3}).rho,
                    0.04, false) == Verdict::kBenignNevus;
  const std::string detail =
      absl::StrCat(kRatioMaps, " maps up to ", largest, " cells, ", mismatches,
                   " mismatches; rho(4,96)=0.04 -> ",
                   boundary ? "Melanoma" : "WRONG");
  return mismatches == 0 && boundary && largest == kRatioMaxCells ? Pass(detail)
                                                                  : Fail(detail);
}

// ---------------------------------------------------------------------------

struct MaskPair {
  BinaryMask fg;
  LabelMask labels;
};

// Per-pixel brute force of the overlap rule, independent of the planner.
std::vector<PatchRecord> BrutePlan(const MaskPair& m, const PlanOptions& o,
                                   int64_t cell) {
  std::vector<PatchRecord> out;
  const double area = static_cast<double>(cell * cell);
  for (int64_t r = 0; r < m.fg.height / cell; ++r) {
    for (int64_t c = 0; c < m.fg.width / cell; ++c) {
      int64_t nfg = 0, both[3] = {0, 0, 0}, lab[3] = {0, 0, 0};
      for (int64_t y = r * cell; y < (r + 1) * cell; ++y) {
        for (int64_t x = c * cell; x < (c + 1) * cell; ++x) {
          const size_t i = static_cast<size_t>(y * m.fg.width + x);
          const bool f = m.fg.bits[i] != 0;
          const uint8_t code = m.labels.cells[i];
          nfg += f;
          if (code) {
            ++lab[code - 1];
            if (f) ++both[code - 1];
          }
        }
      }
      std::optional<Label> best;
      double best_frac = -1.0;
      for (int k = 0; k < 3; ++k) {
        double frac;
        if (o.rule == OverlapRule::kConjunction) {
          frac = static_cast<double>(both[k]) / area;
          if (frac < o.overlap_min) continue;
        } else {
          if (nfg / area < o.overlap_min || lab[k] / area < o.overlap_min) continue;
          frac = static_cast<double>(std::min(nfg, lab[k])) / area;
        }
        if (frac > best_frac) {
          best_frac = frac;
          best = static_cast<Label>(k);
        }
      }
      PatchRecord rec{"p", c * cell, r * cell, 0, cell, best, best_frac};
      if (o.mode == PlanMode::kAnnotated) {
        if (best) out.push_back(rec);
      } else if (nfg / area >= o.overlap_min) {
        rec.qualifying_fraction = nfg / area;
        out.push_back(rec);
      }
    }
  }
  return out;
}

Outcome PlanOracle() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int64_t kCell = 256;
  int mismatches = 0;
  int64_t records = 0, largest = 0;
  for (int t = 0; t < kPlanMaskPairs; ++t) {
    const int64_t w = t == 0 ? kPlanMaxSide
                             : kCell + static_cast<int64_t>(rng() % (kPlanMaxSide - kCell + 1));
    const int64_t h = t == 0 ? kPlanMaxSide
                             : kCell + static_cast<int64_t>(rng() % (kPlanMaxSide - kCell + 1));
    largest = std::max(largest, w * h);
    const SlideMetadata meta = MakePyramidMetadata("p", w, h, 1, 10.0);
    PlanOptions o;  // 256 px at 10x, overlap_min 0.70
    o.rule = t % 4 == 3 ? OverlapRule::kIndependent : OverlapRule::kConjunction;
    o.mode = t % 3 == 2 ? PlanMode::kTissue : PlanMode::kAnnotated;
    MaskPair m;
    m.fg = {0, w, h, std::vector<uint8_t>(static_cast<size_t>(w * h), 0)};
    m.labels = {0, w, h, std::vector<uint8_t>(static_cast<size_t>(w * h), 0)};
    // Each 64 px block draws its own densities around the 0.70 threshold.
    for (int64_t by = 0; by < h; by += 64) {
      for (int64_t bx = 0; bx < w; bx += 64) {
        const double p_fg = 0.55 + 0.45 * unit(rng);
        const double p_lab = 0.55 + 0.45 * unit(rng);
        const uint8_t code = static_cast<uint8_t>(1 + rng() % 3);
        for (int64_t y = by; y < std::min(h, by + 64); ++y) {
          for (int64_t x = bx; x < std::min(w, bx + 64); ++x) {
            const size_t i = static_cast<size_t>(y * w + x);
            m.fg.bits[i] = unit(rng) < p_fg;
            m.labels.cells[i] = unit(rng) < p_lab ? code : 0;
          }
        }
      }
    }
    auto got = PlanPatches(meta, m.fg, m.labels, o);
    if (!got.ok()) return Fail(got.status());
    const auto want = BrutePlan(m, o, kCell);
    records += static_cast<int64_t>(want.size());
    mismatches += *got != want;
  }
  // 45876 of 65536 qualifying pixels (0.70001) is kept, 45875 (0.69999) is not.
  std::string edge;
  bool edge_ok = true;
  for (const auto& [n, keep] : {std::pair<int64_t, bool>{45875, false}, {45876, true}}) {
    const SlideMetadata meta = MakePyramidMetadata("p", 256, 256, 1, 10.0);
    MaskPair m;
    m.fg = {0, 256, 256, std::vector<uint8_t>(65536, 0)};
    m.labels = {0, 256, 256, std::vector<uint8_t>(65536, 0)};
    std::vector<size_t> order(65536);
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int64_t k = 0; k < n; ++k) {
      m.fg.bits[order[k]] = 1;
      m.labels.cells[order[k]] = LabelCode(Label::kMalignant);
    }
    auto got = PlanPatches(meta, m.fg, m.labels, PlanOptions{});
    const bool kept = got.ok() && got->size() == 1;
    edge_ok = edge_ok && got.ok() && kept == keep && *got == BrutePlan(m, {}, 256);
    absl::StrAppend(&edge, " ", n, kept ? " kept" : " rejected");
  }
  const std::string detail =
      absl::StrCat(kPlanMaskPairs, " mask pairs up to ", largest, " px, ", records,
                   " records, ", mismatches, " mismatches;", edge);
  return mismatches == 0 && edge_ok ? Pass(detail) : Fail(detail);
}

// ---------------------------------------------------------------------------

// HSV in floating point: hue in degrees, stored as round(h / 2) like 8-bit
// OpenCV hue; saturation (max - min) / max.
bool ReferenceForeground(Rgb p, const ForegroundOptions& o) {
  const double r = p.r, g = p.g, b = p.b;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double s = mx == 0 ? 0.0 : (mx - mn) / mx;
  if (s < o.sat_min) return false;
  double h = 0.0;
  if (mx != mn) {
    if (mx == r) h = 60.0 * (g - b) / (mx - mn);
    else if (mx == g) h = 120.0 + 60.0 * (b - r) / (mx - mn);
    else h = 240.0 + 60.0 * (r - g) / (mx - mn);
    if (h < 0) h += 360.0;
  }
  const int h8 = static_cast<int>(std::floor(h / 2.0 + 0.5));
  return h8 >= o.hue8_lo && h8 <= o.hue8_hi;
}

Outcome ForegroundOracle() {
  std::mt19937_64 rng(4);
  const ForegroundOptions o;
  int64_t pixels = 0, mismatches = 0;
  for (int t = 0; t < kForegroundTiles; ++t) {
    const int64_t w = 1 + static_cast<int64_t>(rng() % 300);
    const int64_t h = 1 + static_cast<int64_t>(rng() % 300);
    RgbTile tile(w, h);
    const bool stained = t % 2 == 0;  // H&E-like tones near the band edges
    for (auto& v : tile.pixels) v = static_cast<uint8_t>(rng());
    if (stained) {
      for (size_t i = 0; i < tile.pixels.size(); i += 3) {
        tile.pixels[i] = static_cast<uint8_t>(100 + rng() % 156);
        tile.pixels[i + 1] = static_cast<uint8_t>(rng() % 200);
        tile.pixels[i + 2] = static_cast<uint8_t>(80 + rng() % 176);
      }
    }
    auto mask = ForegroundMask(tile, o);
    if (!mask.ok()) return Fail(mask.status());
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        ++pixels;
        mismatches += mask->At(x, y) != ReferenceForeground(tile.At(x, y), o);
      }
    }
  }
  struct Anchor {
    const char* name;
    Rgb color;
    bool fg;
  };
  const Anchor anchors[] = {
      {"purple", {90, 60, 150}, true},   {"pink", {230, 180, 200}, true},
      {"magenta", {150, 40, 90}, true},  {"green", {40, 160, 60}, false},
      {"white", {255, 255, 255}, false},
  };
  std::string wrong;
  for (const Anchor& a : anchors) {
    if (IsForeground(a.color, o) != a.fg) absl::StrAppend(&wrong, " ", a.name);
  }
  const std::string detail =
      absl::StrCat(kForegroundTiles, " tiles, ", pixels, " px, ", mismatches,
                   " mismatches; anchors ", wrong.empty() ? "ok" : "wrong:" + wrong);
  return mismatches == 0 && wrong.empty() ? Pass(detail) : Fail(detail);
}

// ---------------------------------------------------------------------------

// Shared by the end-to-end and determinism criteria.
struct SynthSet {
  fs::path root;
  PipelineConfig config;
};

absl::StatusOr<SynthSet> MakeSynthSet(const fs::path& root) {
  SynthRunOptions o;
  o.count = kE2eSlides;
  o.seed = 2026;
  o.out = root.string();
  o.mixed = true;
  o.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  MELANOSCOPE_RETURN_IF_ERROR(RunSynth(o).status());
  SynthSet set;
  set.root = root;
  MELANOSCOPE_ASSIGN_OR_RETURN(set.config, LoadConfig(root / "config.json"));
  return set;
}

// Cells lying wholly inside one benign or malignant blob: every pixel center
// of the cell is within the blob radius.
std::optional<Label> InteriorLabel(const SynthSpec& spec, int64_t x0, int64_t y0,
                                   int64_t side) {
  for (const Blob& b : spec.blobs) {
    if (b.label == Label::kNormal) continue;
    bool inside = true;
    for (const auto& [cx, cy] : {std::pair{x0, y0}, {x0 + side - 1, y0},
                                 {x0, y0 + side - 1}, {x0 + side - 1, y0 + side - 1}}) {
      const double dx = cx + 0.5 - b.cx, dy = cy + 0.5 - b.cy;
      inside = inside && dx * dx + dy * dy <= b.radius * b.radius;
    }
    if (inside) return b.label;
  }
  return std::nullopt;
}

Outcome EndToEnd(const SynthSet& set, const fs::path& out) {
  PipelineConfig c = set.config;
  c.out = out.string();
  auto result = RunPipeline(c);
  if (!result.ok()) return Fail(result.status());
  int verdicts_ok = 0;
  int64_t interior = 0, interior_ok = 0, labeled = 0, labeled_ok = 0;
  for (size_t i = 0; i < c.slides.size(); ++i) {
    const SlideVerdict& v = result->verdicts[i];
    auto truth = LoadSynthTruth(c.truths[i]);
    if (!truth.ok()) return Fail(truth.status());
    verdicts_ok += v.verdict == truth->verdict;

    auto spec_text = ReadTextFile(set.root / (v.slide_id + ".spec.json"));
    if (!spec_text.ok()) return Fail(spec_text.status());
    auto spec = SynthSpecFromJson(*spec_text);
    if (!spec.ok()) return Fail(spec.status());
    auto map_text = ReadTextFile(OutputPaths{c.out}.MapJson(v.slide_id));
    if (!map_text.ok()) return Fail(map_text.status());
    auto map = LocalizationMapFromJson(*map_text);
    if (!map.ok()) return Fail(map.status());
    const int64_t side = map->geometry().stride * map->geometry().downsample;
    for (int64_t r = 0; r < map->grid_height(); ++r) {
      for (int64_t col = 0; col < map->grid_width(); ++col) {
        const auto label = InteriorLabel(*spec, col * side, r * side, side);
        if (!label) continue;
        ++interior;
        interior_ok += map->At(r, col) == ToPatchClass(*label);
      }
    }
    // Informational: cells the 70% rule labeled benign or malignant.
    auto plan_text = ReadTextFile(OutputPaths{c.out}.Plan(v.slide_id));
    if (!plan_text.ok()) return Fail(plan_text.status());
    auto plan = PlanFromJson(*plan_text);
    if (!plan.ok()) return Fail(plan.status());
    for (const PatchRecord& rec : plan->records) {
      if (!rec.ground_label || *rec.ground_label == Label::kNormal) continue;
      ++labeled;
      auto cell = map->CellOf(rec.x, rec.y);
      labeled_ok += cell.ok() &&
                    map->At(cell->first, cell->second) == ToPatchClass(*rec.ground_label);
    }
  }
  const double frac = interior ? static_cast<double>(interior_ok) / interior : 0.0;
  const std::string detail = absl::StrFormat(
      "%d/%d verdicts; %lld/%lld interior lesion cells correct (%.2f%%, need "
      ">= %.0f%%); labeled lesion cells %lld/%lld",
      verdicts_ok, static_cast<int>(c.slides.size()),
      static_cast<long long>(interior_ok), static_cast<long long>(interior),
      100.0 * frac, 100.0 * kE2eCellFraction, static_cast<long long>(labeled_ok),
      static_cast<long long>(labeled));
  const bool ok = verdicts_ok == kE2eSlides &&
                  static_cast<int>(c.slides.size()) == kE2eSlides && interior > 0 &&
                  frac >= kE2eCellFraction;
  return ok ? Pass(detail) : Fail(detail);
}

// ---------------------------------------------------------------------------

Outcome MetricsExample() {
  auto r = Metrics(BinaryCounts{.tp = 90, .fn = 10, .fp = 5, .tn = 95});
  if (!r.ok()) return Fail(r.status());
  auto near = [](const std::optional<double>& v, double want) {
    return v && std::abs(*v - want) <= kMetricsTolerance;
  };
  const bool values = near(r->accuracy, 0.925) && near(r->sensitivity, 0.900) &&
                      near(r->specificity, 0.950) && near(r->f1, 0.9231);
  // No malignant truth and no malignant prediction: sensitivity, precision
  // and F1 have zero denominators.
  auto z = Metrics(BinaryCounts{.tp = 0, .fn = 0, .fp = 0, .tn = 12});
  const bool absent = z.ok() && !z->sensitivity && !z->precision && !z->f1 &&
                      z->specificity == 1.0 &&
                      MetricsCsvRow("m", *z) == "m,100.00,,,1.0000,,,12\n" &&
                      MetricsReportToJson("m", *z).find("\"sensitivity\": null") !=
                          std::string::npos;
  const std::string detail = absl::StrFormat(
      "acc %.4f sens %.4f spec %.4f f1 %.4f (tol %g); zero denominators %s",
      r->accuracy.value_or(-1), r->sensitivity.value_or(-1),
      r->specificity.value_or(-1), r->f1.value_or(-1), kMetricsTolerance,
      absent ? "absent" : "NOT absent");
  return values && absent ? Pass(detail) : Fail(detail);
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    auto text = ReadTextFile(e.path());
    files[fs::relative(e.path(), root).string()] = text.ok() ? *text : "<unreadable>";
  }
  return files;
}

Outcome ParallelEquivalence(const SynthSet& set, const fs::path& scratch) {
  std::vector<std::map<std::string, std::string>> runs;
  for (int workers : {1, 8}) {
    PipelineConfig c = set.config;
    c.workers = workers;
    c.out = (scratch / absl::StrCat("w", workers)).string();
    auto r = RunPipeline(c);
    if (!r.ok()) return Fail(r.status());
    if (auto e = RunEvaluate(c); !e.ok()) return Fail(e.status());
    runs.push_back(Snapshot(c.out));
  }
  int differing = 0;
  for (const auto& [rel, bytes] : runs[0]) {
    auto it = runs[1].find(rel);
    differing += it == runs[1].end() || it->second != bytes;
  }
  differing += static_cast<int>(runs[1].size()) - static_cast<int>(runs[0].size()) > 0;
  const std::string detail =
      absl::StrCat(runs[0].size(), " report files compared, ", differing, " differ");
  return differing == 0 && runs[0].size() > 0 ? Pass(detail) : Fail(detail);
}

// ---------------------------------------------------------------------------

Outcome PerformanceBudget(const fs::path& scratch) {
  // Four blobs of fixed size keep generation cheap and the plan busy.
  SynthSpec spec;
  spec.slide_id = "budget";
  spec.width = spec.height = kBudgetSide;
  spec.level_count = 4;
  spec.blobs = {MakeBlob(Label::kBenign, 5000, 5000, 4000),
                MakeBlob(Label::kMalignant, 15000, 5000, 3000),
                MakeBlob(Label::kBenign, 5000, 15000, 3500),
                MakeBlob(Label::kNormal, 15000, 15000, 4000)};
  auto out = GenerateSlide(spec, scratch);
  if (!out.ok()) return Fail(out.status());
  PipelineConfig c;
  c.slides = {out->slide_dir.string()};
  c.annotations = {out->annotations.string()};
  c.truths = {out->truth.string()};
  c.workers = 8;
  c.out = (scratch / "run").string();
  c.time_budget_s = kBudgetSeconds;
  const auto start = std::chrono::steady_clock::now();
  auto r = RunPipeline(c);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!r.ok()) return Fail(r.status());
  const bool verdict_ok = r->verdicts[0].verdict == out->truth_record.verdict;
  std::string detail = absl::StrFormat(
      "%lldx%lld slide end-to-end in %.1f s (budget %.0f s, hard limit %.0f s, "
      "%u hardware threads); verdict %s",
      static_cast<long long>(kBudgetSide), static_cast<long long>(kBudgetSide),
      seconds, kBudgetSeconds, kHardLimitSeconds,
      std::thread::hardware_concurrency(), verdict_ok ? "correct" : "WRONG");
  if (seconds > kBudgetSeconds && seconds <= kHardLimitSeconds) {
    detail += "; WARNING: over budget";
  }
  return seconds <= kHardLimitSeconds && verdict_ok ? Pass(detail) : Fail(detail);
}

}  // namespace
}  // namespace melanoscope

int main(int argc, char** argv) {
  using namespace melanoscope;
  (void)SetLogLevel("error");
  const std::string filter = argc > 1 ? argv[1] : "";

  std::optional<ScratchDir> synth_dir;
  std::optional<SynthSet> synth;
  absl::Status synth_status;
  auto need_synth = [&]() -> const SynthSet* {
    if (!synth && synth_status.ok()) {
      synth_dir.emplace("synth");
      auto s = MakeSynthSet(synth_dir->path() / "slides");
      if (s.ok()) synth = *std::move(s); else synth_status = s.status();
    }
    return synth ? &*synth : nullptr;
  };

  struct Criterion {
    const char* key;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"threshold_law", "Unseen iff max < t_p on 10,000 vectors x t_p grid",
       ThresholdLaw},
      {"ratio_oracle", "malignancy ratio equals brute-force counting; rho = t_r is Melanoma",
       RatioOracle},
      {"plan_oracle", "patch plan equals per-pixel overlap counting, 45876/45875 edge",
       PlanOracle},
      {"foreground_oracle", "foreground mask equals per-pixel HSV predicate; anchors",
       ForegroundOracle},
      {"end_to_end", "20 synthetic slides: verdicts and lesion cell classes",
       [&]() {
         const SynthSet* s = need_synth();
         if (!s) return Fail(synth_status);
         ScratchDir out("e2e");
         return EndToEnd(*s, out.path());
       }},
      {"metrics", "worked metrics example and absent zero-denominator rates",
       MetricsExample},
      {"determinism", "pipeline with workers=1 and workers=8 is byte-identical",
       [&]() {
         const SynthSet* s = need_synth();
         if (!s) return Fail(synth_status);
         ScratchDir out("parallel");
         return ParallelEquivalence(*s, out.path());
       }},
      {"performance", "20,000 x 20,000 slide end-to-end within the time budget",
       [&]() {
         ScratchDir out("budget");
         return PerformanceBudget(out.path());
       }},
  };

  int failed = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!filter.empty() && std::string(c.key).find(filter) == std::string::npos) {
      continue;
    }
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    const Outcome o = c.run();
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-18s %s | %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.key,
                c.title, o.detail.c_str(), s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 && ran > 0 ? 0 : 1;
}
