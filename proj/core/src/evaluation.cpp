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

#include "melanoscope/evaluation.h"

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json.hpp"

namespace melanoscope {
namespace {

using Json = nlohmann::ordered_json;

std::optional<double> Ratio(int64_t num, int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> HarmonicMean(std::optional<double> p,
                                   std::optional<double> r) {
  if (!p || !r || *p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

Json OptionalJson(std::optional<double> v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string CsvField(std::optional<double> v, bool percent = false) {
  if (!v) return "";
  return absl::StrFormat(percent ? "%.2f" : "%.4f", percent ? *v * 100.0 : *v);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(Arity arity)
    : arity_(arity),
      counts_(static_cast<size_t>(ArityWidth(arity) * ArityWidth(arity)), 0) {}

int64_t ConfusionMatrix::total() const {
  int64_t n = 0;
  for (int64_t c : counts_) n += c;
  return n;
}

int64_t ConfusionMatrix::trace() const {
  int64_t n = 0;
  for (int k = 0; k < classes(); ++k) n += At(k, k);
  return n;
}

std::optional<double> ConfusionMatrix::coverage() const {
  return Ratio(total(), total() + unseen_);
}

absl::Status ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  if (other.arity_ != arity_) {
    return absl::InvalidArgumentError("cannot merge matrices of different arity");
  }
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  unseen_ += other.unseen_;
  return absl::OkStatus();
}

absl::StatusOr<ConfusionMatrix> Confusion(std::span<const PatchClass> preds,
                                          std::span<const Label> truths,
                                          Arity arity) {
  if (preds.size() != truths.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "length mismatch: ", preds.size(), " predictions but ", truths.size(),
        " truths"));
  }
  ConfusionMatrix cm(arity);
  const int k = ArityWidth(arity);
  for (size_t i = 0; i < preds.size(); ++i) {
    const int truth = static_cast<int>(truths[i]);
    if (truth >= k) {
      return absl::InvalidArgumentError(absl::StrCat(
          "truth ", LabelName(truths[i]), " at index ", i, " is outside ",
          ArityName(arity), " classes"));
    }
    if (preds[i] == PatchClass::kUnseen) {
      cm.AddUnseen();
      continue;
    }
    const int pred = static_cast<int>(preds[i]);
    if (pred >= k) {
      return absl::InvalidArgumentError(absl::StrCat(
          "prediction ", PatchClassName(preds[i]), " at index ", i,
          " is outside ", ArityName(arity), " classes"));
    }
    cm.Add(truth, pred);
  }
  return cm;
}

BinaryCounts OneVsRest(const ConfusionMatrix& cm, int positive) {
  BinaryCounts b;
  for (int t = 0; t < cm.classes(); ++t) {
    for (int p = 0; p < cm.classes(); ++p) {
      const int64_t n = cm.At(t, p);
      if (t == positive) {
        (p == positive ? b.tp : b.fn) += n;
      } else {
        (p == positive ? b.fp : b.tn) += n;
      }
    }
  }
  return b;
}

absl::StatusOr<MetricsReport> Metrics(const BinaryCounts& c) {
  if (c.total() == 0) {
    return absl::InvalidArgumentError("metrics need a non-empty matrix");
  }
  MetricsReport r;
  r.total = c.total();
  r.accuracy = Ratio(c.tp + c.tn, c.total());
  r.sensitivity = Ratio(c.tp, c.tp + c.fn);
  r.specificity = Ratio(c.tn, c.tn + c.fp);
  r.precision = Ratio(c.tp, c.tp + c.fp);
  r.f1 = HarmonicMean(r.precision, r.sensitivity);
  return r;
}

absl::StatusOr<MetricsReport> Metrics(const ConfusionMatrix& cm) {
  const int positive = static_cast<int>(Label::kMalignant);
  auto r = Metrics(OneVsRest(cm, positive));
  if (!r.ok()) return r.status();
  r->accuracy = Ratio(cm.trace(), cm.total());
  r->coverage = cm.coverage();
  if (cm.arity() == Arity::kMulticlass) {
    for (int k = 0; k < cm.classes(); ++k) {
      const BinaryCounts b = OneVsRest(cm, k);
      ClassMetrics m;
      m.cls = static_cast<PatchClass>(k);
      m.support = b.tp + b.fn;
      m.sensitivity = Ratio(b.tp, b.tp + b.fn);
      m.specificity = Ratio(b.tn, b.tn + b.fp);
      m.precision = Ratio(b.tp, b.tp + b.fp);
      m.f1 = HarmonicMean(m.precision, m.sensitivity);
      r->per_class.push_back(m);
    }
  }
  return r;
}

absl::StatusOr<BinaryCounts> SlideCounts(std::span<const Verdict> predicted,
                                         std::span<const Verdict> truth) {
  if (predicted.size() != truth.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "length mismatch: ", predicted.size(), " verdicts but ", truth.size(),
        " truths"));
  }
  BinaryCounts b;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool pos = predicted[i] == Verdict::kMelanoma;
    if (truth[i] == Verdict::kMelanoma) {
      (pos ? b.tp : b.fn) += 1;
    } else {
      (pos ? b.fp : b.tn) += 1;
    }
  }
  return b;
}

std::string MetricsCsvHeader() {
  return "model,acc_pct,f1,sens,spec,precision,coverage,n\n";
}

std::string MetricsCsvRow(const std::string& model, const MetricsReport& r) {
  return absl::StrCat(model, ",", CsvField(r.accuracy, true), ",",
                      CsvField(r.f1), ",", CsvField(r.sensitivity), ",",
                      CsvField(r.specificity), ",", CsvField(r.precision), ",",
                      CsvField(r.coverage), ",", r.total, "\n");
}

std::string MetricsReportToJson(const std::string& model,
                                const MetricsReport& r,
                                const ConfusionMatrix* cm) {
  Json j;
  j["model"] = model;
  j["n"] = r.total;
  j["accuracy"] = OptionalJson(r.accuracy);
  j["f1"] = OptionalJson(r.f1);
  j["sensitivity"] = OptionalJson(r.sensitivity);
  j["specificity"] = OptionalJson(r.specificity);
  j["precision"] = OptionalJson(r.precision);
  j["coverage"] = OptionalJson(r.coverage);
  if (!r.per_class.empty()) {
    Json per = Json::array();
    for (const ClassMetrics& m : r.per_class) {
      per.push_back({{"class", PatchClassName(m.cls)},
                     {"support", m.support},
                     {"sensitivity", OptionalJson(m.sensitivity)},
                     {"specificity", OptionalJson(m.specificity)},
                     {"precision", OptionalJson(m.precision)},
                     {"f1", OptionalJson(m.f1)}});
    }
    j["per_class"] = std::move(per);
  }
  if (cm != nullptr) {
    Json rows = Json::array();
    for (int t = 0; t < cm->classes(); ++t) {
      Json row = Json::array();
      for (int p = 0; p < cm->classes(); ++p) row.push_back(cm->At(t, p));
      rows.push_back(std::move(row));
    }
    j["confusion"] = std::move(rows);
    j["unseen"] = cm->unseen();
  }
  return j.dump(2) + "\n";
}

}  // namespace melanoscope
