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

/// @file evaluation.h
/// @brief Confusion matrices and classification metrics.
///
/// Malignant is the positive class. A ratio whose denominator is zero is
/// reported as absent (std::nullopt), never as 0.

#ifndef MELANOSCOPE_EVALUATION_H_
#define MELANOSCOPE_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "melanoscope/labels.h"

namespace melanoscope {

/// k x k counts, rows = truth, columns = prediction, class order
/// (Benign, Malignant[, Normal]). Unseen predictions are kept aside.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Arity arity = Arity::kBinary);

  Arity arity() const { return arity_; }
  int classes() const { return ArityWidth(arity_); }

  int64_t At(int truth, int pred) const { return counts_[truth * classes() + pred]; }
  void Add(int truth, int pred, int64_t n = 1) {
    counts_[truth * classes() + pred] += n;
  }
  void AddUnseen(int64_t n = 1) { unseen_ += n; }

  int64_t total() const;  // classified pairs
  int64_t trace() const;
  int64_t unseen() const { return unseen_; }

  /// Fraction of pairs that received a class; absent when there are none.
  std::optional<double> coverage() const;

  /// Element-wise sum. Fails if the arities differ.
  absl::Status Merge(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Arity arity_;
  std::vector<int64_t> counts_;
  int64_t unseen_ = 0;
};

/// Builds the matrix from paired predictions and truths. Truth labels must
/// fit the arity (no Normal truths in a binary matrix); so must predictions.
absl::StatusOr<ConfusionMatrix> Confusion(std::span<const PatchClass> preds,
                                          std::span<const Label> truths,
                                          Arity arity);

struct BinaryCounts {
  int64_t tp = 0;
  int64_t fn = 0;
  int64_t fp = 0;
  int64_t tn = 0;

  int64_t total() const { return tp + fn + fp + tn; }
};

/// One-vs-rest counts for class `positive`.
BinaryCounts OneVsRest(const ConfusionMatrix& cm, int positive);

struct ClassMetrics {
  PatchClass cls = PatchClass::kBenign;
  int64_t support = 0;  // truth count
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
};

struct MetricsReport {
  int64_t total = 0;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
  std::optional<double> coverage;
  /// One-vs-rest breakdown, filled for multiclass matrices.
  std::vector<ClassMetrics> per_class;
};

/// Fails when counts.total() is zero.
absl::StatusOr<MetricsReport> Metrics(const BinaryCounts& counts);

/// Top-level rates treat Malignant as positive; accuracy is trace / total.
absl::StatusOr<MetricsReport> Metrics(const ConfusionMatrix& cm);

/// Slide-level counts with Melanoma as positive.
absl::StatusOr<BinaryCounts> SlideCounts(std::span<const Verdict> predicted,
                                         std::span<const Verdict> truth);

/// Header: model,acc_pct,f1,sens,spec,precision,coverage,n. Absent values
/// are empty fields.
std::string MetricsCsvHeader();
std::string MetricsCsvRow(const std::string& model, const MetricsReport& r);

std::string MetricsReportToJson(const std::string& model,
                                const MetricsReport& r,
                                const ConfusionMatrix* cm = nullptr);

}  // namespace melanoscope

#endif  // MELANOSCOPE_EVALUATION_H_
