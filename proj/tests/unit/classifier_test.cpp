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

#include "melanoscope/classifier.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace melanoscope {
namespace {

TensorPatch SolidPatch(Rgb c, const NormalizationStats& stats = ImageNetStats()) {
  auto t = NormalizePatch(RgbTile(224, 224, c), stats);
  EXPECT_TRUE(t.ok());
  return *t;
}

std::unique_ptr<Backend> Mock(Arity arity = Arity::kMulticlass) {
  BackendDescriptor d;
  d.arity = arity;
  auto b = LoadBackend(d);
  EXPECT_TRUE(b.ok()) << b.status();
  return std::move(*b);
}

TEST(SoftmaxTest, MatchesDefinitionAndIsShiftInvariant) {
  const std::vector<double> x = {1.0, 2.0, -3.0};
  const ProbabilityVector p = Softmax(x);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(-3.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(p[1], std::exp(2.0) / z, 1e-15);
  const std::vector<double> big = {1001.0, 1002.0, 997.0};
  const ProbabilityVector q = Softmax(big);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  EXPECT_OK(ValidateProbabilityVector(q));
}

TEST(ProbabilityVectorTest, Validation) {
  EXPECT_OK(ValidateProbabilityVector({{0.25, 0.75}}));
  EXPECT_OK(ValidateProbabilityVector({{0.2, 0.3, 0.5}}));
  EXPECT_FALSE(ValidateProbabilityVector({{1.0}}).ok());
  EXPECT_FALSE(ValidateProbabilityVector({{0.25, 0.25, 0.25, 0.25}}).ok());
  EXPECT_FALSE(ValidateProbabilityVector({{0.5, 0.6}}).ok());
  EXPECT_FALSE(ValidateProbabilityVector({{-0.1, 1.1}}).ok());
  EXPECT_FALSE(ValidateProbabilityVector({{NAN, 1.0}}).ok());
  EXPECT_OK(ValidateProbabilityVector({{0.5, 0.5 + 5e-7}}));
}

TEST(ArgMaxTest, TiesGoToLowestIndex) {
  EXPECT_EQ(ArgMax({{0.4, 0.4, 0.2}}), 0u);
  EXPECT_EQ(ArgMax({{0.2, 0.4, 0.4}}), 1u);
  EXPECT_EQ(ArgMax({{0.1, 0.2, 0.7}}), 2u);
}

TEST(BackendKindTest, Names) {
  EXPECT_EQ(*ParseBackendKind("mock"), BackendKind::kMock);
  EXPECT_EQ(*ParseBackendKind("neural"), BackendKind::kNeural);
  EXPECT_EQ(*ParseBackendKind("onnx"), BackendKind::kNeural);
  EXPECT_FALSE(ParseBackendKind("tensorrt").ok());
  EXPECT_STREQ(BackendKindName(BackendKind::kMock), "mock");
}

TEST(MockBackendTest, MeanColorUndoesNormalization) {
  const auto mean = MeanColor(SolidPatch({90, 60, 150}), ImageNetStats());
  EXPECT_NEAR(mean[0], 90.0, 1e-3);
  EXPECT_NEAR(mean[1], 60.0, 1e-3);
  EXPECT_NEAR(mean[2], 150.0, 1e-3);
}

TEST(MockBackendTest, LogitsAreNegativeScaledDistances) {
  const auto l = MockLogits({90, 60, 150}, Arity::kMulticlass);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_DOUBLE_EQ(l[0], 0.0);
  EXPECT_NEAR(l[1], -std::sqrt(60.0 * 60 + 20 * 20 + 60 * 60) / kMockTemperature,
              1e-12);
  EXPECT_EQ(MockLogits({0, 0, 0}, Arity::kBinary).size(), 2u);
}

// An anchor-colored patch clears the default 0.99 threshold for its class.
TEST(MockBackendTest, AnchorsAreConfidentlyClassified) {
  for (Arity arity : {Arity::kBinary, Arity::kMulticlass}) {
    auto backend = Mock(arity);
    for (int k = 0; k < ArityWidth(arity); ++k) {
      const TensorPatch t = SolidPatch(kMockAnchors[k]);
      auto probs = Predict(*backend, std::span(&t, 1));
      ASSERT_OK(probs);
      EXPECT_EQ(ArgMax((*probs)[0]), static_cast<size_t>(k));
      EXPECT_GT((*probs)[0][k], 0.99);
    }
  }
}

TEST(MockBackendTest, MidpointIsNotConfident) {
  auto backend = Mock();
  const TensorPatch t = SolidPatch({120, 50, 120});  // between Benign and Malignant
  auto probs = Predict(*backend, std::span(&t, 1));
  ASSERT_OK(probs);
  EXPECT_NEAR((*probs)[0][0], (*probs)[0][1], 1e-6);
  EXPECT_LT((*probs)[0][0], 0.99);
}

TEST(PredictTest, OutputIndependentOfWorkerCount) {
  auto backend = Mock();
  std::mt19937 rng(4);
  std::vector<TensorPatch> batch;
  for (int i = 0; i < 53; ++i) {
    batch.push_back(SolidPatch({static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng()),
                                static_cast<uint8_t>(rng())}));
  }
  auto one = Predict(*backend, batch, 1);
  ASSERT_OK(one);
  ASSERT_EQ(one->size(), batch.size());
  for (int workers : {2, 3, 8}) {
    auto many = Predict(*backend, batch, workers);
    ASSERT_OK(many);
    EXPECT_EQ(*many, *one) << workers;
  }
  for (const auto& p : *one) EXPECT_OK(ValidateProbabilityVector(p));
}

TEST(PredictTest, RejectsBadInput) {
  auto backend = Mock();
  EXPECT_FALSE(Predict(*backend, {}).ok());
  TensorPatch wrong;
  wrong.data.resize(10);
  EXPECT_FALSE(Predict(*backend, std::span(&wrong, 1)).ok());
}

TEST(LoadBackendTest, ValidatesDescriptor) {
  BackendDescriptor d;
  d.input_size = 256;
  EXPECT_FALSE(LoadBackend(d).ok());
  d = {};
  d.input_channels = 1;
  EXPECT_FALSE(LoadBackend(d).ok());
  d = {};
  d.stats.stddev[0] = 0;
  EXPECT_FALSE(LoadBackend(d).ok());
  d = {};
  d.kind = BackendKind::kNeural;
  EXPECT_FALSE(LoadBackend(d).ok());  // no model path
  EXPECT_FALSE(LoadBackend(d, std::filesystem::path("/nonexistent.onnx")).ok());
}

}  // namespace
}  // namespace melanoscope
