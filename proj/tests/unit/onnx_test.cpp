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

#include <cmath>
#include <fstream>

#include "gtest/gtest.h"
#include "json.hpp"
#include "melanoscope/classifier.h"
#include "onnx_runtime.h"
#include "test_util.h"

namespace melanoscope {
namespace {

const std::filesystem::path kFixtures = MELANOSCOPE_FIXTURE_DIR;

nlohmann::json Reference() {
  std::ifstream in(kFixtures / "onnx_reference.json");
  return nlohmann::json::parse(in);
}

// Recomputes the closed-form input the reference logits were produced from.
float PatternValue(int64_t b, int64_t c, int64_t y, int64_t x) {
  return static_cast<float>(
      std::sin(0.37 * (b + 1) + 0.11 * c + 0.013 * y + 0.007 * x) * 2.0);
}

onnxrt::Tensor PatternTensor(int64_t n) {
  onnxrt::Tensor t = onnxrt::Tensor::Float({n, 3, 224, 224});
  size_t k = 0;
  for (int64_t b = 0; b < n; ++b)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y = 0; y < 224; ++y)
        for (int64_t x = 0; x < 224; ++x) t.f[k++] = PatternValue(b, c, y, x);
  return t;
}

TensorPatch PatternPatch(int64_t b) {
  onnxrt::Tensor one = PatternTensor(b + 1);
  const size_t n = 3 * 224 * 224;
  TensorPatch p;
  p.data.assign(one.f.end() - static_cast<std::ptrdiff_t>(n), one.f.end());
  return p;
}

class OnnxParityTest : public ::testing::TestWithParam<const char*> {};

TEST_P(OnnxParityTest, MatchesOnnxRuntime) {
  const nlohmann::json ref = Reference()["models"][GetParam()];
  const int64_t batch = ref["batch"];
  auto model = onnxrt::Model::Load(kFixtures / GetParam());
  ASSERT_OK(model);
  auto out = model->Run(PatternTensor(batch));
  ASSERT_OK(out);
  const auto& logits = ref["logits"];
  const int64_t width = static_cast<int64_t>(logits[0].size());
  ASSERT_EQ(out->shape, (std::vector<int64_t>{batch, width}));
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t j = 0; j < width; ++j) {
      EXPECT_NEAR(out->f[b * width + j], logits[b][j].get<double>(), 1e-4)
          << GetParam() << " [" << b << "," << j << "]";
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Fixtures, OnnxParityTest,
                         ::testing::Values("tiny_multiclass.onnx",
                                         "tiny_binary_fixed2.onnx",
                                         "elementwise_ops.onnx"));

TEST(OnnxModelTest, DeclaredShapes) {
  auto model = onnxrt::Model::Load(kFixtures / "tiny_multiclass.onnx");
  ASSERT_OK(model);
  ASSERT_EQ(model->input_dims().size(), 4u);
  EXPECT_FALSE(model->input_dims()[0].has_value());
  EXPECT_EQ(model->input_dims()[1], 3);
  auto fixed = onnxrt::Model::Load(kFixtures / "tiny_binary_fixed2.onnx");
  ASSERT_OK(fixed);
  EXPECT_EQ(fixed->input_dims()[0], 2);
}

TEST(OnnxModelTest, RejectsGarbageAndMissingFiles) {
  EXPECT_FALSE(onnxrt::Model::Parse("not a protobuf").ok());
  EXPECT_FALSE(onnxrt::Model::Load(kFixtures / "absent.onnx").ok());
}

TEST(OnnxModelTest, RejectsWrongInputShape) {
  auto model = onnxrt::Model::Load(kFixtures / "tiny_multiclass.onnx");
  ASSERT_OK(model);
  EXPECT_FALSE(model->Run(onnxrt::Tensor::Float({1, 3, 10})).ok());
}

TEST(OnnxModelTest, OpRegistry) {
  for (const char* op : {"Conv", "Gemm", "MaxPool", "AveragePool", "Relu",
                         "BatchNormalization", "Softmax", "Reshape", "Flatten"}) {
    EXPECT_NE(onnxrt::FindOp(op), nullptr) << op;
  }
  EXPECT_EQ(onnxrt::FindOp("LSTM"), nullptr);
}

absl::StatusOr<std::unique_ptr<Backend>> Neural(const char* file, Arity arity) {
  BackendDescriptor d;
  d.kind = BackendKind::kNeural;
  d.arity = arity;
  return LoadBackend(d, kFixtures / file);
}

TEST(OnnxBackendTest, PredictIsSoftmaxOfReferenceLogits) {
  auto backend = Neural("tiny_multiclass.onnx", Arity::kMulticlass);
  ASSERT_OK(backend);
  const auto logits = Reference()["models"]["tiny_multiclass.onnx"]["logits"];
  std::vector<TensorPatch> batch;
  for (int b = 0; b < 3; ++b) batch.push_back(PatternPatch(b));
  for (int workers : {1, 3}) {
    auto probs = Predict(**backend, batch, workers);
    ASSERT_OK(probs);
    for (int b = 0; b < 3; ++b) {
      const ProbabilityVector want = Softmax(logits[b].get<std::vector<double>>());
      for (int j = 0; j < 3; ++j) EXPECT_NEAR((*probs)[b][j], want[j], 1e-4);
    }
  }
}

// A fixed-batch model still accepts any number of patches.
TEST(OnnxBackendTest, FixedBatchPadsAndSplits) {
  auto backend = Neural("tiny_binary_fixed2.onnx", Arity::kBinary);
  ASSERT_OK(backend);
  const auto logits = Reference()["models"]["tiny_binary_fixed2.onnx"]["logits"];
  std::vector<TensorPatch> batch = {PatternPatch(0), PatternPatch(1),
                                    PatternPatch(0)};
  auto probs = Predict(**backend, batch);
  ASSERT_OK(probs);
  ASSERT_EQ(probs->size(), 3u);
  for (int b = 0; b < 3; ++b) {
    const ProbabilityVector want =
        Softmax(logits[b % 2].get<std::vector<double>>());
    for (int j = 0; j < 2; ++j) EXPECT_NEAR((*probs)[b][j], want[j], 1e-4);
  }
}

TEST(OnnxBackendTest, LoadRejectsShapeMismatch) {
  auto small = Neural("tiny_input64.onnx", Arity::kMulticlass);
  ASSERT_FALSE(small.ok());
  EXPECT_NE(small.status().message().find("shape mismatch"), std::string::npos);
  auto wide = Neural("tiny_width4.onnx", Arity::kMulticlass);
  ASSERT_FALSE(wide.ok());
  EXPECT_NE(wide.status().message().find("shape mismatch"), std::string::npos);
  EXPECT_FALSE(Neural("tiny_multiclass.onnx", Arity::kBinary).ok());
}

}  // namespace
}  // namespace melanoscope
