/*
 * Copyright 2026 The labelbalance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "expect_error.hpp"
#include "gradcheck.hpp"
#include "labelbalance/model.hpp"

namespace {

using lb::ErrorCode;
using namespace lb::fed;

TEST(Schema, ParameterCounts) {
  const lb::ImageShape shape{16, 16, 1};
  EXPECT_EQ(MakeLogisticRegression(shape, 10).num_params(), 256u * 10 + 10);
  EXPECT_EQ(MakeMlp(shape, 10, 32).num_params(), (256u * 32 + 32) + (32 * 10 + 10));
  const auto cnn = MakeSmallCnn(shape, 10);
  // conv(1,8): 72+8, conv(8,16): 1152+16, dense(4*4*16, 10): 2560+10
  EXPECT_EQ(cnn.num_params(), 80u + 1168 + 2570);
  EXPECT_EQ(cnn.num_classes(), 10);
  EXPECT_EQ(cnn.input_size(), 256u);
}

TEST(Schema, DescribeParseRoundTrip) {
  const lb::ImageShape shape{28, 28, 1};
  for (const char* name : {"logreg", "mlp", "cnn"}) {
    const auto schema = MakeModel(name, shape, 10);
    EXPECT_TRUE(ModelSchema::Parse(shape, schema.Describe()) == schema) << name;
  }
  EXPECT_EQ(MakeSmallCnn({8, 8, 1}, 3).Describe(),
            "conv3x3(1,8) relu maxpool2 conv3x3(8,16) relu maxpool2 dense(64,3) softmax");
}

TEST(Schema, RejectsInvalidSequences) {
  const lb::ImageShape shape{4, 4, 1};
  EXPECT_LB_ERROR(ModelSchema::Parse(shape, "dense(16,3)"), ErrorCode::kSchemaMismatch);
  EXPECT_LB_ERROR(ModelSchema::Parse(shape, "dense(15,3) softmax"), ErrorCode::kSchemaMismatch);
  EXPECT_LB_ERROR(ModelSchema::Parse(shape, "conv3x3(2,3) softmax"), ErrorCode::kSchemaMismatch);
  EXPECT_LB_ERROR(ModelSchema::Parse(shape, "softmax dense(16,3) softmax"), ErrorCode::kSchemaMismatch);
  EXPECT_LB_ERROR(ModelSchema::Parse(shape, "pool softmax"), ErrorCode::kSchemaMismatch);
  EXPECT_LB_ERROR(MakeModel("resnet", shape, 3), ErrorCode::kConfig);
}

TEST(Encode, ChannelPlanarAndScaled) {
  lb::LabeledImage img{{1, 2, 3}, {0, 51, 102, 153, 204, 255}, 0};
  std::vector<float> out(6);
  EncodeImage(img, out);
  const std::vector<float> want = {0.f, 153 / 255.f, 51 / 255.f, 204 / 255.f, 102 / 255.f, 1.f};
  for (int i = 0; i < 6; ++i) EXPECT_FLOAT_EQ(out[i], want[i]);
}

TEST(Forward, LogisticRegressionByHand) {
  const auto schema = ModelSchema::Parse({1, 2, 1}, "dense(2,2) softmax");
  // weights row-major [out][in], then biases
  const std::vector<double> params = {1, 2, -1, 0.5, 0.1, -0.2};
  const std::vector<double> x = {0.5, 0.25};
  const auto logits = Forward<double>(schema, params, x, 1, nullptr);
  ASSERT_EQ(logits.size(), 2u);
  EXPECT_DOUBLE_EQ(logits[0], 1 * 0.5 + 2 * 0.25 + 0.1);
  EXPECT_DOUBLE_EQ(logits[1], -0.5 + 0.125 - 0.2);
  const std::vector<int> label = {1};
  std::vector<double> grad;
  const double loss = SoftmaxCrossEntropy<double>(logits, label, 2, &grad);
  const double p1 = std::exp(logits[1]) / (std::exp(logits[0]) + std::exp(logits[1]));
  EXPECT_NEAR(loss, -std::log(p1), 1e-12);
  EXPECT_NEAR(grad[0], 1 - p1, 1e-12);
  EXPECT_NEAR(grad[1], p1 - 1, 1e-12);
}

TEST(Forward, ShapeAndLabelErrors) {
  const auto schema = ModelSchema::Parse({1, 2, 1}, "dense(2,2) softmax");
  const std::vector<double> params(6, 0.0);
  const std::vector<double> x = {0.5};
  EXPECT_LB_ERROR(Forward<double>(schema, params, x, 1, nullptr), ErrorCode::kShapeMismatch);
  const std::vector<double> logits = {0, 0};
  const std::vector<int> bad = {2};
  EXPECT_LB_ERROR(SoftmaxCrossEntropy<double>(logits, bad, 2, nullptr), ErrorCode::kLabelOutOfRange);
}

TEST(Forward, CrossEntropyIsStableForLargeLogits) {
  const std::vector<float> logits = {1000.f, -1000.f, 0.f};
  const std::vector<int> label = {0};
  EXPECT_NEAR(SoftmaxCrossEntropy<float>(logits, label, 3, nullptr), 0.0f, 1e-6);
}

TEST(Forward, FloatAndDoubleAgree) {
  lb::Rng rng(1);
  const auto schema = MakeSmallCnn({8, 8, 1}, 4);
  const auto pd = oracle::RandomParams(schema, rng);
  const auto xd = oracle::RandomInputs(schema, 3, rng);
  const std::vector<float> pf(pd.begin(), pd.end());
  const std::vector<float> xf(xd.begin(), xd.end());
  const auto ld = Forward<double>(schema, pd, xd, 3, nullptr);
  const auto lf = Forward<float>(schema, pf, xf, 3, nullptr);
  for (std::size_t i = 0; i < ld.size(); ++i) EXPECT_NEAR(lf[i], ld[i], 1e-4);
}

struct GradCase {
  const char* description;
  lb::ImageShape shape;
  std::vector<std::size_t> layers;
};

TEST(Backward, FiniteDifferenceAgreement) {
  const std::vector<GradCase> cases = {
      {"dense(12,3) softmax", {2, 2, 3}, {0}},
      {"dense(16,6) relu dense(6,4) softmax", {4, 4, 1}, {0, 2}},
      {"conv3x3(2,3) relu maxpool2 dense(12,3) softmax", {4, 4, 2}, {0, 3}},
      {"conv3x3(1,4) relu maxpool2 conv3x3(4,6) relu maxpool2 dense(24,5) softmax", {8, 8, 1}, {0, 3, 6}},
  };
  lb::Rng rng(2);
  for (const auto& c : cases) {
    const auto schema = ModelSchema::Parse(c.shape, c.description);
    const auto params = oracle::RandomParams(schema, rng);
    const auto inputs = oracle::RandomInputs(schema, 3, rng);
    std::vector<int> labels;
    for (int b = 0; b < 3; ++b) labels.push_back(static_cast<int>(rng.UniformIndex(schema.num_classes())));
    const auto report = oracle::CheckGradient(schema, params, inputs, labels, c.layers, 60, 1e-3, rng);
    EXPECT_EQ(report.checked, 60u) << c.description;
    EXPECT_LT(report.max_relative_error, 1e-4) << c.description;
  }
}

TEST(Backward, FloatWrapperMatchesDouble) {
  lb::Rng rng(3);
  const auto schema = MakeMlp({4, 4, 1}, 3, 8);
  ModelParams params = InitParams(schema, 4);
  Batch batch{2, std::vector<float>(32), {0, 2}};
  for (float& v : batch.inputs) v = static_cast<float>(rng.Uniform());
  float loss = 0;
  const auto gf = Gradient(params, batch, &loss);
  EXPECT_NEAR(loss, Loss(params, batch), 1e-6);
  const std::vector<double> pd(params.values.begin(), params.values.end());
  const std::vector<double> xd(batch.inputs.begin(), batch.inputs.end());
  ForwardCache<double> cache;
  Forward<double>(schema, pd, xd, 2, &cache);
  const auto gd = Backward<double>(schema, pd, cache, batch.labels);
  for (std::size_t i = 0; i < gd.size(); ++i) EXPECT_NEAR(gf[i], gd[i], 1e-5);
}

TEST(Init, HeUniformWeightsZeroBiases) {
  const auto schema = MakeLogisticRegression({4, 4, 1}, 3);
  const auto p = InitParams(schema, 5);
  const double bound = std::sqrt(6.0 / 16);
  for (std::size_t i = 0; i < 48; ++i) EXPECT_LE(std::abs(p.values[i]), bound);
  for (std::size_t i = 48; i < 51; ++i) EXPECT_EQ(p.values[i], 0.0f);
  EXPECT_EQ(p.values, InitParams(schema, 5).values);
}

}  // namespace
