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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "labelbalance/image.hpp"

namespace lb::fed {

enum class LayerKind { kDense, kConv3x3, kMaxPool2, kReLU, kSoftmax };

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int in = 0;    // Dense: input features; Conv3x3: input channels
  int out = 0;   // Dense: output features; Conv3x3: output channels

  bool operator==(const LayerSpec&) const = default;
};

// Activation shape, channel-planar.
struct ActShape {
  int channels = 0;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  bool operator==(const ActShape&) const = default;
};

// Sequential network description. The last layer must be Softmax; the
// logits are the activations entering it. Conv3x3 uses zero "same" padding,
// MaxPool2 is 2x2 with stride 2.
class ModelSchema {
 public:
  ModelSchema() = default;
  ModelSchema(ImageShape input, std::vector<LayerSpec> layers);

  ImageShape image_shape() const noexcept { return input_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t num_params() const noexcept { return num_params_; }
  std::size_t param_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t param_count(std::size_t layer) const;
  ActShape input_shape(std::size_t layer) const { return shapes_[layer]; }
  ActShape output_shape(std::size_t layer) const { return shapes_[layer + 1]; }
  std::size_t input_size() const { return shapes_.front().size(); }
  int num_classes() const { return static_cast<int>(shapes_.back().size()); }

  // e.g. "conv3x3(1,8) relu maxpool2 dense(256,10) softmax"
  std::string Describe() const;
  static ModelSchema Parse(ImageShape input, const std::string& description);

  bool operator==(const ModelSchema& other) const {
    return input_ == other.input_ && layers_ == other.layers_;
  }

 private:
  ImageShape input_;
  std::vector<LayerSpec> layers_;
  std::vector<ActShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

ModelSchema MakeLogisticRegression(ImageShape input, int num_classes);
ModelSchema MakeMlp(ImageShape input, int num_classes, int hidden = 256);
// Conv3x3(C,8) ReLU MaxPool2 Conv3x3(8,16) ReLU MaxPool2 Dense Softmax
ModelSchema MakeSmallCnn(ImageShape input, int num_classes);
// "logreg", "mlp" or "cnn".
ModelSchema MakeModel(const std::string& name, ImageShape input, int num_classes);

struct ModelParams {
  ModelSchema schema;
  std::vector<float> values;
};

// Uniform(+-sqrt(6 / fan_in)) weights, zero biases.
ModelParams InitParams(const ModelSchema& schema, std::uint64_t seed);

// Inputs already at model scale: CHW, pixel / 255.
struct Batch {
  std::size_t size = 0;
  std::vector<float> inputs;
  std::vector<int> labels;
};

// HWC [0,255] images -> CHW [0,1] model inputs.
void EncodeImage(const LabeledImage& image, std::span<float> out);
Batch MakeBatch(std::span<const LabeledImage* const> images);

template <class T>
struct ForwardCache {
  std::size_t batch = 0;
  // activations[l] is the batch-major input of layer l; the last entry holds
  // the logits.
  std::vector<std::vector<T>> activations;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
};

// Logits for `batch` examples (batch x classes). Raises ShapeMismatch when
// the inputs do not match the schema.
template <class T>
std::vector<T> Forward(const ModelSchema& schema, std::span<const T> params,
                       std::span<const T> inputs, std::size_t batch, ForwardCache<T>* cache);

// Mean softmax cross-entropy; writes d(loss)/d(logits) when `grad` is set.
template <class T>
T SoftmaxCrossEntropy(std::span<const T> logits, std::span<const int> labels, int num_classes,
                      std::vector<T>* grad);

// Gradient of the mean cross-entropy with respect to the flat parameters,
// from the activations captured by Forward on the same batch. Returns the
// loss through `loss` when non-null.
template <class T>
std::vector<T> Backward(const ModelSchema& schema, std::span<const T> params,
                        const ForwardCache<T>& cache, std::span<const int> labels,
                        T* loss = nullptr);

// Convenience wrappers over float parameters.
std::vector<float> Logits(const ModelParams& params, const Batch& batch);
float Loss(const ModelParams& params, const Batch& batch);
std::vector<float> Gradient(const ModelParams& params, const Batch& batch, float* loss = nullptr);

extern template std::vector<float> Forward<float>(const ModelSchema&, std::span<const float>,
                                                  std::span<const float>, std::size_t,
                                                  ForwardCache<float>*);
extern template std::vector<double> Forward<double>(const ModelSchema&, std::span<const double>,
                                                    std::span<const double>, std::size_t,
                                                    ForwardCache<double>*);
extern template float SoftmaxCrossEntropy<float>(std::span<const float>, std::span<const int>, int,
                                                 std::vector<float>*);
extern template double SoftmaxCrossEntropy<double>(std::span<const double>, std::span<const int>,
                                                   int, std::vector<double>*);
extern template std::vector<float> Backward<float>(const ModelSchema&, std::span<const float>,
                                                   const ForwardCache<float>&,
                                                   std::span<const int>, float*);
extern template std::vector<double> Backward<double>(const ModelSchema&, std::span<const double>,
                                                     const ForwardCache<double>&,
                                                     std::span<const int>, double*);

}  // namespace lb::fed
