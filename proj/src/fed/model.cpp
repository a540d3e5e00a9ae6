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

#include "labelbalance/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

#include "labelbalance/error.hpp"
#include "labelbalance/rng.hpp"

namespace lb::fed {

// ------------------------------------------------------------------ schema

ModelSchema::ModelSchema(ImageShape input, std::vector<LayerSpec> layers)
    : input_(input), layers_(std::move(layers)) {
  if (input.height < 1 || input.width < 1 || input.channels < 1) {
    Fail(ErrorCode::kShapeMismatch, "model input must be non-empty");
  }
  if (layers_.empty() || layers_.back().kind != LayerKind::kSoftmax) {
    Fail(ErrorCode::kSchemaMismatch, "model must end with a softmax layer");
  }
  ActShape shape{input.channels, input.height, input.width};
  shapes_.push_back(shape);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& layer = layers_[l];
    offsets_.push_back(num_params_);
    switch (layer.kind) {
      case LayerKind::kDense:
        if (layer.in != static_cast<int>(shape.size()) || layer.out < 1) {
          Fail(ErrorCode::kSchemaMismatch, "dense(" + std::to_string(layer.in) + "," +
                                               std::to_string(layer.out) + ") after " +
                                               std::to_string(shape.size()) + " features");
        }
        shape = {layer.out, 1, 1};
        break;
      case LayerKind::kConv3x3:
        if (layer.in != shape.channels || layer.out < 1) {
          Fail(ErrorCode::kSchemaMismatch, "conv3x3 input channels do not match");
        }
        shape.channels = layer.out;
        break;
      case LayerKind::kMaxPool2:
        if (shape.height < 2 || shape.width < 2) {
          Fail(ErrorCode::kSchemaMismatch, "maxpool2 needs at least 2x2 input");
        }
        shape.height /= 2;
        shape.width /= 2;
        break;
      case LayerKind::kReLU:
        break;
      case LayerKind::kSoftmax:
        if (l + 1 != layers_.size()) Fail(ErrorCode::kSchemaMismatch, "softmax must be last");
        break;
    }
    num_params_ += param_count(l);
    shapes_.push_back(shape);
  }
}

std::size_t ModelSchema::param_count(std::size_t layer) const {
  const LayerSpec& spec = layers_[layer];
  const auto in = static_cast<std::size_t>(spec.in);
  const auto out = static_cast<std::size_t>(spec.out);
  switch (spec.kind) {
    case LayerKind::kDense: return in * out + out;
    case LayerKind::kConv3x3: return out * in * 9 + out;
    default: return 0;
  }
}

std::string ModelSchema::Describe() const {
  std::ostringstream out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0) out << ' ';
    const LayerSpec& spec = layers_[l];
    switch (spec.kind) {
      case LayerKind::kDense: out << "dense(" << spec.in << ',' << spec.out << ')'; break;
      case LayerKind::kConv3x3: out << "conv3x3(" << spec.in << ',' << spec.out << ')'; break;
      case LayerKind::kMaxPool2: out << "maxpool2"; break;
      case LayerKind::kReLU: out << "relu"; break;
      case LayerKind::kSoftmax: out << "softmax"; break;
    }
  }
  return out.str();
}

ModelSchema ModelSchema::Parse(ImageShape input, const std::string& description) {
  static const std::regex kWithArgs(R"((dense|conv3x3)\((\d+),(\d+)\))");
  std::istringstream in(description);
  std::string token;
  std::vector<LayerSpec> layers;
  while (in >> token) {
    std::smatch match;
    if (std::regex_match(token, match, kWithArgs)) {
      layers.push_back({match[1] == "dense" ? LayerKind::kDense : LayerKind::kConv3x3,
                        std::stoi(match[2]), std::stoi(match[3])});
    } else if (token == "maxpool2") {
      layers.push_back({LayerKind::kMaxPool2});
    } else if (token == "relu") {
      layers.push_back({LayerKind::kReLU});
    } else if (token == "softmax") {
      layers.push_back({LayerKind::kSoftmax});
    } else {
      Fail(ErrorCode::kSchemaMismatch, "unknown layer token '" + token + "'");
    }
  }
  return ModelSchema(input, std::move(layers));
}

ModelSchema MakeLogisticRegression(ImageShape input, int num_classes) {
  return ModelSchema(input, {{LayerKind::kDense, static_cast<int>(input.size()), num_classes},
                             {LayerKind::kSoftmax}});
}

ModelSchema MakeMlp(ImageShape input, int num_classes, int hidden) {
  return ModelSchema(input, {{LayerKind::kDense, static_cast<int>(input.size()), hidden},
                             {LayerKind::kReLU},
                             {LayerKind::kDense, hidden, num_classes},
                             {LayerKind::kSoftmax}});
}

ModelSchema MakeSmallCnn(ImageShape input, int num_classes) {
  const int features = 16 * (input.height / 4) * (input.width / 4);
  return ModelSchema(input, {{LayerKind::kConv3x3, input.channels, 8},
                             {LayerKind::kReLU},
                             {LayerKind::kMaxPool2},
                             {LayerKind::kConv3x3, 8, 16},
                             {LayerKind::kReLU},
                             {LayerKind::kMaxPool2},
                             {LayerKind::kDense, features, num_classes},
                             {LayerKind::kSoftmax}});
}

ModelSchema MakeModel(const std::string& name, ImageShape input, int num_classes) {
  if (name == "logreg") return MakeLogisticRegression(input, num_classes);
  if (name == "mlp") return MakeMlp(input, num_classes);
  if (name == "cnn") return MakeSmallCnn(input, num_classes);
  Fail(ErrorCode::kConfig, "unknown model '" + name + "' (expected logreg, mlp or cnn)");
}

ModelParams InitParams(const ModelSchema& schema, std::uint64_t seed) {
  ModelParams params{schema, std::vector<float>(schema.num_params(), 0.0f)};
  Rng rng(seed);
  for (std::size_t l = 0; l < schema.layers().size(); ++l) {
    const LayerSpec& spec = schema.layers()[l];
    if (spec.kind != LayerKind::kDense && spec.kind != LayerKind::kConv3x3) continue;
    const double fan_in = spec.kind == LayerKind::kDense ? spec.in : spec.in * 9.0;
    const double bound = std::sqrt(6.0 / fan_in);
    const std::size_t weights = schema.param_count(l) - static_cast<std::size_t>(spec.out);
    float* first = params.values.data() + schema.param_offset(l);
    for (std::size_t i = 0; i < weights; ++i) first[i] = static_cast<float>(rng.Uniform(-bound, bound));
  }
  return params;
}

// ------------------------------------------------------------------ batches

void EncodeImage(const LabeledImage& image, std::span<float> out) {
  const auto& s = image.shape;
  if (out.size() != s.size()) Fail(ErrorCode::kShapeMismatch, "encode buffer size mismatch");
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < s.channels; ++c) {
      out[static_cast<std::size_t>(c) * plane + p] =
          image.pixels[p * static_cast<std::size_t>(s.channels) + c] / 255.0f;
    }
  }
}

Batch MakeBatch(std::span<const LabeledImage* const> images) {
  Batch batch;
  batch.size = images.size();
  if (images.empty()) return batch;
  const std::size_t d = images.front()->shape.size();
  batch.inputs.resize(d * images.size());
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b]->shape != images.front()->shape) {
      Fail(ErrorCode::kShapeMismatch, "batch mixes image shapes");
    }
    EncodeImage(*images[b], std::span<float>(batch.inputs).subspan(b * d, d));
    batch.labels.push_back(images[b]->label);
  }
  return batch;
}

// ------------------------------------------------------------------ kernels

namespace {

template <class T>
void DenseForward(const LayerSpec& spec, const T* params, const std::vector<T>& in,
                  std::vector<T>& out, std::size_t batch) {
  const auto n_in = static_cast<std::size_t>(spec.in);
  const auto n_out = static_cast<std::size_t>(spec.out);
  const T* weights = params;
  const T* bias = params + n_in * n_out;
  out.assign(batch * n_out, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    const T* x = &in[b * n_in];
    for (std::size_t j = 0; j < n_out; ++j) {
      const T* w = weights + j * n_in;
      T sum = 0;
      for (std::size_t i = 0; i < n_in; ++i) sum += w[i] * x[i];
      out[b * n_out + j] = sum + bias[j];
    }
  }
}

template <class T>
void DenseBackward(const LayerSpec& spec, const T* params, const std::vector<T>& in,
                   const std::vector<T>& dout, T* grad, std::vector<T>* din, std::size_t batch) {
  const auto n_in = static_cast<std::size_t>(spec.in);
  const auto n_out = static_cast<std::size_t>(spec.out);
  T* dweights = grad;
  T* dbias = grad + n_in * n_out;
  if (din) din->assign(batch * n_in, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    const T* x = &in[b * n_in];
    for (std::size_t j = 0; j < n_out; ++j) {
      const T g = dout[b * n_out + j];
      if (g == T(0)) continue;
      dbias[j] += g;
      T* dw = dweights + j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) dw[i] += g * x[i];
      if (din) {
        const T* w = params + j * n_in;
        T* dx = &(*din)[b * n_in];
        for (std::size_t i = 0; i < n_in; ++i) dx[i] += g * w[i];
      }
    }
  }
}

// Valid output range [lo, hi) for tap offset `k` (0..2) on an axis of length n.
inline void TapRange(int k, int n, int& lo, int& hi) {
  lo = std::max(0, 1 - k);
  hi = std::min(n, n + 1 - k);
}

template <class T>
void ConvForward(const LayerSpec& spec, const T* params, const std::vector<T>& in,
                 std::vector<T>& out, ActShape shape, std::size_t batch) {
  const int c_in = spec.in;
  const int c_out = spec.out;
  const int h = shape.height;
  const int w = shape.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const T* weights = params;
  const T* bias = params + static_cast<std::size_t>(c_out) * c_in * 9;
  out.assign(batch * c_out * plane, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (int oc = 0; oc < c_out; ++oc) {
      T* dst = &out[(b * c_out + oc) * plane];
      std::fill(dst, dst + plane, bias[oc]);
      for (int ic = 0; ic < c_in; ++ic) {
        const T* src = &in[(b * c_in + ic) * plane];
        const T* kernel = weights + (static_cast<std::size_t>(oc) * c_in + ic) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          int y0, y1;
          TapRange(ky, h, y0, y1);
          for (int kx = 0; kx < 3; ++kx) {
            int x0, x1;
            TapRange(kx, w, x0, x1);
            const T tap = kernel[ky * 3 + kx];
            for (int y = y0; y < y1; ++y) {
              T* row = dst + static_cast<std::size_t>(y) * w;
              const T* srow = src + static_cast<std::size_t>(y + ky - 1) * w + (kx - 1);
              for (int x = x0; x < x1; ++x) row[x] += tap * srow[x];
            }
          }
        }
      }
    }
  }
}

template <class T>
void ConvBackward(const LayerSpec& spec, const T* params, const std::vector<T>& in,
                  const std::vector<T>& dout, T* grad, std::vector<T>* din, ActShape shape,
                  std::size_t batch) {
  const int c_in = spec.in;
  const int c_out = spec.out;
  const int h = shape.height;
  const int w = shape.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  T* dweights = grad;
  T* dbias = grad + static_cast<std::size_t>(c_out) * c_in * 9;
  if (din) din->assign(batch * c_in * plane, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (int oc = 0; oc < c_out; ++oc) {
      const T* g = &dout[(b * c_out + oc) * plane];
      T bias_sum = 0;
      for (std::size_t p = 0; p < plane; ++p) bias_sum += g[p];
      dbias[oc] += bias_sum;
      for (int ic = 0; ic < c_in; ++ic) {
        const T* src = &in[(b * c_in + ic) * plane];
        T* dsrc = din ? &(*din)[(b * c_in + ic) * plane] : nullptr;
        const std::size_t k_base = (static_cast<std::size_t>(oc) * c_in + ic) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          int y0, y1;
          TapRange(ky, h, y0, y1);
          for (int kx = 0; kx < 3; ++kx) {
            int x0, x1;
            TapRange(kx, w, x0, x1);
            const T tap = params[k_base + ky * 3 + kx];
            T acc = 0;
            for (int y = y0; y < y1; ++y) {
              const T* grow = g + static_cast<std::size_t>(y) * w;
              const std::size_t shift = static_cast<std::size_t>(y + ky - 1) * w + (kx - 1);
              const T* srow = src + shift;
              for (int x = x0; x < x1; ++x) acc += grow[x] * srow[x];
              if (dsrc) {
                T* drow = dsrc + shift;
                for (int x = x0; x < x1; ++x) drow[x] += tap * grow[x];
              }
            }
            dweights[k_base + ky * 3 + kx] += acc;
          }
        }
      }
    }
  }
}

template <class T>
void PoolForward(const std::vector<T>& in, std::vector<T>& out, std::vector<std::uint32_t>& argmax,
                 ActShape shape, std::size_t batch) {
  const int h = shape.height;
  const int w = shape.width;
  const int oh = h / 2;
  const int ow = w / 2;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const std::size_t planes = batch * static_cast<std::size_t>(shape.channels);
  out.assign(planes * out_plane, T(0));
  argmax.assign(planes * out_plane, 0);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = &in[p * in_plane];
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        std::uint32_t best = static_cast<std::uint32_t>((2 * y) * w + 2 * x);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const auto idx = static_cast<std::uint32_t>((2 * y + dy) * w + 2 * x + dx);
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = p * out_plane + static_cast<std::size_t>(y) * ow + x;
        out[o] = src[best];
        argmax[o] = best;
      }
    }
  }
}

template <class T>
void PoolBackward(const std::vector<T>& dout, const std::vector<std::uint32_t>& argmax,
                  std::vector<T>& din, ActShape shape, std::size_t batch) {
  const std::size_t in_plane = static_cast<std::size_t>(shape.height) * shape.width;
  const std::size_t out_plane = static_cast<std::size_t>(shape.height / 2) * (shape.width / 2);
  const std::size_t planes = batch * static_cast<std::size_t>(shape.channels);
  din.assign(planes * in_plane, T(0));
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t o = 0; o < out_plane; ++o) {
      din[p * in_plane + argmax[p * out_plane + o]] += dout[p * out_plane + o];
    }
  }
}

}  // namespace

template <class T>
std::vector<T> Forward(const ModelSchema& schema, std::span<const T> params,
                       std::span<const T> inputs, std::size_t batch, ForwardCache<T>* cache) {
  if (params.size() != schema.num_params()) {
    Fail(ErrorCode::kShapeMismatch, "parameter vector has " + std::to_string(params.size()) +
                                        " entries, schema needs " +
                                        std::to_string(schema.num_params()));
  }
  if (inputs.size() != batch * schema.input_size()) {
    Fail(ErrorCode::kShapeMismatch, "batch input does not match model input " +
                                        ToString(schema.image_shape()));
  }
  const auto& layers = schema.layers();
  if (cache) {
    cache->batch = batch;
    cache->activations.clear();
    cache->pool_argmax.assign(layers.size(), {});
  }
  std::vector<T> current(inputs.begin(), inputs.end());
  std::vector<T> next;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& spec = layers[l];
    const T* p = params.data() + schema.param_offset(l);
    switch (spec.kind) {
      case LayerKind::kDense: DenseForward(spec, p, current, next, batch); break;
      case LayerKind::kConv3x3:
        ConvForward(spec, p, current, next, schema.input_shape(l), batch);
        break;
      case LayerKind::kMaxPool2: {
        std::vector<std::uint32_t> argmax;
        PoolForward(current, next, argmax, schema.input_shape(l), batch);
        if (cache) cache->pool_argmax[l] = std::move(argmax);
        break;
      }
      case LayerKind::kReLU:
        next.resize(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) next[i] = std::max(current[i], T(0));
        break;
      case LayerKind::kSoftmax:
        next = current;
        break;
    }
    if (cache) {
      cache->activations.push_back(std::move(current));
    }
    current = std::move(next);
    next = {};
  }
  if (cache) cache->activations.push_back(current);
  return current;
}

template <class T>
T SoftmaxCrossEntropy(std::span<const T> logits, std::span<const int> labels, int num_classes,
                      std::vector<T>* grad) {
  const auto classes = static_cast<std::size_t>(num_classes);
  const std::size_t batch = labels.size();
  if (logits.size() != batch * classes || batch == 0) {
    Fail(ErrorCode::kShapeMismatch, "logits and labels disagree");
  }
  if (grad) grad->assign(logits.size(), T(0));
  T total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || label >= num_classes) Fail(ErrorCode::kLabelOutOfRange, "label out of range");
    const T* z = &logits[b * classes];
    const T peak = *std::max_element(z, z + classes);
    T denom = 0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - peak);
    const T log_denom = std::log(denom);
    total += log_denom - (z[label] - peak);
    if (grad) {
      for (std::size_t c = 0; c < classes; ++c) {
        const T prob = std::exp(z[c] - peak - log_denom);
        (*grad)[b * classes + c] =
            (prob - (static_cast<int>(c) == label ? T(1) : T(0))) / static_cast<T>(batch);
      }
    }
  }
  return total / static_cast<T>(batch);
}

template <class T>
std::vector<T> Backward(const ModelSchema& schema, std::span<const T> params,
                        const ForwardCache<T>& cache, std::span<const int> labels, T* loss) {
  const auto& layers = schema.layers();
  if (cache.activations.size() != layers.size() + 1 || labels.size() != cache.batch) {
    Fail(ErrorCode::kShapeMismatch, "forward cache does not match the schema");
  }
  std::vector<T> delta;
  const T value = SoftmaxCrossEntropy<T>(cache.activations.back(), labels,
                                         schema.num_classes(), &delta);
  if (loss) *loss = value;

  std::vector<T> grad(schema.num_params(), T(0));
  std::vector<T> upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerSpec& spec = layers[l];
    const std::vector<T>& in = cache.activations[l];
    const bool need_input_grad = l > 0;
    T* g = grad.data() + schema.param_offset(l);
    const T* p = params.data() + schema.param_offset(l);
    switch (spec.kind) {
      case LayerKind::kSoftmax:
        continue;
      case LayerKind::kReLU:
        for (std::size_t i = 0; i < delta.size(); ++i) {
          if (!(in[i] > T(0))) delta[i] = T(0);
        }
        continue;
      case LayerKind::kMaxPool2:
        PoolBackward(delta, cache.pool_argmax[l], upstream, schema.input_shape(l), cache.batch);
        break;
      case LayerKind::kDense:
        DenseBackward(spec, p, in, delta, g, need_input_grad ? &upstream : nullptr, cache.batch);
        break;
      case LayerKind::kConv3x3:
        ConvBackward(spec, p, in, delta, g, need_input_grad ? &upstream : nullptr,
                     schema.input_shape(l), cache.batch);
        break;
    }
    if (!need_input_grad) break;
    delta.swap(upstream);
  }
  return grad;
}

template std::vector<float> Forward<float>(const ModelSchema&, std::span<const float>,
                                           std::span<const float>, std::size_t,
                                           ForwardCache<float>*);
template std::vector<double> Forward<double>(const ModelSchema&, std::span<const double>,
                                             std::span<const double>, std::size_t,
                                             ForwardCache<double>*);
template float SoftmaxCrossEntropy<float>(std::span<const float>, std::span<const int>, int,
                                          std::vector<float>*);
template double SoftmaxCrossEntropy<double>(std::span<const double>, std::span<const int>, int,
                                            std::vector<double>*);
template std::vector<float> Backward<float>(const ModelSchema&, std::span<const float>,
                                            const ForwardCache<float>&, std::span<const int>,
                                            float*);
template std::vector<double> Backward<double>(const ModelSchema&, std::span<const double>,
                                              const ForwardCache<double>&, std::span<const int>,
                                              double*);

std::vector<float> Logits(const ModelParams& params, const Batch& batch) {
  return Forward<float>(params.schema, params.values, batch.inputs, batch.size, nullptr);
}

float Loss(const ModelParams& params, const Batch& batch) {
  const auto logits = Logits(params, batch);
  return SoftmaxCrossEntropy<float>(logits, batch.labels, params.schema.num_classes(), nullptr);
}

std::vector<float> Gradient(const ModelParams& params, const Batch& batch, float* loss) {
  ForwardCache<float> cache;
  Forward<float>(params.schema, params.values, batch.inputs, batch.size, &cache);
  return Backward<float>(params.schema, params.values, cache, batch.labels, loss);
}

}  // namespace lb::fed
