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

#include <algorithm>
#include <cmath>
#include <limits>

#include "labelbalance/error.hpp"
#include "labelbalance/natural_noise.hpp"

namespace lb::noise {

namespace {

ConvInit MakeConv(int in_channels, int out_channels, Kernel filter, Rng& rng) {
  ConvInit conv;
  conv.in_channels = in_channels;
  conv.out_channels = out_channels;
  conv.filter = std::move(filter);
  conv.amplitudes.resize(static_cast<std::size_t>(in_channels) * out_channels);
  for (double& a : conv.amplitudes) a = rng.Normal();
  conv.biases.resize(static_cast<std::size_t>(out_channels));
  for (double& b : conv.biases) b = rng.Uniform(-0.2, 0.2);
  return conv;
}

// Bilinear 2x upsampling with half-pixel centers and clamped edges.
FeatureMap UpsampleBilinear2x(const FeatureMap& in) {
  FeatureMap out(in.channels, in.height * 2, in.width * 2);
  auto tap = [&in](int c, int y, int x) {
    return in.at(c, std::clamp(y, 0, in.height - 1), std::clamp(x, 0, in.width - 1));
  };
  for (int c = 0; c < out.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      const double sy = (y + 0.5) / 2.0 - 0.5;
      const int y0 = static_cast<int>(std::floor(sy));
      const double fy = sy - y0;
      for (int x = 0; x < out.width; ++x) {
        const double sx = (x + 0.5) / 2.0 - 0.5;
        const int x0 = static_cast<int>(std::floor(sx));
        const double fx = sx - x0;
        const double top = (1.0 - fx) * tap(c, y0, x0) + fx * tap(c, y0, x0 + 1);
        const double bottom = (1.0 - fx) * tap(c, y0 + 1, x0) + fx * tap(c, y0 + 1, x0 + 1);
        out.at(c, y, x) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

}  // namespace

void Validate(const GeneratorConfig& cfg) {
  if (cfg.out_shape.height < 1 || cfg.out_shape.width < 1 || cfg.out_shape.channels < 1) {
    Fail(ErrorCode::kInvalidArgument, "generator output shape must be positive");
  }
  if (cfg.base_resolution < 1) Fail(ErrorCode::kInvalidArgument, "base_resolution must be >= 1");
  if (cfg.channels_per_scale < 1) {
    Fail(ErrorCode::kInvalidArgument, "channels_per_scale must be >= 1");
  }
  if (!std::isfinite(cfg.leaky_slope)) Fail(ErrorCode::kInvalidArgument, "leaky_slope not finite");
}

int CanvasSide(const GeneratorConfig& cfg) {
  Validate(cfg);
  const int needed = std::max(cfg.out_shape.height, cfg.out_shape.width);
  int side = cfg.base_resolution;
  while (side < needed) side *= 2;
  return side;
}

FeatureMap ApplyConv(const ConvInit& layer, const FeatureMap& input) {
  if (input.channels != layer.in_channels) {
    Fail(ErrorCode::kShapeMismatch, "conv expects " + std::to_string(layer.in_channels) +
                                        " channels, got " + std::to_string(input.channels));
  }
  const int h = input.height;
  const int w = input.width;
  const int size = layer.filter.size;
  const int half = (size - 1) / 2;

  // The wavelet is shared, so each input channel is filtered once.
  FeatureMap filtered(input.channels, h, w);
  for (int i = 0; i < input.channels; ++i) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        for (int u = 0; u < size; ++u) {
          const int sy = y + u - half;
          if (sy < 0 || sy >= h) continue;
          for (int v = 0; v < size; ++v) {
            const int sx = x + v - half;
            if (sx < 0 || sx >= w) continue;
            sum += layer.filter.at(u, v) * input.at(i, sy, sx);
          }
        }
        filtered.at(i, y, x) = sum;
      }
    }
  }

  FeatureMap out(layer.out_channels, h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int k = 0; k < layer.out_channels; ++k) {
    double* dst = &out.values[static_cast<std::size_t>(k) * plane];
    std::fill(dst, dst + plane, layer.biases[static_cast<std::size_t>(k)]);
    for (int i = 0; i < layer.in_channels; ++i) {
      const double a = layer.amplitude(k, i);
      const double* src = &filtered.values[static_cast<std::size_t>(i) * plane];
      for (std::size_t p = 0; p < plane; ++p) dst[p] += a * src[p];
    }
  }
  return out;
}

bool GeneratorState::operator==(const GeneratorState& other) const {
  auto same_conv = [](const ConvInit& a, const ConvInit& b) {
    return a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
           a.filter.size == b.filter.size && a.filter.taps == b.filter.taps &&
           a.amplitudes == b.amplitudes && a.biases == b.biases;
  };
  if (canvas_side != other.canvas_side || scales.size() != other.scales.size()) return false;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    if (!same_conv(scales[s].conv, other.scales[s].conv) ||
        scales[s].noise_gains != other.scales[s].noise_gains) {
      return false;
    }
  }
  return same_conv(to_image, other.to_image);
}

GeneratorState InitGenerator(const GeneratorConfig& cfg) {
  GeneratorState state;
  state.config = cfg;
  state.canvas_side = CanvasSide(cfg);
  Rng rng(cfg.seed);
  const int width = cfg.channels_per_scale;
  for (int side = cfg.base_resolution; side < state.canvas_side; side *= 2) {
    Scale scale;
    scale.conv = MakeConv(width, width, SampleWavelet(cfg.bank, rng).kernel, rng);
    scale.noise_gains.resize(static_cast<std::size_t>(width));
    for (double& g : scale.noise_gains) g = rng.Normal();
    state.scales.push_back(std::move(scale));
  }
  // Grayscale targets are synthesized in colour and averaged afterwards.
  const int rgb = cfg.out_shape.channels == 1 ? 3 : cfg.out_shape.channels;
  state.to_image = MakeConv(width, rgb, Kernel{1, {1.0}}, rng);
  return state;
}

FeatureMap Synthesize(const GeneratorState& state, Rng& rng) {
  const auto& cfg = state.config;
  FeatureMap x(cfg.channels_per_scale, cfg.base_resolution, cfg.base_resolution);
  for (double& v : x.values) v = rng.Normal();

  for (const auto& scale : state.scales) {
    // Noise enters before the upsample, at the coarse resolution.
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    std::vector<double> noise_map(plane);
    for (double& v : noise_map) v = rng.Normal();
    for (int c = 0; c < x.channels; ++c) {
      const double gain = scale.noise_gains[static_cast<std::size_t>(c)];
      double* dst = &x.values[static_cast<std::size_t>(c) * plane];
      for (std::size_t p = 0; p < plane; ++p) dst[p] += gain * noise_map[p];
    }
    x = UpsampleBilinear2x(x);
    x = ApplyConv(scale.conv, x);
    for (double& v : x.values) {
      if (v < 0.0) v *= cfg.leaky_slope;
    }
  }
  return ApplyConv(state.to_image, x);
}

namespace {

// Crops the canvas to the output shape, folds colour into gray when needed
// and min-max normalizes. Returns false for a constant image.
bool Finish(const GeneratorState& state, const FeatureMap& canvas, LabeledImage& out) {
  const ImageShape shape = state.config.out_shape;
  const int top = (canvas.height - shape.height) / 2;
  const int left = (canvas.width - shape.width) / 2;
  out.shape = shape;
  out.provenance = Provenance::kNaturalNoise;
  out.label = 0;
  out.origin = -1;
  out.pixels.assign(shape.size(), 0.0f);

  std::vector<double> raw(shape.size());
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      for (int c = 0; c < shape.channels; ++c) {
        double value;
        if (shape.channels == 1) {
          value = 0.0;
          for (int k = 0; k < canvas.channels; ++k) value += canvas.at(k, top + y, left + x);
          value /= canvas.channels;
        } else {
          value = canvas.at(c, top + y, left + x);
        }
        raw[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c] = value;
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo;
  const double max = *hi;
  if (!(max > min) || !std::isfinite(max - min)) return false;
  const double scale = 255.0 / (max - min);
  for (std::size_t p = 0; p < raw.size(); ++p) {
    out.pixels[p] = static_cast<float>(std::clamp((raw[p] - min) * scale, 0.0, 255.0));
  }
  return true;
}

}  // namespace

LabeledImage Generate(const GeneratorState& state, Rng& rng) {
  LabeledImage image;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (Finish(state, Synthesize(state, rng), image)) return image;
  }
  Fail(ErrorCode::kDegenerateImage, "generator produced a constant image twice");
}

LabeledImage GenerateIndexed(const GeneratorState& state, std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng(seed).Split(index);
  return Generate(state, rng);
}

}  // namespace lb::noise
