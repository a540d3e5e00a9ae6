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
#include <vector>

#include "labelbalance/image.hpp"
#include "labelbalance/rng.hpp"

namespace lb::noise {

enum class WaveletBank { kOrientedGabor, kHaar };

// Square kernel, row-major.
struct Kernel {
  int size = 0;
  std::vector<double> taps;

  double at(int y, int x) const { return taps[static_cast<std::size_t>(y) * size + x]; }
};

struct Wavelet {
  Kernel kernel;   // always 3x3
  double orientation = 0.0;   // Gabor: radians in [0, pi)
  int wavelength = 0;          // Gabor: 2, 4 or 8 pixels
  int haar_index = -1;         // Haar: 0 horizontal, 1 vertical, 2 diagonal
};

// Gabor: cosine carrier at a uniform orientation, wavelength from {2, 4, 8},
// Gaussian envelope sigma = wavelength / 2, sampled on a 3x3 grid, made
// zero-mean and scaled to unit L2 norm. Haar: one of the three 2x2 detail
// kernels (entries +-0.5) placed in the top-left of a 3x3 zero kernel.
Wavelet SampleWavelet(WaveletBank bank, Rng& rng);

// One convolution layer: y_k = sum_i amplitude[k][i] * (x_i (*) f) + bias[k],
// with a single wavelet f shared by every (k, i) pair. (*) is zero-padded
// "same" cross-correlation.
struct ConvInit {
  int in_channels = 0;
  int out_channels = 0;
  Kernel filter;
  std::vector<double> amplitudes;   // out_channels x in_channels, N(0, 1)
  std::vector<double> biases;       // out_channels, U(-0.2, 0.2)

  double amplitude(int k, int i) const {
    return amplitudes[static_cast<std::size_t>(k) * in_channels + i];
  }
};

// Channel-planar feature map.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w),
        values(static_cast<std::size_t>(c) * h * w, 0.0) {}
  double& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

FeatureMap ApplyConv(const ConvInit& layer, const FeatureMap& input);

struct GeneratorConfig {
  ImageShape out_shape{32, 32, 3};
  int base_resolution = 4;
  int channels_per_scale = 8;
  double leaky_slope = 0.2;
  WaveletBank bank = WaveletBank::kOrientedGabor;
  std::uint64_t seed = 0;
};

void Validate(const GeneratorConfig& cfg);

// Side of the square canvas actually synthesized: the smallest
// base_resolution * 2^s covering the output. Outputs smaller than the canvas
// are center-cropped.
int CanvasSide(const GeneratorConfig& cfg);

struct Scale {
  ConvInit conv;
  std::vector<double> noise_gains;   // one per channel, N(0, 1)
};

// Immutable after InitGenerator; safe to share between threads.
struct GeneratorState {
  GeneratorConfig config;
  int canvas_side = 0;
  std::vector<Scale> scales;
  ConvInit to_image;   // 1x1, channels_per_scale -> 3 (or out channels)

  bool operator==(const GeneratorState&) const;
};

GeneratorState InitGenerator(const GeneratorConfig& cfg);

// Raw generator output before cropping and normalization (canvas-sized,
// to_image.out_channels channels). N(0,1) input at base resolution, then per
// scale: add the gained noise map, bilinear 2x upsample, conv, leaky ReLU;
// finally the 1x1 to_image conv.
FeatureMap Synthesize(const GeneratorState& state, Rng& rng);

// One unlabeled natural-noise image normalized per image to [0, 255]. A
// constant canvas is redrawn once; a second constant canvas raises
// DegenerateImage.
LabeledImage Generate(const GeneratorState& state, Rng& rng);

// Image `index` of the stream identified by `seed`.
LabeledImage GenerateIndexed(const GeneratorState& state, std::uint64_t seed, std::uint64_t index);

// ----------------------------------------------------------------- spectrum

struct RadialSpectrum {
  std::vector<double> power;   // mean |F|^2 per integer radius bin
  std::vector<std::size_t> counts;
};

// Grayscale (channel mean) power spectrum averaged over rings of integer
// radius round(|f|), in cycles per image.
RadialSpectrum RadialPowerSpectrum(const LabeledImage& image);

// Least-squares slope of log power against log radius over bins
// [2, side / 2). Requires a square image with some non-DC energy.
double PowerSpectrumSlope(const LabeledImage& image);

}  // namespace lb::noise
