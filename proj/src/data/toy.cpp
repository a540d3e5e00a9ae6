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
#include <numbers>

#include "labelbalance/dataset_io.hpp"
#include "labelbalance/error.hpp"
#include "labelbalance/rng.hpp"

namespace lb::data {

namespace {

constexpr float kBackground = 16.0f;
constexpr float kBlobAmplitude = 190.0f;
constexpr float kBarAmplitude = 110.0f;
constexpr float kPixelJitter = 24.0f;

// Renders class `label` shifted by (dy, dx) and scaled by `gain`.
std::vector<float> Render(int label, int num_classes, ImageShape shape, double dy, double dx,
                          double gain) {
  const double side = std::min(shape.height, shape.width);
  const double angle = 2.0 * std::numbers::pi * label / num_classes;
  const double radius = 0.3 * side;
  const double cy = 0.5 * (shape.height - 1) + radius * std::sin(angle) + dy;
  const double cx = 0.5 * (shape.width - 1) + radius * std::cos(angle) + dx;
  const double blob_sigma = std::max(1.0, side / 10.0);

  // The bar runs through the image center at a class-specific orientation.
  const double bar_angle = std::numbers::pi * label / num_classes;
  const double ux = std::cos(bar_angle);
  const double uy = std::sin(bar_angle);
  const double bar_half_length = 0.35 * side;
  const double my = 0.5 * (shape.height - 1) + dy;
  const double mx = 0.5 * (shape.width - 1) + dx;

  std::vector<float> out(shape.size());
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      const double by = y - cy;
      const double bx = x - cx;
      const double blob = std::exp(-(by * by + bx * bx) / (2.0 * blob_sigma * blob_sigma));
      const double along = (x - mx) * ux + (y - my) * uy;
      const double across = -(x - mx) * uy + (y - my) * ux;
      const double bar = std::abs(along) <= bar_half_length
                             ? std::exp(-(across * across) / (2.0 * 0.6 * 0.6))
                             : 0.0;
      const double value = kBlobAmplitude * blob + kBarAmplitude * bar;
      for (int c = 0; c < shape.channels; ++c) {
        const double tint =
            shape.channels == 1
                ? 1.0
                : 0.6 + 0.4 * std::cos(angle + 2.0 * std::numbers::pi * c / shape.channels);
        out[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c] =
            static_cast<float>(kBackground + gain * tint * value);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<float> ToyTemplate(int label, int num_classes, ImageShape shape) {
  return Render(label, num_classes, shape, 0.0, 0.0, 0.9);
}

std::vector<LabeledImage> MakeToyDataset(int n_per_class, int num_classes, ImageShape shape,
                                         std::uint64_t seed) {
  if (n_per_class < 1) Fail(ErrorCode::kInvalidArgument, "n_per_class must be >= 1");
  if (num_classes < 1) Fail(ErrorCode::kInvalidArgument, "num_classes must be >= 1");
  if (shape.height < 4 || shape.width < 4 || shape.channels < 1) {
    Fail(ErrorCode::kInvalidArgument, "toy images must be at least 4x4x1");
  }
  Rng rng(seed);
  std::vector<LabeledImage> out;
  out.reserve(static_cast<std::size_t>(n_per_class) * num_classes);
  for (int y = 0; y < num_classes; ++y) {
    for (int n = 0; n < n_per_class; ++n) {
      const double dy = static_cast<double>(rng.UniformIndex(3)) - 1.0;
      const double dx = static_cast<double>(rng.UniformIndex(3)) - 1.0;
      const double gain = rng.Uniform(0.8, 1.0);
      LabeledImage image;
      image.shape = shape;
      image.label = y;
      image.origin = static_cast<std::int64_t>(out.size());
      image.pixels = Render(y, num_classes, shape, dy, dx, gain);
      for (float& p : image.pixels) {
        const double noisy = p + rng.Uniform(-kPixelJitter, kPixelJitter);
        p = static_cast<float>(std::clamp(std::round(noisy), 0.0, 255.0));
      }
      out.push_back(std::move(image));
    }
  }
  return out;
}

}  // namespace lb::data
