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

#include "labelbalance/mixup_dp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "labelbalance/error.hpp"

namespace lb::mixup {

namespace {

// Uniform point on the (n-1)-simplex from normalized exponential spacings.
std::vector<double> UniformSimplex(std::size_t n, Rng& rng) {
  std::vector<double> point(n);
  double total = 0.0;
  for (auto& value : point) {
    value = rng.Exponential();
    total += value;
  }
  for (auto& value : point) value /= total;
  return point;
}

}  // namespace

bool MixWeights::Valid(double tolerance) const {
  if (weights.empty()) return false;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) return false;
    if (i > 0 && weights[i] > weights[i - 1]) return false;
    total += weights[i];
  }
  return std::abs(total - 1.0) <= tolerance;
}

MixWeights SampleMixWeights(std::size_t k, WeightMode mode, Rng& rng) {
  if (k < 1) Fail(ErrorCode::kInvalidArgument, "mix width k must be >= 1");
  if (k == 1) return MixWeights{{1.0}};
  MixWeights out;
  switch (mode) {
    case WeightMode::kSimplexSorted:
      out.weights = UniformSimplex(k, rng);
      std::sort(out.weights.begin(), out.weights.end(), std::greater<>());
      break;
    case WeightMode::kDominantUniform: {
      const double dominant = rng.Uniform(0.5, 0.75);
      auto rest = UniformSimplex(k - 1, rng);
      std::sort(rest.begin(), rest.end(), std::greater<>());
      out.weights.reserve(k);
      out.weights.push_back(dominant);
      for (double value : rest) out.weights.push_back(value * (1.0 - dominant));
      break;
    }
  }
  return out;
}

std::vector<float> SampleLaplace(std::size_t d, double sigma, Rng& rng) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    Fail(ErrorCode::kInvalidArgument, "Laplace scale must be finite and >= 0");
  }
  std::vector<float> noise(d, 0.0f);
  if (sigma == 0.0) return noise;
  for (auto& value : noise) {
    const double u = rng.UniformOpen() - 0.5;
    const double magnitude = -sigma * std::log(1.0 - 2.0 * std::abs(u));
    value = static_cast<float>(u < 0.0 ? -magnitude : magnitude);
  }
  return noise;
}

void Validate(const DpMixConfig& cfg) {
  if (cfg.k < 2) Fail(ErrorCode::kInvalidArgument, "mix width k must be >= 2");
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) {
    Fail(ErrorCode::kInvalidArgument, "sigma must be finite and >= 0");
  }
}

std::vector<float> ComposeMixture(std::span<const LabeledImage* const> ingredients,
                                  const MixWeights& weights, std::span<const float> noise) {
  if (ingredients.empty() || ingredients.size() != weights.size()) {
    Fail(ErrorCode::kShapeMismatch, "one weight per ingredient required");
  }
  const std::size_t d = ingredients.front()->pixels.size();
  for (const auto* image : ingredients) {
    if (image->pixels.size() != d) Fail(ErrorCode::kShapeMismatch, "ingredient sizes differ");
  }
  if (!noise.empty() && noise.size() != d) Fail(ErrorCode::kShapeMismatch, "noise size differs");

  std::vector<float> out(d, 0.0f);
  for (std::size_t i = 0; i < ingredients.size(); ++i) {
    const float w = static_cast<float>(weights[i]);
    const auto& pixels = ingredients[i]->pixels;
    for (std::size_t p = 0; p < d; ++p) out[p] += w * pixels[p];
  }
  for (std::size_t p = 0; p < noise.size(); ++p) out[p] += noise[p];
  return out;
}

MixupDraw DpLabelHideDetailed(std::span<const LabeledImage> source, int target_label,
                              const DpMixConfig& cfg, Rng& rng,
                              const std::optional<MixWeights>& forced_weights) {
  Validate(cfg);
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i].label == target_label) anchors.push_back(i);
  }
  if (anchors.empty()) {
    Fail(ErrorCode::kInsufficientLabel, "no example with label " + std::to_string(target_label));
  }
  if (source.size() < cfg.k) {
    Fail(ErrorCode::kInsufficientPool, std::to_string(source.size()) + " examples for a " +
                                           std::to_string(cfg.k) + "-way mixup");
  }

  MixupDraw draw;
  const std::size_t anchor = anchors[rng.UniformIndex(anchors.size())];
  draw.ingredients.push_back(anchor);
  // Fillers come from the source with the anchor removed: positions >= anchor
  // shift up by one.
  for (std::size_t pick : rng.SampleWithoutReplacement(source.size() - 1, cfg.k - 1)) {
    draw.ingredients.push_back(pick >= anchor ? pick + 1 : pick);
  }

  if (forced_weights) {
    if (forced_weights->size() != cfg.k) {
      Fail(ErrorCode::kInvalidArgument, "forced weights must have k entries");
    }
    draw.weights = *forced_weights;
  } else {
    draw.weights = SampleMixWeights(cfg.k, cfg.weight_mode, rng);
  }

  const ImageShape shape = source[anchor].shape;
  draw.noise = SampleLaplace(shape.size(), cfg.sigma, rng);

  std::vector<const LabeledImage*> chosen;
  chosen.reserve(draw.ingredients.size());
  for (std::size_t index : draw.ingredients) chosen.push_back(&source[index]);

  draw.image.shape = shape;
  draw.image.label = target_label;
  draw.image.provenance = Provenance::kMixup;
  draw.image.pixels = ComposeMixture(chosen, draw.weights, draw.noise);
  if (cfg.clamp_output) {
    for (float& value : draw.image.pixels) value = std::clamp(value, 0.0f, 255.0f);
  }
  return draw;
}

LabeledImage DpLabelHide(const ClientDataset& source, int target_label, const DpMixConfig& cfg,
                         Rng& rng) {
  return DpLabelHideDetailed(source.examples(), target_label, cfg, rng).image;
}

}  // namespace lb::mixup
