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
#include <optional>
#include <span>
#include <vector>

#include "labelbalance/image.hpp"
#include "labelbalance/rng.hpp"

namespace lb::mixup {

enum class WeightMode {
  // Uniform point on the probability simplex, sorted descending.
  kSimplexSorted,
  // w0 ~ U[0.5, 0.75]; the other k-1 weights are a uniform simplex point
  // scaled by (1 - w0), sorted descending among themselves.
  kDominantUniform,
};

// Non-negative, sums to 1, non-increasing. weights[0] belongs to the anchor.
struct MixWeights {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }
  bool Valid(double tolerance = 1e-9) const;
};

MixWeights SampleMixWeights(std::size_t k, WeightMode mode, Rng& rng);

// iid Laplace(0, sigma) by inverse CDF: -sigma * sign(u) * ln(1 - 2|u|),
// u ~ U(-1/2, 1/2).
std::vector<float> SampleLaplace(std::size_t d, double sigma, Rng& rng);

struct DpMixConfig {
  std::size_t k = 4;
  double sigma = 50.0;
  WeightMode weight_mode = WeightMode::kDominantUniform;
  // Clamp the noised output to [0, 255]. Off by default: clamping biases
  // the noise mechanism.
  bool clamp_output = false;
};

void Validate(const DpMixConfig& cfg);

// The full record of one draw, for auditing and for tests that need to
// separate the mixture from the noise.
struct MixupDraw {
  LabeledImage image;
  // Indices into the source; ingredients[0] is the label-j anchor.
  std::vector<std::size_t> ingredients;
  MixWeights weights;
  std::vector<float> noise;
};

// sum_i w_i x_i accumulated in float, ingredient order, then + noise.
// `noise` may be empty (treated as zero).
std::vector<float> ComposeMixture(std::span<const LabeledImage* const> ingredients,
                                  const MixWeights& weights, std::span<const float> noise);

// One DP-LabelHide sample from `source` with fixed label `target_label`.
// The anchor is uniform over label-j examples; the other k-1 ingredients are
// drawn without replacement from the rest of the source (they may share label
// j). When `forced_weights` is given it replaces the sampled weights.
MixupDraw DpLabelHideDetailed(std::span<const LabeledImage> source, int target_label,
                              const DpMixConfig& cfg, Rng& rng,
                              const std::optional<MixWeights>& forced_weights = std::nullopt);

LabeledImage DpLabelHide(const ClientDataset& source, int target_label, const DpMixConfig& cfg,
                         Rng& rng);

}  // namespace lb::mixup
