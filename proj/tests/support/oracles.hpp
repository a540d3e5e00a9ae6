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

// Independent reference implementations used to check the library. None of
// these call into the code under test except for plain data types.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "labelbalance/image.hpp"
#include "labelbalance/natural_noise.hpp"

namespace oracle {

// One-sample Kolmogorov-Smirnov test against Uniform[lo, hi].
struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};
KsResult KsUniform(std::vector<double> sample, double lo, double hi);
// Asymptotic Kolmogorov tail probability P(K > lambda).
double KolmogorovTail(double lambda);

// Radial power spectrum by an O(n^4) direct DFT of the channel-mean image.
std::vector<double> NaiveRadialPower(const lb::LabeledImage& image);
double SlopeFromPower(std::span<const double> power, int side);

// Zero-padded same-size cross-correlation, one output channel per amplitude
// row, written out with explicit loops.
lb::noise::FeatureMap BruteConv(const lb::noise::ConvInit& layer, const lb::noise::FeatureMap& in);

// Scalar Adam in double precision.
struct HandAdam {
  double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  int t = 0;
  void Step(std::vector<double>& params, const std::vector<double>& grads);
};

// Fresh empty directory under the system temp dir.
std::filesystem::path TempDir(const std::string& name);

}  // namespace oracle
