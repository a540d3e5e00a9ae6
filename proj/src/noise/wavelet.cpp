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

#include <cmath>
#include <numbers>

#include "labelbalance/error.hpp"
#include "labelbalance/natural_noise.hpp"

namespace lb::noise {

namespace {

constexpr int kWavelengths[] = {2, 4, 8};

// 2x2 Haar detail kernels: horizontal, vertical, diagonal.
constexpr double kHaar[3][4] = {
    {0.5, 0.5, -0.5, -0.5},
    {0.5, -0.5, 0.5, -0.5},
    {0.5, -0.5, -0.5, 0.5},
};

void ZeroMeanUnitNorm(Kernel& kernel) {
  double mean = 0.0;
  for (double tap : kernel.taps) mean += tap;
  mean /= static_cast<double>(kernel.taps.size());
  double norm = 0.0;
  for (double& tap : kernel.taps) {
    tap -= mean;
    norm += tap * tap;
  }
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) Fail(ErrorCode::kDegenerateImage, "wavelet collapsed to zero");
  for (double& tap : kernel.taps) tap /= norm;
}

}  // namespace

Wavelet SampleWavelet(WaveletBank bank, Rng& rng) {
  Wavelet out;
  out.kernel.size = 3;
  out.kernel.taps.assign(9, 0.0);
  switch (bank) {
    case WaveletBank::kOrientedGabor: {
      out.orientation = rng.Uniform(0.0, std::numbers::pi);
      out.wavelength = kWavelengths[rng.UniformIndex(3)];
      const double envelope = out.wavelength / 2.0;
      const double c = std::cos(out.orientation);
      const double s = std::sin(out.orientation);
      for (int y = -1; y <= 1; ++y) {
        for (int x = -1; x <= 1; ++x) {
          const double along = x * c + y * s;
          const double across = -x * s + y * c;
          const double gauss =
              std::exp(-(along * along + across * across) / (2.0 * envelope * envelope));
          out.kernel.taps[static_cast<std::size_t>((y + 1) * 3 + (x + 1))] =
              gauss * std::cos(2.0 * std::numbers::pi * along / out.wavelength);
        }
      }
      ZeroMeanUnitNorm(out.kernel);
      break;
    }
    case WaveletBank::kHaar: {
      out.haar_index = static_cast<int>(rng.UniformIndex(3));
      const auto& taps = kHaar[out.haar_index];
      out.kernel.taps[0] = taps[0];
      out.kernel.taps[1] = taps[1];
      out.kernel.taps[3] = taps[2];
      out.kernel.taps[4] = taps[3];
      break;
    }
  }
  return out;
}

}  // namespace lb::noise
