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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>

#include "labelbalance/error.hpp"
#include "labelbalance/natural_noise.hpp"

namespace lb::noise {

namespace {

// FFTW planning is not thread safe.
std::mutex& PlannerMutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

RadialSpectrum RadialPowerSpectrum(const LabeledImage& image) {
  const int n = image.shape.height;
  if (n != image.shape.width || n < 4) {
    Fail(ErrorCode::kShapeMismatch, "power spectrum needs a square image of side >= 4");
  }
  const int channels = image.shape.channels;
  const std::size_t count = static_cast<std::size_t>(n) * n;

  std::unique_ptr<fftw_complex[], FftwDeleter> buffer(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count)));
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t p = 0; p < count; ++p) {
    double gray = 0.0;
    for (int c = 0; c < channels; ++c) gray += image.pixels[p * channels + c];
    gray /= channels;
    lo = std::min(lo, gray);
    hi = std::max(hi, gray);
    buffer[p][0] = gray;
    buffer[p][1] = 0.0;
  }
  if (!(hi > lo)) Fail(ErrorCode::kZeroImage, "image has no non-DC energy");

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan = fftw_plan_dft_2d(n, n, buffer.get(), buffer.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }

  const int max_radius = static_cast<int>(std::ceil(std::sqrt(2.0) * (n / 2))) + 1;
  RadialSpectrum spectrum;
  spectrum.power.assign(static_cast<std::size_t>(max_radius), 0.0);
  spectrum.counts.assign(static_cast<std::size_t>(max_radius), 0);
  for (int ky = 0; ky < n; ++ky) {
    const int fy = ky <= n / 2 ? ky : ky - n;
    for (int kx = 0; kx < n; ++kx) {
      const int fx = kx <= n / 2 ? kx : kx - n;
      const auto bin = static_cast<std::size_t>(std::lround(std::sqrt(double(fy * fy + fx * fx))));
      const auto& f = buffer[static_cast<std::size_t>(ky) * n + kx];
      spectrum.power[bin] += f[0] * f[0] + f[1] * f[1];
      ++spectrum.counts[bin];
    }
  }
  for (std::size_t r = 0; r < spectrum.power.size(); ++r) {
    if (spectrum.counts[r] > 0) spectrum.power[r] /= static_cast<double>(spectrum.counts[r]);
  }
  return spectrum;
}

double PowerSpectrumSlope(const LabeledImage& image) {
  const RadialSpectrum spectrum = RadialPowerSpectrum(image);
  const int n = image.shape.height;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int points = 0;
  for (int r = 2; r < n / 2; ++r) {
    const double power = spectrum.power[static_cast<std::size_t>(r)];
    if (!(power > 0.0)) continue;
    const double lx = std::log(static_cast<double>(r));
    const double ly = std::log(power);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++points;
  }
  if (points < 2) Fail(ErrorCode::kZeroImage, "fewer than two radial bins carry power");
  const double denom = points * sxx - sx * sx;
  return (points * sxy - sx * sy) / denom;
}

}  // namespace lb::noise
