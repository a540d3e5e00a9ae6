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

#include "labelbalance/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>
#include <unordered_set>

#include "labelbalance/error.hpp"

namespace lb {

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t Fnv1a(std::span<const unsigned char> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t Fnv1a(std::string_view text) {
  return Fnv1a(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(Mix64(seed)) {}

double Rng::Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::UniformOpen() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t Rng::UniformIndex(std::size_t n) {
  if (n == 0) Fail(ErrorCode::kInvalidArgument, "UniformIndex over an empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

double Rng::Normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double radius = std::sqrt(-2.0 * std::log(UniformOpen()));
  const double angle = 2.0 * std::numbers::pi * Uniform();
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

double Rng::Exponential() { return -std::log(UniformOpen()); }

double Rng::LogGamma(double shape) {
  if (!(shape > 0.0)) Fail(ErrorCode::kInvalidArgument, "gamma shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    return LogGamma(shape + 1.0) + std::log(UniformOpen()) / shape;
  }
  // Marsaglia & Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = Normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = UniformOpen();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
  }
}

Rng Rng::Split(std::uint64_t stream) const {
  return Rng(Mix64(seed_ ^ Mix64(stream + 0x632be59bd9b4e019ULL)));
}

Rng Rng::Split(std::initializer_list<std::uint64_t> path) const {
  Rng out = *this;
  for (std::uint64_t step : path) out = out.Split(step);
  return out;
}

std::vector<std::size_t> Rng::SampleWithoutReplacement(std::size_t n, std::size_t count) {
  if (count > n) Fail(ErrorCode::kInvalidArgument, "sample larger than population");
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = UniformIndex(j + 1);
    if (seen.insert(t).second) {
      picked.push_back(t);
    } else {
      seen.insert(j);
      picked.push_back(j);
    }
  }
  Shuffle(picked);
  return picked;
}

std::vector<double> SampleDirichlet(Rng& rng, double concentration, std::size_t k) {
  if (!(concentration > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "Dirichlet concentration must be positive");
  }
  std::vector<double> logs(k);
  for (auto& value : logs) value = rng.LogGamma(concentration);
  const double peak = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (auto& value : logs) {
    value = std::exp(value - peak);
    total += value;
  }
  for (auto& value : logs) value /= total;
  return logs;
}

}  // namespace lb
