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
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace lb {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t Mix64(std::uint64_t x);

// FNV-1a over raw bytes.
std::uint64_t Fnv1a(std::span<const unsigned char> bytes);
std::uint64_t Fnv1a(std::string_view text);

// Seeded generator with hand-written variate transforms. The standard engine
// output is specified bit-for-bit, but the <random> distributions are not, so
// every variate used by the simulator is derived here to keep runs
// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t NextU64() { return engine_(); }

  // [0, 1) with 53 random bits.
  double Uniform();
  // (0, 1), never returns an endpoint.
  double UniformOpen();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Unbiased integer in [0, n); n must be positive.
  std::size_t UniformIndex(std::size_t n);
  double Normal();
  double Exponential();
  // log of a Gamma(shape, 1) variate; stable for very small shapes.
  double LogGamma(double shape);

  // Independent child stream keyed by `stream`; the parent state is untouched.
  Rng Split(std::uint64_t stream) const;
  Rng Split(std::initializer_list<std::uint64_t> path) const;

  template <class T>
  void Shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[UniformIndex(i)]);
    }
  }

  // `count` distinct indices from [0, n) in draw order (Floyd's algorithm
  // followed by a shuffle so the order is uniformly random).
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t count);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Point drawn from Dirichlet(concentration * 1_k), computed in log space so
// that tiny concentrations (e.g. 0.05) do not underflow to all zeros.
std::vector<double> SampleDirichlet(Rng& rng, double concentration, std::size_t k);

}  // namespace lb
