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

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

using lb::fed::ForwardCache;
using lb::fed::LayerKind;

namespace {

double LossAt(const lb::fed::ModelSchema& schema, std::span<const double> params,
              std::span<const double> inputs, std::span<const int> labels,
              ForwardCache<double>* cache) {
  const auto logits =
      lb::fed::Forward<double>(schema, params, inputs, labels.size(), cache);
  return lb::fed::SoftmaxCrossEntropy<double>(logits, labels, schema.num_classes(), nullptr);
}

// True when some ReLU input changes sign or some pool window changes winner
// between the two evaluations.
bool SwitchedBranch(const lb::fed::ModelSchema& schema, const ForwardCache<double>& a,
                    const ForwardCache<double>& b) {
  for (std::size_t l = 0; l < schema.layers().size(); ++l) {
    if (schema.layers()[l].kind == LayerKind::kReLU) {
      const auto& x = a.activations[l];
      const auto& y = b.activations[l];
      for (std::size_t i = 0; i < x.size(); ++i) {
        if ((x[i] > 0) != (y[i] > 0)) return true;
      }
    }
  }
  return a.pool_argmax != b.pool_argmax;
}

}  // namespace

FdReport CheckGradient(const lb::fed::ModelSchema& schema, std::span<const double> params,
                       std::span<const double> inputs, std::span<const int> labels,
                       std::span<const std::size_t> layers, std::size_t count, double h,
                       lb::Rng& rng) {
  ForwardCache<double> cache;
  LossAt(schema, params, inputs, labels, &cache);
  const auto analytic = lb::fed::Backward<double>(schema, params, cache, labels, nullptr);

  std::vector<std::size_t> pool;
  for (std::size_t l : layers) {
    const std::size_t offset = schema.param_offset(l);
    for (std::size_t i = 0; i < schema.param_count(l); ++i) pool.push_back(offset + i);
  }
  FdReport report;
  if (pool.empty()) return report;
  std::vector<double> shifted(params.begin(), params.end());
  while (report.checked < count) {
    const std::size_t coord = pool[rng.UniformIndex(pool.size())];
    ForwardCache<double> plus_cache, minus_cache;
    shifted[coord] = params[coord] + h;
    const double plus = LossAt(schema, shifted, inputs, labels, &plus_cache);
    shifted[coord] = params[coord] - h;
    const double minus = LossAt(schema, shifted, inputs, labels, &minus_cache);
    shifted[coord] = params[coord];
    if (SwitchedBranch(schema, plus_cache, minus_cache) ||
        SwitchedBranch(schema, plus_cache, cache)) {
      ++report.resampled;
      if (report.resampled > 10 * count) break;
      continue;
    }
    const double numeric = (plus - minus) / (2 * h);
    const double a = analytic[coord];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
    ++report.checked;
  }
  return report;
}

std::vector<double> RandomParams(const lb::fed::ModelSchema& schema, lb::Rng& rng) {
  const auto init = lb::fed::InitParams(schema, rng.NextU64());
  std::vector<double> out(init.values.begin(), init.values.end());
  for (double& v : out) v += 0.05 * rng.Normal();
  return out;
}

std::vector<double> RandomInputs(const lb::fed::ModelSchema& schema, std::size_t batch, lb::Rng& rng) {
  std::vector<double> out(batch * schema.input_size());
  for (double& v : out) v = rng.Uniform();
  return out;
}

}  // namespace oracle
