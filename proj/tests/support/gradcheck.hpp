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
#include <span>
#include <vector>

#include "labelbalance/model.hpp"
#include "labelbalance/rng.hpp"

namespace oracle {

struct FdReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t resampled = 0;   // stencils that crossed a ReLU or max-pool switch
};

// Central finite differences of the 64-bit loss against the 64-bit analytic
// gradient, on `count` random coordinates drawn from the parameters of
// `layers`. Relative error is |a - n| / max(|a|, |n|, 1e-6).
FdReport CheckGradient(const lb::fed::ModelSchema& schema, std::span<const double> params,
                       std::span<const double> inputs, std::span<const int> labels,
                       std::span<const std::size_t> layers, std::size_t count, double h,
                       lb::Rng& rng);

// Random double parameters (weights and biases) and inputs in [0, 1].
std::vector<double> RandomParams(const lb::fed::ModelSchema& schema, lb::Rng& rng);
std::vector<double> RandomInputs(const lb::fed::ModelSchema& schema, std::size_t batch, lb::Rng& rng);

}  // namespace oracle
