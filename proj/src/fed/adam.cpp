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

#include "labelbalance/error.hpp"
#include "labelbalance/fed_engine.hpp"

namespace lb::fed {

void AdamStep(std::span<float> params, std::span<const float> grads, OptState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    Fail(ErrorCode::kShapeMismatch, "Adam state, gradient and parameters differ in length");
  }
  for (float g : grads) {
    if (!std::isfinite(g)) Fail(ErrorCode::kNonFiniteGradient, "gradient contains NaN or Inf");
  }
  const AdamConfig& hp = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hp.beta1, t);
  const double correction2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = hp.beta1 * state.first_moment[i] + (1.0 - hp.beta1) * g;
    const double v = hp.beta2 * state.second_moment[i] + (1.0 - hp.beta2) * g * g;
    state.first_moment[i] = static_cast<float>(m);
    state.second_moment[i] = static_cast<float>(v);
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] = static_cast<float>(params[i] - hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon));
  }
}

}  // namespace lb::fed
