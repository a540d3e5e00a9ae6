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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "labelbalance/image.hpp"
#include "labelbalance/model.hpp"
#include "labelbalance/rng.hpp"

namespace lb::fed {

// ------------------------------------------------------------------ Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptState {
  AdamConfig hyper;
  std::vector<float> first_moment;
  std::vector<float> second_moment;
  std::int64_t step = 0;

  OptState() = default;
  OptState(AdamConfig config, std::size_t num_params)
      : hyper(config), first_moment(num_params, 0.0f), second_moment(num_params, 0.0f) {}
};

// Bias-corrected Adam:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// Raises NonFiniteGradient before touching any state.
void AdamStep(std::span<float> params, std::span<const float> grads, OptState& state);

// ------------------------------------------------------------------ FedAvg

// Elementwise weighted mean, accumulated in double. Weights must be
// non-negative and sum to 1 (within 1e-9).
ModelParams FedAvgAggregate(std::span<const ModelParams> client_params,
                            std::span<const double> weights);

// ------------------------------------------------------------------ training

struct TrainConfig {
  std::size_t batch_size = 128;
  int local_epochs = 1;
  AdamConfig adam;
  double participation_fraction = 1.0;
  // Worker threads for client-local training; 0 = hardware concurrency.
  unsigned threads = 0;
};

// A client's data pre-encoded at model scale, so rounds do not re-encode.
struct PreparedDataset {
  ImageShape shape;
  std::size_t input_size = 0;
  std::vector<float> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

PreparedDataset Prepare(std::span<const LabeledImage> images);
PreparedDataset Prepare(const ClientDataset& dataset);

// `epochs` passes over `data` in shuffled batches, one Adam step per batch.
// Epoch e of this call is shuffled with shuffle_root.Split(e). Returns the
// mean per-example loss of the last epoch.
double TrainLocal(ModelParams& params, const PreparedDataset& data, const TrainConfig& cfg,
                  OptState& opt, const Rng& shuffle_root);

double Evaluate(const ModelParams& params, const PreparedDataset& test,
                std::size_t batch_size = 256);

struct RoundReport {
  int round = 0;
  double test_accuracy = 0.0;
  std::vector<double> client_losses;   // NaN for clients that sat out
  double mean_train_loss = 0.0;
  double seconds = 0.0;
};

struct RoundResult {
  ModelParams global;
  RoundReport report;
};

// One communication round: broadcast, local training on each participating
// client, aggregation weighted by local dataset size, evaluation. Client c in
// round r shuffles with Rng(seed).Split({r, c}); optimizer state persists per
// client across rounds and is never shared.
RoundResult RunRound(const ModelParams& global, std::span<const PreparedDataset> clients,
                     std::span<OptState> client_opt, const TrainConfig& cfg, int round,
                     std::uint64_t seed, const PreparedDataset& test);

// Indices of clients taking part in `round`.
std::vector<std::size_t> Participants(std::size_t num_clients, double fraction, int round,
                                      std::uint64_t seed);

// Single-site training on `data` with the same shuffle convention as a
// one-client federation: epoch r uses Rng(seed).Split({r, 0}).
std::vector<ModelParams> TrainCentralized(ModelParams params, const PreparedDataset& data,
                                          int epochs, const TrainConfig& cfg, std::uint64_t seed);

// Metrics CSV: round,global_test_acc,mean_train_loss,seconds
void WriteMetricsHeader(std::ostream& out);
void WriteMetricsRow(std::ostream& out, const RoundReport& report);

// Checkpoint: one JSON header line {"input":[H,W,C],"layers":"...",
// "num_params":n} followed by n little-endian float32 values.
void WriteCheckpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams ReadCheckpoint(const std::filesystem::path& path);

}  // namespace lb::fed
