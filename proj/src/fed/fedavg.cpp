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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "labelbalance/error.hpp"
#include "labelbalance/fed_engine.hpp"

namespace lb::fed {

ModelParams FedAvgAggregate(std::span<const ModelParams> client_params,
                            std::span<const double> weights) {
  if (client_params.empty()) Fail(ErrorCode::kInvalidArgument, "nothing to aggregate");
  if (weights.size() != client_params.size()) {
    Fail(ErrorCode::kInvalidArgument, "one weight per client model required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      Fail(ErrorCode::kInvalidArgument, "aggregation weights must be finite and >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    Fail(ErrorCode::kInvalidArgument, "aggregation weights must sum to 1");
  }
  const ModelSchema& schema = client_params.front().schema;
  const std::size_t n = schema.num_params();
  for (const auto& params : client_params) {
    if (!(params.schema == schema) || params.values.size() != n) {
      Fail(ErrorCode::kSchemaMismatch, "client models have different schemas");
    }
    for (float v : params.values) {
      if (!std::isfinite(v)) Fail(ErrorCode::kNonFiniteParam, "client model has NaN or Inf");
    }
  }
  std::vector<double> sum(n, 0.0);
  for (std::size_t c = 0; c < client_params.size(); ++c) {
    const double w = weights[c];
    if (w == 0.0) continue;
    const auto& values = client_params[c].values;
    for (std::size_t i = 0; i < n; ++i) sum[i] += w * values[i];
  }
  ModelParams out{schema, std::vector<float>(n)};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = static_cast<float>(sum[i]);
  return out;
}

PreparedDataset Prepare(std::span<const LabeledImage> images) {
  PreparedDataset out;
  if (images.empty()) return out;
  out.shape = images.front().shape;
  out.input_size = out.shape.size();
  out.inputs.resize(out.input_size * images.size());
  out.labels.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape != out.shape) Fail(ErrorCode::kShapeMismatch, "dataset mixes image shapes");
    EncodeImage(images[i], std::span<float>(out.inputs).subspan(i * out.input_size, out.input_size));
    out.labels.push_back(images[i].label);
  }
  return out;
}

PreparedDataset Prepare(const ClientDataset& dataset) { return Prepare(dataset.examples()); }

double TrainLocal(ModelParams& params, const PreparedDataset& data, const TrainConfig& cfg,
                  OptState& opt, const Rng& shuffle_root) {
  if (cfg.batch_size == 0) Fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  if (data.input_size != params.schema.input_size()) {
    Fail(ErrorCode::kShapeMismatch, "client data does not match the model input");
  }
  if (opt.first_moment.size() != params.values.size()) {
    opt = OptState(opt.hyper, params.values.size());
  }
  std::vector<std::size_t> order(data.size());
  std::vector<float> inputs;
  std::vector<int> labels;
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = shuffle_root.Split(static_cast<std::uint64_t>(epoch));
    rng.Shuffle(order);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      inputs.resize(count * data.input_size);
      labels.resize(count);
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t index = order[start + b];
        std::copy_n(data.inputs.begin() + static_cast<std::ptrdiff_t>(index * data.input_size),
                    data.input_size, inputs.begin() + static_cast<std::ptrdiff_t>(b * data.input_size));
        labels[b] = data.labels[index];
      }
      ForwardCache<float> cache;
      Forward<float>(params.schema, params.values, inputs, count, &cache);
      float loss = 0.0f;
      const auto grad = Backward<float>(params.schema, params.values, cache, labels, &loss);
      AdamStep(params.values, grad, opt);
      epoch_loss += static_cast<double>(loss) * static_cast<double>(count);
    }
    epoch_loss /= static_cast<double>(order.size());
  }
  return epoch_loss;
}

double Evaluate(const ModelParams& params, const PreparedDataset& test, std::size_t batch_size) {
  if (test.size() == 0) Fail(ErrorCode::kInvalidArgument, "empty test set");
  const auto classes = static_cast<std::size_t>(params.schema.num_classes());
  std::size_t correct = 0;
  for (std::size_t start = 0; start < test.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, test.size() - start);
    const std::span<const float> inputs(test.inputs.data() + start * test.input_size,
                                        count * test.input_size);
    const auto logits = Forward<float>(params.schema, params.values, inputs, count, nullptr);
    for (std::size_t b = 0; b < count; ++b) {
      const float* z = &logits[b * classes];
      const auto predicted = static_cast<int>(std::max_element(z, z + classes) - z);
      if (predicted == test.labels[start + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<std::size_t> Participants(std::size_t num_clients, double fraction, int round,
                                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "participation_fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> chosen;
  if (fraction >= 1.0) {
    for (std::size_t c = 0; c < num_clients; ++c) chosen.push_back(c);
    return chosen;
  }
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(num_clients))));
  Rng rng = Rng(seed).Split({0x7061727469ULL, static_cast<std::uint64_t>(round)});
  chosen = rng.SampleWithoutReplacement(num_clients, count);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

RoundResult RunRound(const ModelParams& global, std::span<const PreparedDataset> clients,
                     std::span<OptState> client_opt, const TrainConfig& cfg, int round,
                     std::uint64_t seed, const PreparedDataset& test) {
  if (client_opt.size() != clients.size()) {
    Fail(ErrorCode::kInvalidArgument, "one optimizer state per client required");
  }
  const auto started = std::chrono::steady_clock::now();
  const auto chosen = Participants(clients.size(), cfg.participation_fraction, round, seed);

  std::vector<ModelParams> local(chosen.size(), global);
  std::vector<double> losses(chosen.size(), 0.0);
  const Rng root(seed);
  auto train_one = [&](std::size_t slot) {
    const std::size_t c = chosen[slot];
    const Rng shuffle = root.Split({static_cast<std::uint64_t>(round), c});
    losses[slot] = TrainLocal(local[slot], clients[c], cfg, client_opt[c], shuffle);
  };

  unsigned workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(chosen.size()));
  if (workers <= 1) {
    for (std::size_t slot = 0; slot < chosen.size(); ++slot) train_one(slot);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t slot = w; slot < chosen.size(); slot += workers) train_one(slot);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Clients with no data contribute nothing to the average.
  std::vector<double> weights(chosen.size(), 0.0);
  double total = 0.0;
  for (std::size_t slot = 0; slot < chosen.size(); ++slot) total += clients[chosen[slot]].size();
  if (total == 0.0) Fail(ErrorCode::kInvalidArgument, "no participating client holds data");
  for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
    weights[slot] = clients[chosen[slot]].size() / total;
  }
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  for (double& w : weights) w /= weight_sum;

  RoundResult result{FedAvgAggregate(local, weights), {}};
  RoundReport& report = result.report;
  report.round = round;
  report.client_losses.assign(clients.size(), std::numeric_limits<double>::quiet_NaN());
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
    report.client_losses[chosen[slot]] = losses[slot];
    if (std::isfinite(losses[slot])) {
      loss_sum += losses[slot];
      ++loss_count;
    }
  }
  report.mean_train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  report.test_accuracy = Evaluate(result.global, test);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<ModelParams> TrainCentralized(ModelParams params, const PreparedDataset& data,
                                          int epochs, const TrainConfig& cfg, std::uint64_t seed) {
  OptState opt(cfg.adam, params.values.size());
  TrainConfig one_epoch = cfg;
  one_epoch.local_epochs = 1;
  const Rng root(seed);
  std::vector<ModelParams> trajectory;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    TrainLocal(params, data, one_epoch, opt, root.Split({static_cast<std::uint64_t>(epoch), 0}));
    trajectory.push_back(params);
  }
  return trajectory;
}

void WriteMetricsHeader(std::ostream& out) {
  out << "round,global_test_acc,mean_train_loss,seconds\n";
}

void WriteMetricsRow(std::ostream& out, const RoundReport& report) {
  char line[128];
  std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.3f\n", report.round, report.test_accuracy,
                report.mean_train_loss, report.seconds);
  out << line;
}

}  // namespace lb::fed
