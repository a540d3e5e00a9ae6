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
#include <cstdio>
#include <fstream>
#include <ostream>

#include <boost/algorithm/string.hpp>

#include "labelbalance/error.hpp"
#include "labelbalance/experiment.hpp"
#include "labelbalance/rng.hpp"

namespace lb::exp {

namespace {

constexpr std::uint64_t kDataStream = 0x64617461;

// Keeps at most `cap` images per class, chosen by a seeded shuffle; survivors
// stay in their original order.
std::vector<LabeledImage> CapPerClass(std::vector<LabeledImage> images, int num_classes, int cap,
                                      std::uint64_t seed) {
  if (cap <= 0) return images;
  std::vector<std::size_t> order(images.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng(seed).Shuffle(order);
  std::vector<int> taken(static_cast<std::size_t>(num_classes), 0);
  std::vector<bool> keep(images.size(), false);
  for (std::size_t i : order) {
    int& count = taken[static_cast<std::size_t>(images[i].label)];
    if (count < cap) {
      ++count;
      keep[i] = true;
    }
  }
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!keep[i]) continue;
    out.push_back(std::move(images[i]));
    out.back().origin = static_cast<std::int64_t>(out.size() - 1);
  }
  return out;
}

std::vector<std::filesystem::path> PathList(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::is_any_of(","));
  std::vector<std::filesystem::path> paths;
  for (auto& part : parts) {
    boost::algorithm::trim(part);
    if (!part.empty()) paths.emplace_back(part);
  }
  return paths;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot create " + path.string());
  return out;
}

std::string Percent(double fraction) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g%%", 100.0 * fraction);
  return buffer;
}

}  // namespace

LoadedData LoadData(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  const std::uint64_t seed = Rng(cfg.seed).Split(kDataStream).seed();
  LoadedData out;
  if (d.name == "toy") {
    out.num_classes = d.num_classes;
    out.shape = {d.height, d.width, d.channels};
    const int train_pc = d.train_per_class > 0 ? d.train_per_class : 200;
    const int test_pc = d.test_per_class > 0 ? d.test_per_class : 100;
    auto images = data::MakeToyDataset(train_pc + test_pc, out.num_classes, out.shape, seed);
    auto split = data::SplitPerClass(std::move(images), out.num_classes,
                                     static_cast<std::size_t>(test_pc), Mix64(seed));
    out.train = std::move(split.train);
    out.test = std::move(split.test);
    return out;
  }
  out.num_classes = 10;
  if (d.name == "mnist") {
    out.train = data::LoadMnist(d.train_images, d.train_labels);
    out.test = data::LoadMnist(d.test_images, d.test_labels);
  } else {
    const auto train_files = PathList(d.train_files);
    const auto test_files = PathList(d.test_files);
    out.train = data::LoadCifar10(train_files);
    out.test = data::LoadCifar10(test_files);
  }
  if (out.train.empty() || out.test.empty()) Fail(ErrorCode::kIo, "dataset files hold no images");
  out.shape = out.train.front().shape;
  out.train = CapPerClass(std::move(out.train), out.num_classes, d.train_per_class, seed);
  out.test = CapPerClass(std::move(out.test), out.num_classes, d.test_per_class, Mix64(seed));
  return out;
}

std::uint64_t StageSeed(const ExperimentConfig& cfg, std::uint64_t stage) {
  return Rng(cfg.seed + cfg.seed_offset).Split(stage).seed();
}

std::vector<ClientDataset> PartitionClients(const ExperimentConfig& cfg, const LoadedData& data) {
  data::PartitionSpec spec = cfg.partition;
  spec.seed = StageSeed(cfg, kPartitionStage);
  return data::Partition(data.train, data.num_classes, spec);
}

BalancedClients BalanceClients(const ExperimentConfig& cfg, const LoadedData& data,
                               const std::vector<ClientDataset>& clients, std::uint64_t stream) {
  BalancedClients out;
  if (cfg.augment.supplement_pct <= 0.0) {
    out.clients = clients;
    out.reports.resize(clients.size());
    return out;
  }
  noise::GeneratorConfig gen_cfg = cfg.noise;
  gen_cfg.out_shape = data.shape;
  gen_cfg.seed = StageSeed(cfg, kGeneratorStage);
  const auto generator = noise::InitGenerator(gen_cfg);

  protocol::BalanceConfig balance;
  balance.mix_fraction = cfg.augment.mix_fraction;
  balance.deadline = cfg.augment.deadline;
  balance.mix.k = cfg.augment.k;
  balance.mix.sigma = cfg.augment.sigma;
  balance.mix.weight_mode = cfg.augment.weight_mode;
  balance.mix.clamp_output = cfg.augment.clamp_output;
  protocol::SupplyPolicy policy;
  policy.capacity_fraction = cfg.augment.capacity_fraction;
  const auto topology =
      protocol::Topology::Parse(cfg.augment.topology, static_cast<int>(clients.size()));

  auto federation = protocol::BalanceFederation(clients, cfg.augment.supplement_pct, balance,
                                                topology, policy, generator, stream);
  out.clients = std::move(federation.clients);
  out.trace = std::move(federation.trace);
  out.reports = std::move(federation.reports);
  return out;
}

std::string Tag(const ExperimentConfig& cfg) {
  if (cfg.partition.scheme == data::PartitionScheme::kIid && cfg.augment.supplement_pct <= 0.0) {
    return "IID";
  }
  if (cfg.augment.supplement_pct <= 0.0) return "No Supplement";
  return Percent(cfg.augment.mix_fraction) + " Mixup/ " + Percent(1.0 - cfg.augment.mix_fraction) +
         " Natural";
}

void WriteSummaryHeader(std::ostream& out, std::span<const GridAxis> axes) {
  for (const auto& axis : axes) out << axis.key << ',';
  out << "tag,supplement_pct,mix_fraction,seed,rounds,final_accuracy,best_accuracy\n";
}

void WriteSummaryRow(std::ostream& out, const Summary& summary,
                     std::span<const std::string> axis_values) {
  for (const auto& value : axis_values) out << value << ',';
  char line[256];
  std::snprintf(line, sizeof(line), "%s,%g,%g,%llu,%d,%.6f,%.6f\n", summary.tag.c_str(),
                summary.supplement_pct, summary.mix_fraction,
                static_cast<unsigned long long>(summary.seed), summary.rounds,
                summary.final_accuracy, summary.best_accuracy);
  out << line;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, std::ostream* log) {
  Validate(cfg);
  const LoadedData data = LoadData(cfg);
  const auto partition = PartitionClients(cfg, data);
  auto balanced = BalanceClients(cfg, data, partition, StageSeed(cfg, kBalanceStage));

  const bool write = !cfg.out_dir.empty();
  std::ofstream metrics;
  if (write) {
    std::filesystem::create_directories(cfg.out_dir);
    auto manifest = OpenOut(cfg.out_dir / "partition.csv");
    data::WritePartitionManifest(manifest, partition);
    auto trace = OpenOut(cfg.out_dir / "trace.csv");
    protocol::WriteTraceCsv(trace, balanced.trace);
    auto report = OpenOut(cfg.out_dir / "balance.csv");
    report << "client_id,label,required,requested,received,mixups_kept,noise_added\n";
    for (std::size_t c = 0; c < balanced.reports.size(); ++c) {
      for (const auto& r : balanced.reports[c]) {
        report << c << ',' << r.label << ',' << r.required << ',' << r.requested << ','
               << r.received << ',' << r.mixups_kept << ',' << r.noise_added << '\n';
      }
    }
    metrics = OpenOut(cfg.out_dir / "metrics.csv");
    fed::WriteMetricsHeader(metrics);
  }

  const auto schema = fed::MakeModel(cfg.model, data.shape, data.num_classes);
  fed::ModelParams global = fed::InitParams(schema, StageSeed(cfg, kInitStage));
  std::vector<fed::PreparedDataset> clients;
  for (const auto& client : balanced.clients) clients.push_back(fed::Prepare(client));
  std::vector<fed::OptState> opt(clients.size(), fed::OptState(cfg.train.adam, schema.num_params()));
  const fed::PreparedDataset test = fed::Prepare(data.test);
  const std::uint64_t train_seed = StageSeed(cfg, kTrainStage);

  ExperimentResult result;
  for (int round = 1; round <= cfg.rounds; ++round) {
    const int every = cfg.augment.rebalance_every;
    if (every > 0 && round > 1 && (round - 1) % every == 0 && cfg.augment.supplement_pct > 0.0) {
      const auto stream = Rng(StageSeed(cfg, kBalanceStage)).Split(static_cast<std::uint64_t>(round));
      balanced = BalanceClients(cfg, data, partition, stream.seed());
      for (std::size_t c = 0; c < clients.size(); ++c) clients[c] = fed::Prepare(balanced.clients[c]);
    }
    auto step = fed::RunRound(global, clients, opt, cfg.train, round, train_seed, test);
    global = std::move(step.global);
    if (!cfg.record_wall_time) step.report.seconds = 0.0;
    if (write) {
      fed::WriteMetricsRow(metrics, step.report);
      metrics.flush();
    }
    if (log) {
      char line[160];
      std::snprintf(line, sizeof(line), "round %d/%d  acc %.4f  loss %.4f\n", round, cfg.rounds,
                    step.report.test_accuracy, step.report.mean_train_loss);
      *log << line << std::flush;
    }
    result.rounds.push_back(std::move(step.report));
  }

  Summary& summary = result.summary;
  summary.tag = Tag(cfg);
  summary.supplement_pct = cfg.augment.supplement_pct;
  summary.mix_fraction = cfg.augment.mix_fraction;
  summary.seed = cfg.seed + cfg.seed_offset;
  summary.rounds = cfg.rounds;
  summary.final_accuracy = result.rounds.back().test_accuracy;
  for (const auto& r : result.rounds) summary.best_accuracy = std::max(summary.best_accuracy, r.test_accuracy);
  result.final_model = std::move(global);

  if (write) {
    if (cfg.write_checkpoint) fed::WriteCheckpoint(cfg.out_dir / "model.ckpt", result.final_model);
    // Written last: its presence marks the run as complete.
    auto out = OpenOut(cfg.out_dir / "summary.csv");
    WriteSummaryHeader(out, {});
    WriteSummaryRow(out, summary, {});
  }
  return result;
}

}  // namespace lb::exp
