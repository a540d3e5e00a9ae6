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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "labelbalance/balance_protocol.hpp"
#include "labelbalance/dataset_io.hpp"
#include "labelbalance/fed_engine.hpp"
#include "labelbalance/natural_noise.hpp"

namespace lb::exp {

struct DatasetConfig {
  std::string name = "toy";   // toy | mnist | cifar10
  // mnist: IDX files. cifar10: train_files is a comma list of batch files.
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string train_files;
  std::string test_files;
  // Per-class caps applied after a seeded shuffle; 0 keeps everything.
  int train_per_class = 0;
  int test_per_class = 0;
  // toy only
  int num_classes = 10;
  int height = 16;
  int width = 16;
  int channels = 1;
};

struct AugmentConfig {
  double supplement_pct = 0.0;
  double mix_fraction = 1.0;
  std::size_t k = 4;
  double sigma = 50.0;
  mixup::WeightMode weight_mode = mixup::WeightMode::kDominantUniform;
  bool clamp_output = false;
  int deadline = 2;
  std::string topology = "star";
  double capacity_fraction = 1.0;
  // Rounds between re-balancing from the original partition; 0 = once.
  int rebalance_every = 0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  data::PartitionSpec partition;   // seed is derived, not read
  AugmentConfig augment;
  noise::GeneratorConfig noise;     // out_shape and seed are derived
  fed::TrainConfig train;
  std::string model = "cnn";
  int rounds = 50;
  std::uint64_t seed = 0;
  // Added to `seed` for everything but dataset loading; grid cells set it.
  std::uint64_t seed_offset = 0;
  std::filesystem::path out_dir;   // empty: write nothing
  bool record_wall_time = false;
  bool write_checkpoint = true;
};

// Sets one option by its "section.key" name, e.g. "partition.classes_per_client".
// Raises Config for unknown keys or unparsable values.
void SetOption(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> OptionNames();
// Range and consistency checks; raises Config.
void Validate(const ExperimentConfig& cfg);

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

struct ConfigFile {
  ExperimentConfig base;
  std::vector<GridAxis> axes;   // from the [grid] section, in file order
};

// INI text: [section] headers, key = value lines, whole-line ; or # comments.
ConfigFile ParseConfig(std::istream& in);
ConfigFile LoadConfig(const std::filesystem::path& path);

// ------------------------------------------------------------------ running

struct LoadedData {
  ImageShape shape;
  int num_classes = 0;
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
};

// Dataset loading uses the base seed only, so every grid cell of one base
// seed sees the same train/test data.
LoadedData LoadData(const ExperimentConfig& cfg);

// Independent random streams of one run.
enum Stage : std::uint64_t {
  kPartitionStage = 1,
  kGeneratorStage = 2,
  kBalanceStage = 3,
  kInitStage = 4,
  kTrainStage = 5,
};

std::uint64_t StageSeed(const ExperimentConfig& cfg, std::uint64_t stage);

std::vector<ClientDataset> PartitionClients(const ExperimentConfig& cfg, const LoadedData& data);

struct BalancedClients {
  std::vector<ClientDataset> clients;
  std::vector<protocol::TraceRow> trace;
  std::vector<std::vector<protocol::DeficitReport>> reports;
};

// Identity when supplement_pct is 0.
BalancedClients BalanceClients(const ExperimentConfig& cfg, const LoadedData& data,
                               const std::vector<ClientDataset>& clients, std::uint64_t stream);

// "No Supplement", "IID", or e.g. "75% Mixup/ 25% Natural".
std::string Tag(const ExperimentConfig& cfg);

struct Summary {
  std::string tag;
  double supplement_pct = 0.0;
  double mix_fraction = 0.0;
  std::uint64_t seed = 0;
  int rounds = 0;
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
};

struct ExperimentResult {
  Summary summary;
  std::vector<fed::RoundReport> rounds;
  fed::ModelParams final_model;
};

// partition -> balance (when supplement_pct > 0) -> `rounds` FedAvg rounds.
// With a non-empty out_dir writes metrics.csv, summary.csv, partition.csv,
// trace.csv and model.ckpt there. Progress lines go to `log` when given.
ExperimentResult RunExperiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

void WriteSummaryHeader(std::ostream& out, std::span<const GridAxis> axes);
void WriteSummaryRow(std::ostream& out, const Summary& summary,
                     std::span<const std::string> axis_values);

// ------------------------------------------------------------------ grid

struct GridCell {
  std::size_t index = 0;
  std::vector<std::string> values;   // one per axis
  std::uint64_t seed_offset = 0;     // FNV-1a of the axis assignments
  std::string name;                  // stable directory name
};

// Cross product, first axis slowest.
std::vector<GridCell> EnumerateGrid(std::span<const GridAxis> axes);
ExperimentConfig CellConfig(const ConfigFile& file, const GridCell& cell);

struct GridResult {
  std::vector<Summary> summaries;
  std::size_t cells_run = 0;
  std::size_t cells_skipped = 0;
};

// Runs every cell into out_dir/<cell name>/, skipping cells whose
// summary.csv already exists, then writes out_dir/summary.csv with one row
// per cell and one column per axis.
GridResult RunGrid(const ConfigFile& file, std::ostream* log = nullptr);

}  // namespace lb::exp
