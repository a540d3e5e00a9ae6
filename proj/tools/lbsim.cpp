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

// lbsim: command-line front end for the label-balance simulator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "labelbalance/balance_protocol.hpp"
#include "labelbalance/dataset_io.hpp"
#include "labelbalance/error.hpp"
#include "labelbalance/experiment.hpp"
#include "labelbalance/mixup_dp.hpp"
#include "labelbalance/natural_noise.hpp"
#include "labelbalance/rng.hpp"
#include "labelbalance/tensor_file.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int ExitCodeFor(lb::ErrorCode code) {
  switch (code) {
    case lb::ErrorCode::kConfig:
    case lb::ErrorCode::kInvalidArgument:
    case lb::ErrorCode::kInfeasibleSpec:
    case lb::ErrorCode::kInsufficientLabel:
    case lb::ErrorCode::kInsufficientPool:
    case lb::ErrorCode::kDeadlineZero:
      return kExitConfig;
    case lb::ErrorCode::kIo:
    case lb::ErrorCode::kBadMagic:
    case lb::ErrorCode::kTruncatedFile:
    case lb::ErrorCode::kDimensionOverflow:
    case lb::ErrorCode::kBadRecordLength:
    case lb::ErrorCode::kLabelOutOfRange:
      return kExitIo;
    default:
      return 1;
  }
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;
};

lb::exp::ConfigFile ResolveConfig(const Common& common) {
  lb::exp::ConfigFile file;
  if (!common.config.empty()) file = lb::exp::LoadConfig(common.config);
  for (const auto& item : common.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) lb::Fail(lb::ErrorCode::kConfig, "--set expects key=value: " + item);
    lb::exp::SetOption(file.base, item.substr(0, eq), item.substr(eq + 1));
  }
  if (common.seed_given) file.base.seed = common.seed;
  if (!common.out.empty()) file.base.out_dir = common.out;
  return file;
}

fs::path RequireOut(const Common& common) {
  if (common.out.empty()) lb::Fail(lb::ErrorCode::kConfig, "--out is required");
  fs::create_directories(common.out);
  return common.out;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) lb::Fail(lb::ErrorCode::kIo, "cannot create " + path.string());
  return out;
}

lb::ImageShape ParseDims(const std::string& text) {
  lb::ImageShape shape;
  char x1 = 0;
  char x2 = 0;
  std::istringstream in(text);
  if (!(in >> shape.height >> x1 >> shape.width >> x2 >> shape.channels) || x1 != 'x' || x2 != 'x' ||
      shape.height <= 0 || shape.width <= 0 || (shape.channels != 1 && shape.channels != 3)) {
    lb::Fail(lb::ErrorCode::kConfig, "--dims expects HxWxC with C in {1,3}: " + text);
  }
  return shape;
}

void WriteImage(const fs::path& dir, const std::string& stem, const lb::LabeledImage& image,
                bool ppm) {
  lb::data::WriteTensorFile(dir / (stem + ".lbt"), image);
  if (ppm) lb::data::WritePnm(dir / (stem + (image.shape.channels == 3 ? ".ppm" : ".pgm")), image);
}

void ExportClients(const fs::path& dir, std::span<const lb::ClientDataset> clients) {
  for (const auto& client : clients) {
    char name[32];
    std::snprintf(name, sizeof(name), "client_%03d", client.client_id());
    const fs::path client_dir = dir / name;
    fs::create_directories(client_dir);
    for (std::size_t i = 0; i < client.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "%06zu", i);
      lb::data::WriteTensorFile(client_dir / (std::string(stem) + ".lbt"), client[i]);
    }
  }
}

int CmdPartition(const Common& common, bool export_tensors) {
  const auto file = ResolveConfig(common);
  lb::exp::Validate(file.base);
  const fs::path out = RequireOut(common);
  const auto data = lb::exp::LoadData(file.base);
  const auto clients = lb::exp::PartitionClients(file.base, data);
  auto manifest = OpenOut(out / "partition.csv");
  lb::data::WritePartitionManifest(manifest, clients);
  if (export_tensors) ExportClients(out, clients);
  std::cout << "partitioned " << data.train.size() << " images over " << clients.size()
            << " clients into " << out.string() << "\n";
  return 0;
}

struct MixArgs {
  std::string input;
  int label = 0;
  int count = 1;
  int num_classes = 10;
  std::size_t k = 4;
  double sigma = 50.0;
  std::string weight_mode = "dominant_uniform";
  bool clamp = false;
  bool ppm = false;
};

int CmdMix(const Common& common, const MixArgs& args) {
  const fs::path out = RequireOut(common);
  lb::ClientDataset source(0, args.num_classes);
  for (const auto& path : lb::data::ListTensorFiles(args.input)) {
    source.Add(lb::data::ReadTensorFile(path));
  }
  lb::mixup::DpMixConfig cfg;
  cfg.k = args.k;
  cfg.sigma = args.sigma;
  cfg.clamp_output = args.clamp;
  if (args.weight_mode == "dominant_uniform") {
    cfg.weight_mode = lb::mixup::WeightMode::kDominantUniform;
  } else if (args.weight_mode == "simplex_sorted") {
    cfg.weight_mode = lb::mixup::WeightMode::kSimplexSorted;
  } else {
    lb::Fail(lb::ErrorCode::kConfig, "--weight-mode must be dominant_uniform or simplex_sorted");
  }
  lb::Rng rng(common.seed);
  for (int i = 0; i < args.count; ++i) {
    const auto image = lb::mixup::DpLabelHide(source, args.label, cfg, rng);
    char stem[48];
    std::snprintf(stem, sizeof(stem), "mix_%d_%05d", args.label, i);
    WriteImage(out, stem, image, args.ppm);
  }
  std::cout << "wrote " << args.count << " mixups of label " << args.label << " from "
            << source.size() << " inputs\n";
  return 0;
}

struct NoiseArgs {
  int count = 1;
  std::string dims = "32x32x3";
  std::string bank = "gabor";
  int label = 0;
  bool ppm = false;
};

int CmdGenNoise(const Common& common, const NoiseArgs& args) {
  const fs::path out = RequireOut(common);
  lb::noise::GeneratorConfig cfg;
  cfg.out_shape = ParseDims(args.dims);
  cfg.seed = common.seed;
  if (args.bank == "gabor") {
    cfg.bank = lb::noise::WaveletBank::kOrientedGabor;
  } else if (args.bank == "haar") {
    cfg.bank = lb::noise::WaveletBank::kHaar;
  } else {
    lb::Fail(lb::ErrorCode::kConfig, "--bank must be gabor or haar");
  }
  const auto state = lb::noise::InitGenerator(cfg);
  for (int i = 0; i < args.count; ++i) {
    auto image = lb::noise::GenerateIndexed(state, common.seed, static_cast<std::uint64_t>(i));
    image.label = args.label;
    char stem[32];
    std::snprintf(stem, sizeof(stem), "noise_%05d", i);
    WriteImage(out, stem, image, args.ppm);
  }
  std::cout << "wrote " << args.count << " natural-noise images to " << out.string() << "\n";
  return 0;
}

int CmdSpectrum(const Common& common, const std::string& input) {
  std::ofstream file;
  if (!common.out.empty()) {
    fs::create_directories(common.out);
    file = OpenOut(fs::path(common.out) / "spectrum.csv");
  }
  std::ostream& out = common.out.empty() ? std::cout : file;
  out << "image_id,slope\n";
  for (const auto& path : lb::data::ListTensorFiles(input)) {
    const double slope = lb::noise::PowerSpectrumSlope(lb::data::ReadTensorFile(path));
    char value[32];
    std::snprintf(value, sizeof(value), "%.6f", slope);
    out << path.stem().string() << ',' << value << '\n';
  }
  return 0;
}

int CmdBalance(const Common& common, bool export_tensors) {
  auto file = ResolveConfig(common);
  lb::exp::Validate(file.base);
  const fs::path out = RequireOut(common);
  const auto& cfg = file.base;
  const auto data = lb::exp::LoadData(cfg);
  const auto clients = lb::exp::PartitionClients(cfg, data);
  const auto balanced = lb::exp::BalanceClients(cfg, data, clients, lb::exp::StageSeed(cfg, lb::exp::kBalanceStage));
  auto before = OpenOut(out / "partition.csv");
  lb::data::WritePartitionManifest(before, clients);
  auto after = OpenOut(out / "balanced.csv");
  lb::data::WritePartitionManifest(after, balanced.clients);
  auto trace = OpenOut(out / "trace.csv");
  lb::protocol::WriteTraceCsv(trace, balanced.trace);
  if (export_tensors) ExportClients(out, balanced.clients);
  std::size_t pseudo = 0;
  for (const auto& client : balanced.clients) {
    pseudo += client.CountProvenance(lb::Provenance::kMixup) +
              client.CountProvenance(lb::Provenance::kNaturalNoise);
  }
  std::cout << "added " << pseudo << " pseudo-images; " << balanced.trace.size()
            << " trace rows in " << out.string() << "\n";
  return 0;
}

int CmdTrain(const Common& common) {
  const auto file = ResolveConfig(common);
  const auto result = lb::exp::RunExperiment(file.base, &std::cerr);
  lb::exp::WriteSummaryHeader(std::cout, {});
  lb::exp::WriteSummaryRow(std::cout, result.summary, {});
  return 0;
}

int CmdGrid(const Common& common) {
  const auto file = ResolveConfig(common);
  const auto result = lb::exp::RunGrid(file, &std::cerr);
  const auto cells = lb::exp::EnumerateGrid(file.axes);
  lb::exp::WriteSummaryHeader(std::cout, file.axes);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    lb::exp::WriteSummaryRow(std::cout, result.summaries[i], cells[i].values);
  }
  std::cerr << result.cells_run << " cells run, " << result.cells_skipped << " reused\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-skewed federated learning simulator with mixup and natural-noise balancing"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config, "INI experiment config");
  auto* seed_opt = app.add_option("--seed", common.seed, "base seed (overrides run.seed)");
  app.add_option("--out", common.out, "output directory (overrides run.out_dir)");
  app.add_option("--set", common.overrides, "override a config option, section.key=value");

  bool export_tensors = false;
  auto* partition = app.add_subcommand("partition", "split the dataset across clients");
  partition->add_flag("--export-tensors", export_tensors, "write each client's images as .lbt files");

  MixArgs mix;
  auto* mix_cmd = app.add_subcommand("mix", "draw DP-LabelHide mixups from a directory of tensors");
  mix_cmd->add_option("--input", mix.input, "directory of .lbt inputs")->required();
  mix_cmd->add_option("--label", mix.label, "target label")->required();
  mix_cmd->add_option("--count", mix.count, "number of mixups")->check(CLI::PositiveNumber);
  mix_cmd->add_option("--classes", mix.num_classes, "number of classes");
  mix_cmd->add_option("--k", mix.k, "images per mixup");
  mix_cmd->add_option("--sigma", mix.sigma, "Laplace scale");
  mix_cmd->add_option("--weight-mode", mix.weight_mode, "dominant_uniform or simplex_sorted");
  mix_cmd->add_flag("--clamp", mix.clamp, "clamp output to [0, 255]");
  mix_cmd->add_flag("--ppm", mix.ppm, "also write PPM/PGM previews");

  NoiseArgs noise;
  auto* noise_cmd = app.add_subcommand("gen-noise", "generate natural-noise images");
  noise_cmd->add_option("--count", noise.count, "number of images")->check(CLI::PositiveNumber);
  noise_cmd->add_option("--dims", noise.dims, "HxWxC");
  noise_cmd->add_option("--bank", noise.bank, "gabor or haar");
  noise_cmd->add_option("--label", noise.label, "label to attach");
  noise_cmd->add_flag("--ppm", noise.ppm, "also write PPM/PGM previews");

  std::string spectrum_input;
  auto* spectrum = app.add_subcommand("spectrum", "power-spectrum slope of each tensor file");
  spectrum->add_option("--input", spectrum_input, "directory of .lbt files")->required();

  auto* balance = app.add_subcommand("balance", "partition then run label balancing");
  balance->add_flag("--export-tensors", export_tensors, "write each balanced client as .lbt files");
  auto* train = app.add_subcommand("train", "run one experiment");
  auto* grid = app.add_subcommand("grid", "run every cell of the config's [grid] section");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  common.seed_given = seed_opt->count() > 0;

  try {
    if (*partition) return CmdPartition(common, export_tensors);
    if (*mix_cmd) return CmdMix(common, mix);
    if (*noise_cmd) return CmdGenNoise(common, noise);
    if (*spectrum) return CmdSpectrum(common, spectrum_input);
    if (*balance) return CmdBalance(common, export_tensors);
    if (*train) return CmdTrain(common);
    if (*grid) return CmdGrid(common);
  } catch (const lb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 1;
}
