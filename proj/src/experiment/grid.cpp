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

#include <cstdio>
#include <fstream>
#include <ostream>

#include <boost/algorithm/string.hpp>

#include "labelbalance/error.hpp"
#include "labelbalance/experiment.hpp"
#include "labelbalance/rng.hpp"

namespace lb::exp {

namespace {

Summary ReadCellSummary(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string header;
  std::string row;
  if (!in || !std::getline(in, header) || !std::getline(in, row)) {
    Fail(ErrorCode::kIo, "unreadable cell summary " + path.string());
  }
  std::vector<std::string> fields;
  boost::algorithm::split(fields, row, boost::is_any_of(","));
  if (fields.size() != 7) Fail(ErrorCode::kIo, "malformed cell summary " + path.string());
  Summary s;
  try {
    s.tag = fields[0];
    s.supplement_pct = std::stod(fields[1]);
    s.mix_fraction = std::stod(fields[2]);
    s.seed = std::stoull(fields[3]);
    s.rounds = std::stoi(fields[4]);
    s.final_accuracy = std::stod(fields[5]);
    s.best_accuracy = std::stod(fields[6]);
  } catch (const std::exception&) {
    Fail(ErrorCode::kIo, "malformed cell summary " + path.string());
  }
  return s;
}

}  // namespace

std::vector<GridCell> EnumerateGrid(std::span<const GridAxis> axes) {
  std::size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty()) Fail(ErrorCode::kConfig, "grid axis " + axis.key + " has no values");
    total *= axis.values.size();
  }
  std::vector<GridCell> cells(total);
  for (std::size_t index = 0; index < total; ++index) {
    GridCell& cell = cells[index];
    cell.index = index;
    cell.values.resize(axes.size());
    // Mixed-radix decomposition with the last axis varying fastest.
    std::size_t rest = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
      cell.values[a] = axes[a].values[rest % axes[a].values.size()];
      rest /= axes[a].values.size();
    }
    std::string assignment;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      assignment += axes[a].key + "=" + cell.values[a] + ";";
    }
    cell.seed_offset = axes.empty() ? 0 : Fnv1a(assignment);
    char name[32];
    std::snprintf(name, sizeof(name), "cell-%016llx",
                  static_cast<unsigned long long>(cell.seed_offset));
    cell.name = name;
  }
  return cells;
}

ExperimentConfig CellConfig(const ConfigFile& file, const GridCell& cell) {
  ExperimentConfig cfg = file.base;
  for (std::size_t a = 0; a < file.axes.size(); ++a) {
    SetOption(cfg, file.axes[a].key, cell.values[a]);
  }
  cfg.seed_offset = cell.seed_offset;
  if (!file.base.out_dir.empty()) cfg.out_dir = file.base.out_dir / cell.name;
  return cfg;
}

GridResult RunGrid(const ConfigFile& file, std::ostream* log) {
  const auto cells = EnumerateGrid(file.axes);
  std::vector<ExperimentConfig> configs;
  for (const auto& cell : cells) {
    configs.push_back(CellConfig(file, cell));
    Validate(configs.back());
  }

  GridResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cfg = configs[i];
    const auto done = cfg.out_dir.empty() ? std::filesystem::path() : cfg.out_dir / "summary.csv";
    if (!done.empty() && std::filesystem::exists(done)) {
      result.summaries.push_back(ReadCellSummary(done));
      ++result.cells_skipped;
      if (log) *log << "cell " << i + 1 << "/" << cells.size() << " " << cells[i].name << " cached\n";
      continue;
    }
    if (log) {
      *log << "cell " << i + 1 << "/" << cells.size() << " " << cells[i].name;
      for (std::size_t a = 0; a < file.axes.size(); ++a) {
        *log << " " << file.axes[a].key << "=" << cells[i].values[a];
      }
      *log << "\n" << std::flush;
    }
    result.summaries.push_back(RunExperiment(cfg).summary);
    ++result.cells_run;
  }

  if (!file.base.out_dir.empty()) {
    std::filesystem::create_directories(file.base.out_dir);
    std::ofstream out(file.base.out_dir / "summary.csv", std::ios::binary);
    if (!out) Fail(ErrorCode::kIo, "cannot create grid summary in " + file.base.out_dir.string());
    WriteSummaryHeader(out, file.axes);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      WriteSummaryRow(out, result.summaries[i], cells[i].values);
    }
  }
  return result;
}

}  // namespace lb::exp
