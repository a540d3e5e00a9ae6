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

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "labelbalance/error.hpp"
#include "labelbalance/experiment.hpp"

namespace lb::exp {

namespace {

[[noreturn]] void BadValue(const std::string& key, const std::string& value) {
  Fail(ErrorCode::kConfig, "bad value '" + value + "' for " + key);
}

template <class T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [end, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || end != last) BadValue(key, value);
  return out;
}

bool ParseBool(const std::string& key, const std::string& value) {
  const std::string v = boost::algorithm::to_lower_copy(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  BadValue(key, value);
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

template <class T, class Field>
Setter Number(Field field) {
  return [field](ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    field(cfg) = ParseNumber<T>(key, value);
  };
}

template <class Field>
Setter Text(Field field) {
  return [field](ExperimentConfig& cfg, const std::string&, const std::string& value) {
    field(cfg) = value;
  };
}

template <class Field>
Setter Flag(Field field) {
  return [field](ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    field(cfg) = ParseBool(key, value);
  };
}

const std::map<std::string, Setter>& Setters() {
  using C = ExperimentConfig;
  static const std::map<std::string, Setter> table = {
      {"dataset.name", Text([](C& c) -> auto& { return c.dataset.name; })},
      {"dataset.train_images", Text([](C& c) -> auto& { return c.dataset.train_images; })},
      {"dataset.train_labels", Text([](C& c) -> auto& { return c.dataset.train_labels; })},
      {"dataset.test_images", Text([](C& c) -> auto& { return c.dataset.test_images; })},
      {"dataset.test_labels", Text([](C& c) -> auto& { return c.dataset.test_labels; })},
      {"dataset.train_files", Text([](C& c) -> auto& { return c.dataset.train_files; })},
      {"dataset.test_files", Text([](C& c) -> auto& { return c.dataset.test_files; })},
      {"dataset.train_per_class", Number<int>([](C& c) -> auto& { return c.dataset.train_per_class; })},
      {"dataset.test_per_class", Number<int>([](C& c) -> auto& { return c.dataset.test_per_class; })},
      {"dataset.num_classes", Number<int>([](C& c) -> auto& { return c.dataset.num_classes; })},
      {"dataset.height", Number<int>([](C& c) -> auto& { return c.dataset.height; })},
      {"dataset.width", Number<int>([](C& c) -> auto& { return c.dataset.width; })},
      {"dataset.channels", Number<int>([](C& c) -> auto& { return c.dataset.channels; })},

      {"partition.scheme",
       [](C& c, const std::string& key, const std::string& value) {
         if (value == "class_skew") {
           c.partition.scheme = data::PartitionScheme::kClassSkew;
         } else if (value == "dirichlet") {
           c.partition.scheme = data::PartitionScheme::kDirichlet;
         } else if (value == "iid") {
           c.partition.scheme = data::PartitionScheme::kIid;
         } else {
           BadValue(key, value);
         }
       }},
      {"partition.classes_per_client",
       Number<int>([](C& c) -> auto& { return c.partition.classes_per_client; })},
      {"partition.concentration",
       Number<double>([](C& c) -> auto& { return c.partition.concentration; })},
      {"partition.num_clients", Number<int>([](C& c) -> auto& { return c.partition.num_clients; })},

      {"augment.supplement_pct", Number<double>([](C& c) -> auto& { return c.augment.supplement_pct; })},
      {"augment.mix_fraction", Number<double>([](C& c) -> auto& { return c.augment.mix_fraction; })},
      {"augment.k", Number<std::size_t>([](C& c) -> auto& { return c.augment.k; })},
      {"augment.sigma", Number<double>([](C& c) -> auto& { return c.augment.sigma; })},
      {"augment.weight_mode",
       [](C& c, const std::string& key, const std::string& value) {
         if (value == "dominant_uniform") {
           c.augment.weight_mode = mixup::WeightMode::kDominantUniform;
         } else if (value == "simplex_sorted") {
           c.augment.weight_mode = mixup::WeightMode::kSimplexSorted;
         } else {
           BadValue(key, value);
         }
       }},
      {"augment.clamp_output", Flag([](C& c) -> auto& { return c.augment.clamp_output; })},
      {"augment.deadline", Number<int>([](C& c) -> auto& { return c.augment.deadline; })},
      {"augment.topology", Text([](C& c) -> auto& { return c.augment.topology; })},
      {"augment.capacity_fraction",
       Number<double>([](C& c) -> auto& { return c.augment.capacity_fraction; })},
      {"augment.rebalance_every", Number<int>([](C& c) -> auto& { return c.augment.rebalance_every; })},

      {"noise.bank",
       [](C& c, const std::string& key, const std::string& value) {
         if (value == "gabor") {
           c.noise.bank = noise::WaveletBank::kOrientedGabor;
         } else if (value == "haar") {
           c.noise.bank = noise::WaveletBank::kHaar;
         } else {
           BadValue(key, value);
         }
       }},
      {"noise.base_resolution", Number<int>([](C& c) -> auto& { return c.noise.base_resolution; })},
      {"noise.channels_per_scale", Number<int>([](C& c) -> auto& { return c.noise.channels_per_scale; })},
      {"noise.leaky_slope", Number<double>([](C& c) -> auto& { return c.noise.leaky_slope; })},

      {"train.model", Text([](C& c) -> auto& { return c.model; })},
      {"train.rounds", Number<int>([](C& c) -> auto& { return c.rounds; })},
      {"train.local_epochs", Number<int>([](C& c) -> auto& { return c.train.local_epochs; })},
      {"train.batch_size", Number<std::size_t>([](C& c) -> auto& { return c.train.batch_size; })},
      {"train.learning_rate", Number<double>([](C& c) -> auto& { return c.train.adam.learning_rate; })},
      {"train.beta1", Number<double>([](C& c) -> auto& { return c.train.adam.beta1; })},
      {"train.beta2", Number<double>([](C& c) -> auto& { return c.train.adam.beta2; })},
      {"train.epsilon", Number<double>([](C& c) -> auto& { return c.train.adam.epsilon; })},
      {"train.participation_fraction",
       Number<double>([](C& c) -> auto& { return c.train.participation_fraction; })},
      {"train.threads", Number<unsigned>([](C& c) -> auto& { return c.train.threads; })},

      {"run.seed", Number<std::uint64_t>([](C& c) -> auto& { return c.seed; })},
      {"run.out_dir",
       [](C& c, const std::string&, const std::string& value) { c.out_dir = value; }},
      {"run.record_wall_time", Flag([](C& c) -> auto& { return c.record_wall_time; })},
      {"run.write_checkpoint", Flag([](C& c) -> auto& { return c.write_checkpoint; })},
  };
  return table;
}

void Require(bool ok, const std::string& what) {
  if (!ok) Fail(ErrorCode::kConfig, what);
}

}  // namespace

void SetOption(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = Setters();
  const auto it = table.find(key);
  if (it == table.end()) Fail(ErrorCode::kConfig, "unknown option " + key);
  it->second(cfg, key, boost::algorithm::trim_copy(value));
}

std::vector<std::string> OptionNames() {
  std::vector<std::string> names;
  for (const auto& [name, setter] : Setters()) names.push_back(name);
  return names;
}

void Validate(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  Require(d.name == "toy" || d.name == "mnist" || d.name == "cifar10",
          "dataset.name must be toy, mnist or cifar10");
  if (d.name == "mnist") {
    Require(!d.train_images.empty() && !d.train_labels.empty() && !d.test_images.empty() &&
                !d.test_labels.empty(),
            "mnist needs train_images, train_labels, test_images and test_labels");
  }
  if (d.name == "cifar10") {
    Require(!d.train_files.empty() && !d.test_files.empty(), "cifar10 needs train_files and test_files");
  }
  Require(d.train_per_class >= 0 && d.test_per_class >= 0, "per-class caps must be >= 0");
  if (d.name == "toy") {
    Require(d.num_classes >= 2 && d.num_classes <= 256, "dataset.num_classes must lie in [2, 256]");
    Require(d.height > 0 && d.width > 0 && (d.channels == 1 || d.channels == 3),
            "toy dimensions must be positive with 1 or 3 channels");
  }

  const auto& p = cfg.partition;
  Require(p.num_clients >= 1, "partition.num_clients must be >= 1");
  if (p.scheme == data::PartitionScheme::kClassSkew) {
    const int classes = d.name == "toy" ? d.num_classes : 10;
    Require(p.classes_per_client >= 1 && p.classes_per_client <= classes,
            "partition.classes_per_client must lie in [1, num_classes]");
  }
  if (p.scheme == data::PartitionScheme::kDirichlet) {
    Require(p.concentration > 0.0 && std::isfinite(p.concentration),
            "partition.concentration must be > 0");
  }

  const auto& a = cfg.augment;
  Require(a.supplement_pct >= 0.0 && a.supplement_pct <= 100.0,
          "augment.supplement_pct must lie in [0, 100]");
  Require(a.mix_fraction >= 0.0 && a.mix_fraction <= 1.0, "augment.mix_fraction must lie in [0, 1]");
  Require(a.k >= 2, "augment.k must be >= 2");
  Require(a.sigma >= 0.0 && std::isfinite(a.sigma), "augment.sigma must be >= 0");
  Require(a.deadline >= 1, "augment.deadline must be >= 1");
  Require(a.capacity_fraction >= 0.0 && a.capacity_fraction <= 1.0,
          "augment.capacity_fraction must lie in [0, 1]");
  Require(a.rebalance_every >= 0, "augment.rebalance_every must be >= 0");
  try {
    protocol::Topology::Parse(a.topology, p.num_clients);
  } catch (const Error& e) {
    Fail(ErrorCode::kConfig, std::string("augment.topology: ") + e.what());
  }

  Require(cfg.noise.base_resolution >= 1, "noise.base_resolution must be >= 1");
  Require(cfg.noise.channels_per_scale >= 1, "noise.channels_per_scale must be >= 1");
  Require(cfg.noise.leaky_slope >= 0.0 && cfg.noise.leaky_slope < 1.0,
          "noise.leaky_slope must lie in [0, 1)");

  Require(cfg.model == "logreg" || cfg.model == "mlp" || cfg.model == "cnn",
          "train.model must be logreg, mlp or cnn");
  Require(cfg.rounds >= 1, "train.rounds must be >= 1");
  Require(cfg.train.local_epochs >= 1, "train.local_epochs must be >= 1");
  Require(cfg.train.batch_size >= 1, "train.batch_size must be >= 1");
  const auto& adam = cfg.train.adam;
  Require(adam.learning_rate > 0.0, "train.learning_rate must be > 0");
  Require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "train.beta1 must lie in [0, 1)");
  Require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "train.beta2 must lie in [0, 1)");
  Require(adam.epsilon > 0.0, "train.epsilon must be > 0");
  Require(cfg.train.participation_fraction > 0.0 && cfg.train.participation_fraction <= 1.0,
          "train.participation_fraction must lie in (0, 1]");
}

ConfigFile ParseConfig(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorCode::kConfig, e.what());
  }
  ConfigFile file;
  for (const auto& [section, body] : tree) {
    if (body.empty()) Fail(ErrorCode::kConfig, "option '" + section + "' outside any section");
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      if (section == "grid") {
        GridAxis axis{key, {}};
        boost::algorithm::split(axis.values, value, boost::is_any_of(","));
        for (auto& v : axis.values) boost::algorithm::trim(v);
        if (axis.values.empty() || (axis.values.size() == 1 && axis.values[0].empty())) {
          Fail(ErrorCode::kConfig, "grid axis " + key + " has no values");
        }
        // Reject unknown axes and bad values now rather than mid-grid.
        ExperimentConfig probe;
        for (const auto& v : axis.values) SetOption(probe, key, v);
        file.axes.push_back(std::move(axis));
      } else {
        SetOption(file.base, section + "." + key, value);
      }
    }
  }
  return file;
}

ConfigFile LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open config " + path.string());
  return ParseConfig(in);
}

}  // namespace lb::exp
