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
#include <cmath>
#include <ostream>

#include "labelbalance/dataset_io.hpp"
#include "labelbalance/error.hpp"
#include "labelbalance/rng.hpp"

namespace lb::data {

namespace {

enum Stream : std::uint64_t { kLabelOrder = 1, kExampleOrder = 2, kDirichlet = 3, kIidOrder = 4 };

// Indices of `dataset` grouped by label, each group shuffled with its own stream.
std::vector<std::vector<std::size_t>> ShuffledByLabel(std::span<const LabeledImage> dataset,
                                                      int num_classes, const Rng& root) {
  std::vector<std::vector<std::size_t>> by_label(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int label = dataset[i].label;
    if (label < 0 || label >= num_classes) {
      Fail(ErrorCode::kLabelOutOfRange, "label " + std::to_string(label));
    }
    by_label[static_cast<std::size_t>(label)].push_back(i);
  }
  for (std::size_t y = 0; y < by_label.size(); ++y) {
    Rng rng = root.Split({kExampleOrder, y});
    rng.Shuffle(by_label[y]);
  }
  return by_label;
}

}  // namespace

void Validate(const PartitionSpec& spec, int num_classes) {
  if (spec.num_clients < 1) Fail(ErrorCode::kInfeasibleSpec, "num_clients must be >= 1");
  switch (spec.scheme) {
    case PartitionScheme::kClassSkew:
      if (spec.classes_per_client < 1 || spec.classes_per_client > num_classes) {
        Fail(ErrorCode::kInfeasibleSpec, "C=" + std::to_string(spec.classes_per_client) +
                                             " outside 1.." + std::to_string(num_classes));
      }
      if (static_cast<long>(spec.num_clients) * spec.classes_per_client < num_classes) {
        Fail(ErrorCode::kInfeasibleSpec, "num_clients * C leaves some labels unassigned");
      }
      break;
    case PartitionScheme::kDirichlet:
      if (!(spec.concentration > 0.0) || !std::isfinite(spec.concentration)) {
        Fail(ErrorCode::kInfeasibleSpec, "Dirichlet concentration must be positive");
      }
      break;
    case PartitionScheme::kIid:
      break;
  }
}

std::vector<std::vector<int>> ClassSkewAssignment(const PartitionSpec& spec, int num_classes) {
  Validate(spec, num_classes);
  std::vector<int> order(static_cast<std::size_t>(num_classes));
  for (int y = 0; y < num_classes; ++y) order[static_cast<std::size_t>(y)] = y;
  Rng rng = Rng(spec.seed).Split(kLabelOrder);
  rng.Shuffle(order);

  std::vector<std::vector<int>> labels_of(static_cast<std::size_t>(spec.num_clients));
  std::size_t slot = 0;
  for (auto& labels : labels_of) {
    for (int c = 0; c < spec.classes_per_client; ++c, ++slot) {
      labels.push_back(order[slot % order.size()]);
    }
  }
  return labels_of;
}

std::vector<std::vector<double>> DirichletProportions(const PartitionSpec& spec, int num_classes) {
  Validate(spec, num_classes);
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(num_classes));
  const Rng root(spec.seed);
  for (int y = 0; y < num_classes; ++y) {
    Rng rng = root.Split({kDirichlet, static_cast<std::uint64_t>(y)});
    rows.push_back(SampleDirichlet(rng, spec.concentration,
                                   static_cast<std::size_t>(spec.num_clients)));
  }
  return rows;
}

std::vector<std::size_t> SplitByProportions(std::size_t total, std::span<const double> proportions) {
  std::vector<std::size_t> counts(proportions.size(), 0);
  if (proportions.empty()) return counts;
  double cumulative = 0.0;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c + 1 < proportions.size(); ++c) {
    cumulative += proportions[c];
    const auto boundary = std::min(
        total, static_cast<std::size_t>(std::floor(cumulative * static_cast<double>(total))));
    const std::size_t next = std::max(boundary, assigned);
    counts[c] = next - assigned;
    assigned = next;
  }
  counts.back() = total - assigned;
  return counts;
}

std::vector<ClientDataset> Partition(std::span<const LabeledImage> dataset, int num_classes,
                                     const PartitionSpec& spec) {
  Validate(spec, num_classes);
  const Rng root(spec.seed);
  std::vector<ClientDataset> clients;
  clients.reserve(static_cast<std::size_t>(spec.num_clients));
  for (int c = 0; c < spec.num_clients; ++c) clients.emplace_back(c, num_classes);

  auto give = [&](std::size_t client, std::size_t index) {
    LabeledImage image = dataset[index];
    image.provenance = Provenance::kReal;
    if (image.origin < 0) image.origin = static_cast<std::int64_t>(index);
    clients[client].Add(std::move(image));
  };

  switch (spec.scheme) {
    case PartitionScheme::kClassSkew: {
      const auto labels_of = ClassSkewAssignment(spec, num_classes);
      std::vector<std::vector<std::size_t>> holders(static_cast<std::size_t>(num_classes));
      for (std::size_t c = 0; c < labels_of.size(); ++c) {
        for (int y : labels_of[c]) holders[static_cast<std::size_t>(y)].push_back(c);
      }
      const auto by_label = ShuffledByLabel(dataset, num_classes, root);
      for (std::size_t y = 0; y < by_label.size(); ++y) {
        const auto& pool = by_label[y];
        const auto& owners = holders[y];
        if (pool.size() < owners.size()) {
          Fail(ErrorCode::kInfeasibleSpec, "label " + std::to_string(y) + " has " +
                                               std::to_string(pool.size()) + " examples for " +
                                               std::to_string(owners.size()) + " holders");
        }
        // Even split; the first (size % holders) holders get one extra.
        const std::size_t base = pool.size() / owners.size();
        const std::size_t extra = pool.size() % owners.size();
        std::size_t next = 0;
        for (std::size_t h = 0; h < owners.size(); ++h) {
          const std::size_t take = base + (h < extra ? 1 : 0);
          for (std::size_t t = 0; t < take; ++t) give(owners[h], pool[next++]);
        }
      }
      break;
    }
    case PartitionScheme::kDirichlet: {
      const auto proportions = DirichletProportions(spec, num_classes);
      const auto by_label = ShuffledByLabel(dataset, num_classes, root);
      for (std::size_t y = 0; y < by_label.size(); ++y) {
        const auto counts = SplitByProportions(by_label[y].size(), proportions[y]);
        std::size_t next = 0;
        for (std::size_t c = 0; c < counts.size(); ++c) {
          for (std::size_t t = 0; t < counts[c]; ++t) give(c, by_label[y][next++]);
        }
      }
      break;
    }
    case PartitionScheme::kIid: {
      std::vector<std::size_t> order(dataset.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng = root.Split(kIidOrder);
      rng.Shuffle(order);
      for (std::size_t i = 0; i < order.size(); ++i) {
        give(i % static_cast<std::size_t>(spec.num_clients), order[i]);
      }
      break;
    }
  }
  return clients;
}

void WritePartitionManifest(std::ostream& out, std::span<const ClientDataset> clients) {
  out << "client_id,label,count\n";
  for (const auto& client : clients) {
    const auto& histogram = client.label_histogram();
    for (std::size_t y = 0; y < histogram.size(); ++y) {
      if (histogram[y] > 0) out << client.client_id() << ',' << y << ',' << histogram[y] << '\n';
    }
  }
}

TrainTestSplit SplitPerClass(std::vector<LabeledImage> images, int num_classes,
                             std::size_t test_per_class, std::uint64_t seed) {
  Rng rng(seed);
  rng.Shuffle(images);
  std::vector<std::size_t> taken(static_cast<std::size_t>(num_classes), 0);
  TrainTestSplit split;
  for (auto& image : images) {
    auto& seen = taken.at(static_cast<std::size_t>(image.label));
    if (seen < test_per_class) {
      ++seen;
      split.test.push_back(std::move(image));
    } else {
      split.train.push_back(std::move(image));
    }
  }
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    split.train[i].origin = static_cast<std::int64_t>(i);
  }
  return split;
}

}  // namespace lb::data
