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

namespace lb::data {

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------- IDX (MNIST)

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Unsigned-byte IDX tensor. Dimensions are big-endian u32 on disk.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::uint32_t magic() const { return 0x00000800u | static_cast<std::uint32_t>(dims.size()); }
};

// Accepts magic 00 00 08 nd with 1 <= nd <= 4. The payload length must match
// the product of the dimensions exactly; short or long files are rejected as
// TruncatedFile.
IdxTensor ParseIdx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodeIdx(const IdxTensor& tensor);

// Combines an N x H x W image tensor and an N label tensor.
std::vector<LabeledImage> ImagesFromIdx(const IdxTensor& images, const IdxTensor& labels,
                                        int num_classes = 10);
std::vector<LabeledImage> LoadMnist(const std::filesystem::path& images_file,
                                    const std::filesystem::path& labels_file);

// ------------------------------------------------------------ CIFAR-10 binary

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr int kCifarSide = 32;

// 1 label byte then 1024 R, 1024 G, 1024 B bytes per record (channel planar).
std::vector<LabeledImage> ParseCifar10(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodeCifar10(std::span<const LabeledImage> images);
std::vector<LabeledImage> LoadCifar10(std::span<const std::filesystem::path> batch_files);

// ------------------------------------------------------------------- toy data

// Class y is a bright blob at a class-specific position plus a class-specific
// oriented bar, randomly shifted by up to one pixel, with bounded per-pixel
// jitter. Output is integer valued in [0, 255] and deterministic under seed.
std::vector<LabeledImage> MakeToyDataset(int n_per_class, int num_classes, ImageShape shape,
                                         std::uint64_t seed);

// Noise-free template of class `label`, the center of each class cluster.
std::vector<float> ToyTemplate(int label, int num_classes, ImageShape shape);

// ------------------------------------------------------------------ partition

enum class PartitionScheme { kClassSkew, kDirichlet, kIid };

struct PartitionSpec {
  PartitionScheme scheme = PartitionScheme::kClassSkew;
  int classes_per_client = 1;   // C, for kClassSkew
  double concentration = 0.5;   // Dirichlet parameter, for kDirichlet
  int num_clients = 10;
  std::uint64_t seed = 0;
};

void Validate(const PartitionSpec& spec, int num_classes);

// Label -> holders assignment for class skew: labels are shuffled once, then
// dealt round-robin into num_clients * C slots; client i owns slots
// [i*C, (i+1)*C).
std::vector<std::vector<int>> ClassSkewAssignment(const PartitionSpec& spec, int num_classes);

// Per-label client proportions for the Dirichlet scheme; row y is the draw
// for label y. Exposed so tests can recompute histograms independently.
std::vector<std::vector<double>> DirichletProportions(const PartitionSpec& spec, int num_classes);

// Splits `total` items by cumulative proportions: counts[c] =
// floor(total * cum[c]) - floor(total * cum[c-1]), last bucket takes the rest.
std::vector<std::size_t> SplitByProportions(std::size_t total, std::span<const double> proportions);

std::vector<ClientDataset> Partition(std::span<const LabeledImage> dataset, int num_classes,
                                     const PartitionSpec& spec);

// CSV with header client_id,label,count; one row per (client, label) with a
// nonzero count.
void WritePartitionManifest(std::ostream& out, std::span<const ClientDataset> clients);

// Deterministic train/test split: after a seeded shuffle, the first
// `test_per_class` images of each class go to the test set.
struct TrainTestSplit {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
};
TrainTestSplit SplitPerClass(std::vector<LabeledImage> images, int num_classes,
                             std::size_t test_per_class, std::uint64_t seed);

}  // namespace lb::data
