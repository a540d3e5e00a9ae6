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
#include <span>
#include <string>
#include <vector>

namespace lb {

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const ImageShape&) const = default;
};

std::string ToString(const ImageShape& shape);

enum class Provenance : std::uint8_t { kReal, kMixup, kNaturalNoise };

const char* ToString(Provenance provenance);
Provenance ParseProvenance(const std::string& text);

// Pixels are stored row-major, channel-interleaved (HWC), nominal range
// [0, 255]. Real images are integer valued; pseudo-images need not be.
struct LabeledImage {
  ImageShape shape;
  std::vector<float> pixels;
  int label = 0;
  Provenance provenance = Provenance::kReal;
  // Index of a Real image in the dataset it was loaded from, -1 otherwise.
  std::int64_t origin = -1;

  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c];
  }
};

std::vector<std::size_t> LabelHistogram(std::span<const LabeledImage> images, int num_classes);

// A client's local multiset of examples. The label histogram is maintained
// incrementally and can be re-verified with HistogramConsistent().
class ClientDataset {
 public:
  ClientDataset(int client_id, int num_classes);

  void Add(LabeledImage image);

  int client_id() const noexcept { return client_id_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  std::span<const LabeledImage> examples() const noexcept { return examples_; }
  const LabeledImage& operator[](std::size_t i) const { return examples_[i]; }
  const std::vector<std::size_t>& label_histogram() const noexcept { return histogram_; }
  std::size_t count(int label) const;
  std::size_t MaxClassCount() const;
  std::size_t CountProvenance(Provenance provenance) const;

  // Indices of examples carrying `label`, in insertion order.
  std::vector<std::size_t> IndicesWithLabel(int label) const;
  // Copy holding only the Real examples.
  ClientDataset RealOnly() const;
  bool HistogramConsistent() const;

 private:
  int client_id_;
  int num_classes_;
  std::vector<LabeledImage> examples_;
  std::vector<std::size_t> histogram_;
};

}  // namespace lb
