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

#include "labelbalance/image.hpp"

#include <algorithm>

#include "labelbalance/error.hpp"

namespace lb {

std::string ToString(const ImageShape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

const char* ToString(Provenance provenance) {
  switch (provenance) {
    case Provenance::kReal: return "real";
    case Provenance::kMixup: return "mixup";
    case Provenance::kNaturalNoise: return "natural_noise";
  }
  return "unknown";
}

Provenance ParseProvenance(const std::string& text) {
  if (text == "real") return Provenance::kReal;
  if (text == "mixup") return Provenance::kMixup;
  if (text == "natural_noise") return Provenance::kNaturalNoise;
  Fail(ErrorCode::kInvalidArgument, "unknown provenance '" + text + "'");
}

std::vector<std::size_t> LabelHistogram(std::span<const LabeledImage> images, int num_classes) {
  std::vector<std::size_t> histogram(static_cast<std::size_t>(num_classes), 0);
  for (const auto& image : images) {
    if (image.label < 0 || image.label >= num_classes) {
      Fail(ErrorCode::kLabelOutOfRange, "label " + std::to_string(image.label));
    }
    ++histogram[static_cast<std::size_t>(image.label)];
  }
  return histogram;
}

ClientDataset::ClientDataset(int client_id, int num_classes)
    : client_id_(client_id),
      num_classes_(num_classes),
      histogram_(static_cast<std::size_t>(num_classes), 0) {
  if (num_classes <= 0) Fail(ErrorCode::kInvalidArgument, "num_classes must be positive");
}

void ClientDataset::Add(LabeledImage image) {
  if (image.label < 0 || image.label >= num_classes_) {
    Fail(ErrorCode::kLabelOutOfRange, "label " + std::to_string(image.label) + " not in [0, " +
                                          std::to_string(num_classes_) + ")");
  }
  if (!examples_.empty() && image.shape != examples_.front().shape) {
    Fail(ErrorCode::kShapeMismatch, "image " + ToString(image.shape) + " added to dataset of " +
                                        ToString(examples_.front().shape));
  }
  ++histogram_[static_cast<std::size_t>(image.label)];
  examples_.push_back(std::move(image));
}

std::size_t ClientDataset::count(int label) const {
  if (label < 0 || label >= num_classes_) return 0;
  return histogram_[static_cast<std::size_t>(label)];
}

std::size_t ClientDataset::MaxClassCount() const {
  return *std::max_element(histogram_.begin(), histogram_.end());
}

std::size_t ClientDataset::CountProvenance(Provenance provenance) const {
  return static_cast<std::size_t>(std::count_if(
      examples_.begin(), examples_.end(),
      [provenance](const LabeledImage& image) { return image.provenance == provenance; }));
}

std::vector<std::size_t> ClientDataset::IndicesWithLabel(int label) const {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    if (examples_[i].label == label) indices.push_back(i);
  }
  return indices;
}

ClientDataset ClientDataset::RealOnly() const {
  ClientDataset out(client_id_, num_classes_);
  for (const auto& image : examples_) {
    if (image.provenance == Provenance::kReal) out.Add(image);
  }
  return out;
}

bool ClientDataset::HistogramConsistent() const {
  return LabelHistogram(examples_, num_classes_) == histogram_;
}

}  // namespace lb
