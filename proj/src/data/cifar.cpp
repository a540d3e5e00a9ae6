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

#include "labelbalance/dataset_io.hpp"
#include "labelbalance/error.hpp"

namespace lb::data {

namespace {
constexpr std::size_t kPlane = static_cast<std::size_t>(kCifarSide) * kCifarSide;
}

std::vector<LabeledImage> ParseCifar10(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    Fail(ErrorCode::kBadRecordLength,
         std::to_string(bytes.size()) + " bytes is not a multiple of 3073");
  }
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  std::vector<LabeledImage> out;
  out.reserve(records);
  for (std::size_t r = 0; r < records; ++r) {
    const auto record = bytes.subspan(r * kCifarRecordBytes, kCifarRecordBytes);
    if (record[0] > 9) {
      Fail(ErrorCode::kLabelOutOfRange, "record " + std::to_string(r) + " has label byte " +
                                            std::to_string(record[0]));
    }
    LabeledImage image;
    image.shape = {kCifarSide, kCifarSide, 3};
    image.label = record[0];
    image.origin = static_cast<std::int64_t>(r);
    image.pixels.resize(image.shape.size());
    for (std::size_t p = 0; p < kPlane; ++p) {
      for (std::size_t c = 0; c < 3; ++c) {
        image.pixels[p * 3 + c] = record[1 + c * kPlane + p];
      }
    }
    out.push_back(std::move(image));
  }
  return out;
}

std::vector<std::uint8_t> EncodeCifar10(std::span<const LabeledImage> images) {
  std::vector<std::uint8_t> out;
  out.reserve(images.size() * kCifarRecordBytes);
  for (const auto& image : images) {
    if (image.shape != ImageShape{kCifarSide, kCifarSide, 3}) {
      Fail(ErrorCode::kShapeMismatch, "CIFAR-10 records are 32x32x3");
    }
    if (image.label < 0 || image.label > 9) Fail(ErrorCode::kLabelOutOfRange, "label not in 0..9");
    out.push_back(static_cast<std::uint8_t>(image.label));
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < kPlane; ++p) {
        const float value = std::clamp(std::round(image.pixels[p * 3 + c]), 0.0f, 255.0f);
        out.push_back(static_cast<std::uint8_t>(value));
      }
    }
  }
  return out;
}

std::vector<LabeledImage> LoadCifar10(std::span<const std::filesystem::path> batch_files) {
  std::vector<LabeledImage> out;
  for (const auto& path : batch_files) {
    auto batch = ParseCifar10(ReadFileBytes(path));
    for (auto& image : batch) {
      image.origin = static_cast<std::int64_t>(out.size());
      out.push_back(std::move(image));
    }
  }
  return out;
}

}  // namespace lb::data
