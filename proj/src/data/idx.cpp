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

#include <fstream>
#include <iterator>
#include <limits>

#include "labelbalance/dataset_io.hpp"
#include "labelbalance/error.hpp"

namespace lb::data {

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

namespace {

std::uint32_t ReadBigEndian32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void AppendBigEndian32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  out.push_back(static_cast<std::uint8_t>(value >> 24));
  out.push_back(static_cast<std::uint8_t>(value >> 16));
  out.push_back(static_cast<std::uint8_t>(value >> 8));
  out.push_back(static_cast<std::uint8_t>(value));
}

}  // namespace

IdxTensor ParseIdx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) Fail(ErrorCode::kTruncatedFile, "IDX header shorter than 4 bytes");
  const std::size_t ndims = bytes[3];
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08 || ndims < 1 || ndims > 4) {
    Fail(ErrorCode::kBadMagic, "unsupported IDX magic");
  }
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) Fail(ErrorCode::kTruncatedFile, "IDX dimension block truncated");

  IdxTensor tensor;
  std::size_t elements = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const std::uint32_t dim = ReadBigEndian32(bytes, 4 + 4 * d);
    if (dim != 0 && elements > std::numeric_limits<std::size_t>::max() / dim) {
      Fail(ErrorCode::kDimensionOverflow, "IDX element count overflows");
    }
    elements *= dim;
    tensor.dims.push_back(dim);
  }
  if (elements > std::numeric_limits<std::size_t>::max() - header) {
    Fail(ErrorCode::kDimensionOverflow, "IDX element count overflows");
  }
  if (bytes.size() != header + elements) {
    Fail(ErrorCode::kTruncatedFile, "IDX payload is " + std::to_string(bytes.size() - header) +
                                        " bytes, header declares " + std::to_string(elements));
  }
  tensor.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return tensor;
}

std::vector<std::uint8_t> EncodeIdx(const IdxTensor& tensor) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * tensor.dims.size() + tensor.data.size());
  AppendBigEndian32(out, tensor.magic());
  for (std::uint32_t dim : tensor.dims) AppendBigEndian32(out, dim);
  out.insert(out.end(), tensor.data.begin(), tensor.data.end());
  return out;
}

std::vector<LabeledImage> ImagesFromIdx(const IdxTensor& images, const IdxTensor& labels,
                                        int num_classes) {
  if (images.dims.size() != 3 || images.magic() != kIdxImagesMagic) {
    Fail(ErrorCode::kBadMagic, "image file must be a 3-D IDX tensor");
  }
  if (labels.dims.size() != 1 || labels.magic() != kIdxLabelsMagic) {
    Fail(ErrorCode::kBadMagic, "label file must be a 1-D IDX tensor");
  }
  if (images.dims[0] != labels.dims[0]) {
    Fail(ErrorCode::kShapeMismatch, "image and label counts differ");
  }
  const ImageShape shape{static_cast<int>(images.dims[1]), static_cast<int>(images.dims[2]), 1};
  const std::size_t per_image = shape.size();
  std::vector<LabeledImage> out;
  out.reserve(images.dims[0]);
  for (std::size_t n = 0; n < images.dims[0]; ++n) {
    LabeledImage image;
    image.shape = shape;
    image.label = labels.data[n];
    if (image.label >= num_classes) {
      Fail(ErrorCode::kLabelOutOfRange, "label byte " + std::to_string(image.label));
    }
    image.origin = static_cast<std::int64_t>(n);
    const auto* first = images.data.data() + n * per_image;
    image.pixels.assign(first, first + per_image);
    out.push_back(std::move(image));
  }
  return out;
}

std::vector<LabeledImage> LoadMnist(const std::filesystem::path& images_file,
                                    const std::filesystem::path& labels_file) {
  return ImagesFromIdx(ParseIdx(ReadFileBytes(images_file)), ParseIdx(ReadFileBytes(labels_file)));
}

}  // namespace lb::data
