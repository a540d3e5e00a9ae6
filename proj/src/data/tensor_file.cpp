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

#include "labelbalance/tensor_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "labelbalance/error.hpp"

namespace lb::data {

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

void PutFloatLe(std::ostream& out, float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  char buffer[4];
  for (int i = 0; i < 4; ++i) buffer[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(buffer, 4);
}

float GetFloatLe(const unsigned char* buffer) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(buffer[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void WriteTensor(std::ostream& out, const LabeledImage& image) {
  nlohmann::json header;
  header["dims"] = {image.shape.height, image.shape.width, image.shape.channels};
  header["label"] = image.label;
  header["provenance"] = ToString(image.provenance);
  out << header.dump() << '\n';
  for (float value : image.pixels) PutFloatLe(out, value);
}

LabeledImage ReadTensor(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kTruncatedFile, "missing tensor header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kBadMagic, std::string("tensor header is not JSON: ") + e.what());
  }
  LabeledImage image;
  try {
    const auto& dims = header.at("dims");
    image.shape = {dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>()};
    image.label = header.at("label").get<int>();
    image.provenance = ParseProvenance(header.at("provenance").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kBadMagic, std::string("malformed tensor header: ") + e.what());
  }
  if (image.shape.height <= 0 || image.shape.width <= 0 || image.shape.channels <= 0) {
    Fail(ErrorCode::kDimensionOverflow, "non-positive tensor dimension");
  }
  std::vector<unsigned char> raw(image.shape.size() * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    Fail(ErrorCode::kTruncatedFile, "tensor payload shorter than header declares");
  }
  image.pixels.resize(image.shape.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) image.pixels[i] = GetFloatLe(&raw[4 * i]);
  return image;
}

void WriteTensorFile(const std::filesystem::path& path, const LabeledImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot create " + path.string());
  WriteTensor(out, image);
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

LabeledImage ReadTensorFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  return ReadTensor(in);
}

void WritePnm(const std::filesystem::path& path, const LabeledImage& image) {
  const int channels = image.shape.channels;
  if (channels != 1 && channels != 3) {
    Fail(ErrorCode::kShapeMismatch, "PNM export needs 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot create " + path.string());
  out << (channels == 3 ? "P6" : "P5") << '\n'
      << image.shape.width << ' ' << image.shape.height << "\n255\n";
  for (float value : image.pixels) {
    const float clamped = std::clamp(std::round(value), 0.0f, 255.0f);
    out.put(static_cast<char>(static_cast<unsigned char>(clamped)));
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::filesystem::path> ListTensorFiles(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) Fail(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lbt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace lb::data
