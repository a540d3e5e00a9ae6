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

#include <bit>
#include <fstream>
#include <string>

#include <json.hpp>

#include "labelbalance/error.hpp"
#include "labelbalance/fed_engine.hpp"

namespace lb::fed {

void WriteCheckpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot create " + path.string());
  const ImageShape shape = params.schema.image_shape();
  nlohmann::json header;
  header["input"] = {shape.height, shape.width, shape.channels};
  header["layers"] = params.schema.Describe();
  header["num_params"] = params.values.size();
  out << header.dump() << '\n';
  std::string raw(params.values.size() * 4, '\0');
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(params.values[i]);
    for (int b = 0; b < 4; ++b) raw[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

ModelParams ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kTruncatedFile, "missing checkpoint header");
  ModelParams params;
  std::size_t count = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    const auto& dims = header.at("input");
    const ImageShape shape{dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>()};
    params.schema = ModelSchema::Parse(shape, header.at("layers").get<std::string>());
    count = header.at("num_params").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kBadMagic, std::string("malformed checkpoint header: ") + e.what());
  }
  if (count != params.schema.num_params()) {
    Fail(ErrorCode::kSchemaMismatch, "checkpoint parameter count disagrees with its layers");
  }
  std::string raw(count * 4, '\0');
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    Fail(ErrorCode::kTruncatedFile, "checkpoint payload shorter than header declares");
  }
  params.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * i + b])) << (8 * b);
    }
    params.values[i] = std::bit_cast<float>(bits);
  }
  return params;
}

}  // namespace lb::fed
