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

#include <filesystem>
#include <iosfwd>

#include "labelbalance/image.hpp"

namespace lb::data {

// Pseudo-image file (.lbt): one text header line
//   {"dims":[H,W,C],"label":L,"provenance":"mixup"}\n
// followed by H*W*C little-endian IEEE-754 float32 values in HWC order.
// Values are stored unclamped.
void WriteTensor(std::ostream& out, const LabeledImage& image);
LabeledImage ReadTensor(std::istream& in);
void WriteTensorFile(const std::filesystem::path& path, const LabeledImage& image);
LabeledImage ReadTensorFile(const std::filesystem::path& path);

// Binary PPM (3 channels) or PGM (1 channel); values are rounded and clamped
// to [0, 255] here and only here.
void WritePnm(const std::filesystem::path& path, const LabeledImage& image);

// All *.lbt files in `dir`, sorted by file name.
std::vector<std::filesystem::path> ListTensorFiles(const std::filesystem::path& dir);

}  // namespace lb::data
