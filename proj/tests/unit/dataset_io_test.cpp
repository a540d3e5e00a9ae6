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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "expect_error.hpp"
#include "labelbalance/dataset_io.hpp"
#include "labelbalance/rng.hpp"
#include "labelbalance/tensor_file.hpp"
#include "oracles.hpp"

namespace {

using lb::ErrorCode;
using lb::data::PartitionScheme;
using lb::data::PartitionSpec;

void PutBe32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

// 2 images of 2x3 written byte by byte.
std::vector<std::uint8_t> HandIdxImages() {
  std::vector<std::uint8_t> b = {0, 0, 0x08, 3};
  PutBe32(b, 2);
  PutBe32(b, 2);
  PutBe32(b, 3);
  for (int i = 0; i < 12; ++i) b.push_back(static_cast<std::uint8_t>(i * 20));
  return b;
}

std::vector<std::uint8_t> HandIdxLabels(std::vector<std::uint8_t> labels) {
  std::vector<std::uint8_t> b = {0, 0, 0x08, 1};
  PutBe32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

TEST(Idx, ParsesHandBuiltImages) {
  const auto t = lb::data::ParseIdx(HandIdxImages());
  ASSERT_EQ(t.dims, (std::vector<std::uint32_t>{2, 2, 3}));
  EXPECT_EQ(t.magic(), lb::data::kIdxImagesMagic);
  ASSERT_EQ(t.data.size(), 12u);
  EXPECT_EQ(t.data[5], 100);
  const auto labels = lb::data::ParseIdx(HandIdxLabels({3, 7}));
  const auto images = lb::data::ImagesFromIdx(t, labels);
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(images[1].label, 7);
  EXPECT_EQ(images[1].shape, (lb::ImageShape{2, 3, 1}));
  EXPECT_FLOAT_EQ(images[1].at(1, 2, 0), 220.0f);
  EXPECT_FLOAT_EQ(images[0].at(0, 1, 0), 20.0f);
}

TEST(Idx, EncodeRoundTrip) {
  lb::data::IdxTensor t{{3, 4}, {}};
  for (int i = 0; i < 12; ++i) t.data.push_back(static_cast<std::uint8_t>(255 - i));
  const auto bytes = lb::data::EncodeIdx(t);
  EXPECT_EQ(bytes.size(), 4u + 8u + 12u);
  const auto back = lb::data::ParseIdx(bytes);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.data, t.data);
}

TEST(Idx, RejectsBadMagic) {
  auto b = HandIdxImages();
  b[2] = 0x09;   // float element type
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kBadMagic);
  b = HandIdxImages();
  b[0] = 1;
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kBadMagic);
  b = HandIdxImages();
  b[3] = 0;
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kBadMagic);
}

TEST(Idx, RejectsTruncatedAndOverlong) {
  auto b = HandIdxImages();
  b.pop_back();
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kTruncatedFile);
  b = HandIdxImages();
  b.push_back(0);
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kTruncatedFile);
  b = HandIdxImages();
  b.resize(10);   // inside the dimension block
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kTruncatedFile);
  EXPECT_LB_ERROR(lb::data::ParseIdx(std::vector<std::uint8_t>{0, 0}), ErrorCode::kTruncatedFile);
}

TEST(Idx, RejectsOverflowingDimensions) {
  std::vector<std::uint8_t> b = {0, 0, 0x08, 4};
  for (int i = 0; i < 4; ++i) PutBe32(b, 0xFFFFFFFFu);
  EXPECT_LB_ERROR(lb::data::ParseIdx(b), ErrorCode::kDimensionOverflow);
}

TEST(Idx, LabelOutOfRange) {
  const auto t = lb::data::ParseIdx(HandIdxImages());
  const auto labels = lb::data::ParseIdx(HandIdxLabels({3, 10}));
  EXPECT_LB_ERROR(lb::data::ImagesFromIdx(t, labels), ErrorCode::kLabelOutOfRange);
}

TEST(Idx, LoadMnistFromFiles) {
  const auto dir = oracle::TempDir("mnist");
  lb::data::WriteFileBytes(dir / "img", HandIdxImages());
  lb::data::WriteFileBytes(dir / "lab", HandIdxLabels({1, 2}));
  const auto images = lb::data::LoadMnist(dir / "img", dir / "lab");
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(images[0].label, 1);
  EXPECT_EQ(images[0].origin, 0);
  EXPECT_LB_ERROR(lb::data::LoadMnist(dir / "missing", dir / "lab"), ErrorCode::kIo);
}

std::vector<std::uint8_t> HandCifarRecord(std::uint8_t label) {
  std::vector<std::uint8_t> r = {label};
  for (int c = 0; c < 3; ++c) {
    for (int p = 0; p < 1024; ++p) r.push_back(static_cast<std::uint8_t>((p + 50 * c) % 256));
  }
  return r;
}

TEST(Cifar, PlanarToInterleaved) {
  auto bytes = HandCifarRecord(4);
  const auto second = HandCifarRecord(9);
  bytes.insert(bytes.end(), second.begin(), second.end());
  const auto images = lb::data::ParseCifar10(bytes);
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(images[0].label, 4);
  EXPECT_EQ(images[1].label, 9);
  EXPECT_EQ(images[0].shape, (lb::ImageShape{32, 32, 3}));
  // Pixel (y=1, x=2) is planar index 34.
  EXPECT_FLOAT_EQ(images[0].at(1, 2, 0), 34.0f);
  EXPECT_FLOAT_EQ(images[0].at(1, 2, 1), 84.0f);
  EXPECT_FLOAT_EQ(images[0].at(1, 2, 2), 134.0f);
  EXPECT_EQ(lb::data::EncodeCifar10(images), bytes);
}

TEST(Cifar, RejectsBadLengthAndLabel) {
  auto bytes = HandCifarRecord(1);
  bytes.pop_back();
  EXPECT_LB_ERROR(lb::data::ParseCifar10(bytes), ErrorCode::kBadRecordLength);
  EXPECT_LB_ERROR(lb::data::ParseCifar10(HandCifarRecord(10)), ErrorCode::kLabelOutOfRange);
}

TEST(Toy, DeterministicIntegerAndBalanced) {
  const lb::ImageShape shape{16, 16, 1};
  const auto a = lb::data::MakeToyDataset(20, 10, shape, 5);
  const auto b = lb::data::MakeToyDataset(20, 10, shape, 5);
  ASSERT_EQ(a.size(), 200u);
  const auto hist = lb::LabelHistogram(a, 10);
  for (auto h : hist) EXPECT_EQ(h, 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].pixels, b[i].pixels);
    for (float p : a[i].pixels) {
      ASSERT_EQ(p, std::round(p));
      ASSERT_GE(p, 0.0f);
      ASSERT_LE(p, 255.0f);
    }
  }
  const auto c = lb::data::MakeToyDataset(20, 10, shape, 6);
  EXPECT_NE(a[0].pixels, c[0].pixels);
}

TEST(Toy, ClassesSeparableByNearestTemplate) {
  const lb::ImageShape shape{16, 16, 1};
  const auto images = lb::data::MakeToyDataset(50, 10, shape, 1);
  std::vector<std::vector<float>> templates;
  for (int y = 0; y < 10; ++y) templates.push_back(lb::data::ToyTemplate(y, 10, shape));
  int correct = 0;
  for (const auto& image : images) {
    int best = 0;
    double best_d = INFINITY;
    for (int y = 0; y < 10; ++y) {
      double d = 0;
      for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        d += std::pow(image.pixels[i] - templates[y][i], 2);
      }
      if (d < best_d) best_d = d, best = y;
    }
    correct += best == image.label;
  }
  EXPECT_GT(correct, 0.7 * images.size());
}

std::vector<lb::LabeledImage> TinyDataset(int per_class, int classes) {
  return lb::data::MakeToyDataset(per_class, classes, {4, 4, 1}, 99);
}

TEST(Partition, OneClassPerClientCoversAllLabels) {
  const auto data = TinyDataset(30, 10);
  const PartitionSpec spec{PartitionScheme::kClassSkew, 1, 0.5, 10, 17};
  const auto clients = lb::data::Partition(data, 10, spec);
  ASSERT_EQ(clients.size(), 10u);
  std::set<int> covered;
  for (const auto& c : clients) {
    int support = 0;
    for (int y = 0; y < 10; ++y) {
      if (c.count(y) > 0) {
        ++support;
        covered.insert(y);
        EXPECT_EQ(c.count(y), 30u);
      }
    }
    EXPECT_EQ(support, 1);
  }
  EXPECT_EQ(covered.size(), 10u);
}

TEST(Partition, SingleClientGetsEverything) {
  const auto data = TinyDataset(5, 10);
  const PartitionSpec spec{PartitionScheme::kClassSkew, 10, 0.5, 1, 3};
  const auto clients = lb::data::Partition(data, 10, spec);
  ASSERT_EQ(clients.size(), 1u);
  EXPECT_EQ(clients[0].size(), data.size());
  EXPECT_EQ(clients[0].label_histogram(), lb::LabelHistogram(data, 10));
}

TEST(Partition, ConservationSupportAndDisjointnessAcrossSeeds) {
  const auto data = TinyDataset(23, 10);
  const auto global = lb::LabelHistogram(data, 10);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<PartitionSpec> specs = {
        {PartitionScheme::kClassSkew, 1, 0, 10, seed},
        {PartitionScheme::kClassSkew, 2, 0, 10, seed},
        {PartitionScheme::kClassSkew, 3, 0, 7, seed},
        {PartitionScheme::kDirichlet, 1, 0.05, 20, seed},
        {PartitionScheme::kDirichlet, 1, 1.0, 5, seed},
        {PartitionScheme::kIid, 1, 0, 10, seed},
    };
    for (const auto& spec : specs) {
      const auto clients = lb::data::Partition(data, 10, spec);
      std::vector<std::size_t> sum(10, 0);
      std::set<std::int64_t> origins;
      std::size_t total = 0;
      for (const auto& c : clients) {
        ASSERT_TRUE(c.HistogramConsistent());
        for (int y = 0; y < 10; ++y) sum[y] += c.count(y);
        for (const auto& ex : c.examples()) {
          origins.insert(ex.origin);
          EXPECT_EQ(ex.provenance, lb::Provenance::kReal);
        }
        total += c.size();
        if (spec.scheme == PartitionScheme::kClassSkew) {
          int support = 0;
          for (int y = 0; y < 10; ++y) support += c.count(y) > 0;
          EXPECT_EQ(support, spec.classes_per_client);
        }
      }
      EXPECT_EQ(sum, global);
      EXPECT_EQ(origins.size(), total) << "a real example landed on two clients";
    }
  }
}

TEST(Partition, EvenSplitAmongHolders) {
  const auto data = TinyDataset(25, 10);
  const PartitionSpec spec{PartitionScheme::kClassSkew, 3, 0, 10, 4};
  const auto labels_of = lb::data::ClassSkewAssignment(spec, 10);
  const auto clients = lb::data::Partition(data, 10, spec);
  for (int y = 0; y < 10; ++y) {
    std::vector<std::size_t> shares;
    for (std::size_t c = 0; c < clients.size(); ++c) {
      if (std::find(labels_of[c].begin(), labels_of[c].end(), y) != labels_of[c].end()) {
        shares.push_back(clients[c].count(y));
      } else {
        EXPECT_EQ(clients[c].count(y), 0u);
      }
    }
    ASSERT_FALSE(shares.empty());
    const auto [lo, hi] = std::minmax_element(shares.begin(), shares.end());
    EXPECT_LE(*hi - *lo, 1u);
  }
}

TEST(Partition, DirichletMatchesIndependentDraw) {
  const auto data = TinyDataset(40, 10);
  const PartitionSpec spec{PartitionScheme::kDirichlet, 1, 0.05, 20, 2024};
  const auto clients = lb::data::Partition(data, 10, spec);
  const lb::Rng root(spec.seed);
  for (int y = 0; y < 10; ++y) {
    lb::Rng rng = root.Split({3, static_cast<std::uint64_t>(y)});
    const auto p = lb::SampleDirichlet(rng, 0.05, 20);
    // Floor-of-cumulative split computed here from scratch.
    double cum = 0;
    std::size_t prev = 0;
    for (int c = 0; c < 20; ++c) {
      std::size_t expected;
      if (c == 19) {
        expected = 40 - prev;
      } else {
        cum += p[c];
        const auto b = std::max(prev, std::min<std::size_t>(40, std::size_t(std::floor(cum * 40))));
        expected = b - prev;
        prev = b;
      }
      EXPECT_EQ(clients[c].count(y), expected) << "label " << y << " client " << c;
    }
  }
}

TEST(Partition, InfeasibleSpecs) {
  const auto data = TinyDataset(5, 10);
  EXPECT_LB_ERROR(lb::data::Partition(data, 10, {PartitionScheme::kClassSkew, 0, 0, 10, 0}),
                  ErrorCode::kInfeasibleSpec);
  EXPECT_LB_ERROR(lb::data::Partition(data, 10, {PartitionScheme::kClassSkew, 11, 0, 10, 0}),
                  ErrorCode::kInfeasibleSpec);
  EXPECT_LB_ERROR(lb::data::Partition(data, 10, {PartitionScheme::kClassSkew, 2, 0, 4, 0}),
                  ErrorCode::kInfeasibleSpec);
  EXPECT_LB_ERROR(lb::data::Partition(data, 10, {PartitionScheme::kDirichlet, 1, 0.0, 4, 0}),
                  ErrorCode::kInfeasibleSpec);
  EXPECT_LB_ERROR(lb::data::Partition(data, 10, {PartitionScheme::kIid, 1, 0, 0, 0}),
                  ErrorCode::kInfeasibleSpec);
  // 10 holders of each label but only 5 examples per label.
  EXPECT_LB_ERROR(lb::data::Partition(data, 10, {PartitionScheme::kClassSkew, 10, 0, 10, 0}),
                  ErrorCode::kInfeasibleSpec);
}

TEST(Partition, ManifestCsv) {
  lb::ClientDataset a(0, 3), b(1, 3);
  lb::LabeledImage img{{1, 1, 1}, {0.0f}, 2};
  a.Add(img);
  a.Add(img);
  img.label = 0;
  b.Add(img);
  std::ostringstream out;
  const std::vector<lb::ClientDataset> clients = {a, b};
  lb::data::WritePartitionManifest(out, clients);
  EXPECT_EQ(out.str(), "client_id,label,count\n0,2,2\n1,0,1\n");
}

TEST(Partition, SplitPerClassCounts) {
  auto data = TinyDataset(12, 5);
  const auto split = lb::data::SplitPerClass(data, 5, 4, 1);
  const auto test_hist = lb::LabelHistogram(split.test, 5);
  const auto train_hist = lb::LabelHistogram(split.train, 5);
  for (int y = 0; y < 5; ++y) {
    EXPECT_EQ(test_hist[y], 4u);
    EXPECT_EQ(train_hist[y], 8u);
  }
  for (std::size_t i = 0; i < split.train.size(); ++i) EXPECT_EQ(split.train[i].origin, (std::int64_t)i);
}

TEST(TensorFile, RoundTripKeepsUnclampedValues) {
  lb::LabeledImage img{{2, 3, 1}, {-12.5f, 0.f, 300.25f, 1e-3f, 255.f, 7.f}, 4,
                       lb::Provenance::kMixup};
  std::stringstream buffer;
  lb::data::WriteTensor(buffer, img);
  const auto back = lb::data::ReadTensor(buffer);
  EXPECT_EQ(back.shape, img.shape);
  EXPECT_EQ(back.pixels, img.pixels);
  EXPECT_EQ(back.label, 4);
  EXPECT_EQ(back.provenance, lb::Provenance::kMixup);
  std::string text = buffer.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"dims":[2,3,1],"label":4,"provenance":"mixup"})");
}

TEST(TensorFile, TruncatedPayload) {
  lb::LabeledImage img{{2, 2, 1}, {1, 2, 3, 4}, 0};
  std::stringstream buffer;
  lb::data::WriteTensor(buffer, img);
  std::string text = buffer.str();
  text.pop_back();
  std::stringstream cut(text);
  EXPECT_LB_ERROR(lb::data::ReadTensor(cut), ErrorCode::kTruncatedFile);
}

TEST(TensorFile, PnmClampsOnExport) {
  const auto dir = oracle::TempDir("pnm");
  lb::LabeledImage img{{1, 2, 1}, {-40.f, 400.f}, 0};
  lb::data::WritePnm(dir / "x.pgm", img);
  const auto bytes = lb::data::ReadFileBytes(dir / "x.pgm");
  const std::string header = "P5\n2 1\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 2);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + header.size()), header);
  EXPECT_EQ(bytes[header.size()], 0);
  EXPECT_EQ(bytes[header.size() + 1], 255);
}

}  // namespace
