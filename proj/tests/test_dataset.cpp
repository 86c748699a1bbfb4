/**
 * Copyright 2026 The BO-Aug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "boaug/dataset.hpp"
#include "boaug/png_io.hpp"
#include "support/pattern_dataset.hpp"
#include "support/temp_dir.hpp"

using namespace boaug;
using namespace boaug::data;
namespace fs = std::filesystem;

TEST_CASE("cifar binary layout decodes plane order", "[dataset]") {
  testsupport::TempDir tmp("cifar");
  std::string path = tmp.file("batch.bin");
  {
    std::ofstream out(path, std::ios::binary);
    // Record 0: all zero. Record 1: label 9, red plane 255.
    std::vector<unsigned char> rec(3073, 0);
    out.write(reinterpret_cast<char*>(rec.data()), rec.size());
    rec[0] = 9;
    for (int i = 0; i < 1024; ++i) rec[1 + i] = 255;
    out.write(reinterpret_cast<char*>(rec.data()), rec.size());
  }
  LabeledDataset ds = load_cifar10_binary(path);
  REQUIRE(ds.size() == 2);
  CHECK(ds.class_count == 10);
  CHECK(ds.labels[0] == 0);
  CHECK(ds.labels[1] == 9);
  for (auto s : ds.images[0].data) CHECK(s == 0);
  for (int p = 0; p < 1024; ++p) {
    CHECK(ds.images[1].data[p * 3 + 0] == 255);
    CHECK(ds.images[1].data[p * 3 + 1] == 0);
    CHECK(ds.images[1].data[p * 3 + 2] == 0);
  }
}

TEST_CASE("cifar binary rejects bad files", "[dataset]") {
  testsupport::TempDir tmp("cifarbad");
  {
    std::ofstream out(tmp.file("trunc.bin"), std::ios::binary);
    std::vector<char> partial(3072, 0);
    out.write(partial.data(), partial.size());
  }
  CHECK_THROWS_AS(load_cifar10_binary(tmp.file("trunc.bin")), FormatError);
  CHECK_THROWS_MATCHES(load_cifar10_binary(tmp.file("trunc.bin")), FormatError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("offset")));
  {
    std::ofstream out(tmp.file("label.bin"), std::ios::binary);
    std::vector<char> rec(3073, 0);
    rec[0] = 10;  // out of range
    out.write(rec.data(), rec.size());
  }
  CHECK_THROWS_AS(load_cifar10_binary(tmp.file("label.bin")), FormatError);
  CHECK_THROWS_AS(load_cifar10_binary(tmp.file("missing.bin")), FormatError);
}

TEST_CASE("cifar write/reload round trip is byte identical", "[dataset]") {
  testsupport::TempDir tmp("cifarrt");
  LabeledDataset ds = testsupport::make_pattern_dataset(20, 10, 32, 32, 99);
  save_cifar10_binary(tmp.file("rt.bin"), ds);
  LabeledDataset back = load_cifar10_binary(tmp.file("rt.bin"));
  REQUIRE(back.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.labels[i] == ds.labels[i]);
    REQUIRE(back.images[i].data == ds.images[i].data);
  }
  // And the file itself round-trips byte for byte.
  save_cifar10_binary(tmp.file("rt2.bin"), back);
  CHECK(testsupport::read_text(tmp.file("rt.bin")) == testsupport::read_text(tmp.file("rt2.bin")));
}

TEST_CASE("image directory loader sorts classes lexicographically", "[dataset]") {
  testsupport::TempDir tmp("imgdir");
  fs::create_directories(tmp.path() / "b");
  fs::create_directories(tmp.path() / "a");
  RngStream rng(7);
  auto make = [&](const std::string& cls, const std::string& name, int w, int h) {
    img::Image im(w, h);
    for (auto& s : im.data) s = static_cast<std::uint8_t>(rng.next_below(256));
    img::write_png((tmp.path() / cls / name).string(), im);
  };
  make("a", "x.png", 8, 8);
  make("a", "y.png", 8, 8);
  make("b", "p.png", 8, 8);
  make("b", "q.png", 8, 8);
  make("b", "r.png", 12, 5);  // sizes may differ per image

  LabeledDataset ds = load_image_dir(tmp.str());
  REQUIRE(ds.size() == 5);
  CHECK(ds.class_count == 2);
  CHECK(ds.labels == std::vector<int>{0, 0, 1, 1, 1});
  CHECK(ds.images[4].width == 12);

  testsupport::TempDir empty("imgdirempty");
  CHECK_THROWS_AS(load_image_dir(empty.str()), FormatError);

  testsupport::write_text((tmp.path() / "a" / "broken.png").string(), "junk");
  CHECK_THROWS_MATCHES(load_image_dir(tmp.str()), FormatError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("broken.png")));
}

TEST_CASE("reduced split is seeded, disjoint and duplicate free", "[dataset]") {
  LabeledDataset ds = testsupport::make_pattern_dataset(10, 2, 4, 4, 5);
  // Tag each image so indices are recoverable.
  for (size_t i = 0; i < ds.size(); ++i) ds.images[i].data[0] = static_cast<std::uint8_t>(i);

  auto [train, val] = make_reduced_split(ds, 4, 3, 42);
  REQUIRE(train.size() == 4);
  REQUIRE(val.size() == 3);
  std::set<int> seen;
  for (const auto& im : train.images) seen.insert(im.data[0]);
  for (const auto& im : val.images) seen.insert(im.data[0]);
  CHECK(seen.size() == 7);  // disjoint, no duplicates

  auto [train2, val2] = make_reduced_split(ds, 4, 3, 42);
  for (size_t i = 0; i < train.size(); ++i) {
    CHECK(train.images[i].data == train2.images[i].data);
  }
  auto [train3, val3] = make_reduced_split(ds, 4, 3, 43);
  bool any_diff = false;
  for (size_t i = 0; i < train.size(); ++i) {
    any_diff |= train.images[i].data != train3.images[i].data;
  }
  CHECK(any_diff);

  CHECK_THROWS_AS(make_reduced_split(ds, 8, 3, 1), DomainError);
}

TEST_CASE("stratified split preserves class proportions", "[dataset]") {
  LabeledDataset ds = testsupport::make_pattern_dataset(100, 4, 4, 4, 6);
  auto [train, val] = make_reduced_split(ds, 40, 20, 3, /*stratified=*/true);
  REQUIRE(train.size() == 40);
  REQUIRE(val.size() == 20);
  std::vector<int> train_counts(4, 0), val_counts(4, 0);
  for (int l : train.labels) train_counts[l]++;
  for (int l : val.labels) val_counts[l]++;
  for (int c = 0; c < 4; ++c) {
    CHECK(train_counts[c] == 10);
    CHECK(val_counts[c] == 5);
  }
}
