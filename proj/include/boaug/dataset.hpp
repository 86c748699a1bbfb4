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
#ifndef BOAUG_DATASET_HPP_
#define BOAUG_DATASET_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "boaug/errors.hpp"
#include "boaug/image.hpp"
#include "boaug/png_io.hpp"
#include "boaug/rng.hpp"

namespace boaug::data {

struct LabeledDataset {
  std::vector<img::Image> images;
  std::vector<int> labels;
  int class_count = 0;

  size_t size() const { return images.size(); }
};

namespace detail {
inline constexpr size_t kCifarRecordBytes = 3073;  // 1 label + 3 * 1024 samples
inline constexpr int kCifarSide = 32;
inline constexpr int kCifarClasses = 10;
}  // namespace detail

/// Load a CIFAR-10 style binary file: records of one label byte followed by
/// 3072 sample bytes in channel-planar order (1024 R, 1024 G, 1024 B),
/// row-major 32x32.
inline LabeledDataset load_cifar10_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset file: " + path);
  in.seekg(0, std::ios::end);
  auto file_size = static_cast<size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (file_size == 0 || file_size % detail::kCifarRecordBytes != 0) {
    size_t offset = file_size - file_size % detail::kCifarRecordBytes;
    throw FormatError(path + ": size " + std::to_string(file_size) +
                      " is not a positive multiple of 3073 (partial record at byte offset " +
                      std::to_string(offset) + ")");
  }

  LabeledDataset ds;
  ds.class_count = detail::kCifarClasses;
  size_t records = file_size / detail::kCifarRecordBytes;
  ds.images.reserve(records);
  ds.labels.reserve(records);
  std::vector<unsigned char> record(detail::kCifarRecordBytes);
  for (size_t r = 0; r < records; ++r) {
    in.read(reinterpret_cast<char*>(record.data()), detail::kCifarRecordBytes);
    if (!in) throw FormatError(path + ": short read at record " + std::to_string(r));
    int label = record[0];
    if (label >= detail::kCifarClasses) {
      throw FormatError(path + ": record " + std::to_string(r) + " has label " +
                        std::to_string(label) + " >= 10");
    }
    img::Image image(detail::kCifarSide, detail::kCifarSide);
    constexpr int plane = detail::kCifarSide * detail::kCifarSide;
    for (int p = 0; p < plane; ++p) {
      image.data[static_cast<size_t>(p) * 3 + 0] = record[1 + p];
      image.data[static_cast<size_t>(p) * 3 + 1] = record[1 + plane + p];
      image.data[static_cast<size_t>(p) * 3 + 2] = record[1 + 2 * plane + p];
    }
    ds.images.push_back(std::move(image));
    ds.labels.push_back(label);
  }
  return ds;
}

/// Inverse of load_cifar10_binary. Requires 32x32 images and labels < 10.
inline void save_cifar10_binary(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  std::vector<unsigned char> record(detail::kCifarRecordBytes);
  for (size_t i = 0; i < ds.size(); ++i) {
    const img::Image& image = ds.images[i];
    if (image.width != detail::kCifarSide || image.height != detail::kCifarSide) {
      throw DomainError("CIFAR binary requires 32x32 images");
    }
    if (ds.labels[i] < 0 || ds.labels[i] >= detail::kCifarClasses) {
      throw DomainError("CIFAR binary requires labels in [0,10)");
    }
    record[0] = static_cast<unsigned char>(ds.labels[i]);
    constexpr int plane = detail::kCifarSide * detail::kCifarSide;
    for (int p = 0; p < plane; ++p) {
      record[1 + p] = image.data[static_cast<size_t>(p) * 3 + 0];
      record[1 + plane + p] = image.data[static_cast<size_t>(p) * 3 + 1];
      record[1 + 2 * plane + p] = image.data[static_cast<size_t>(p) * 3 + 2];
    }
    out.write(reinterpret_cast<const char*>(record.data()), detail::kCifarRecordBytes);
  }
  if (!out) throw FormatError("short write to " + path);
}

/// Load a directory-per-class tree of PNG files. Class subdirectories sorted
/// lexicographically define the label indices; files within a class are
/// visited in sorted order.
inline LabeledDataset load_image_dir(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw FormatError("not a directory: " + path);

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw FormatError("no class subdirectories in " + path);

  LabeledDataset ds;
  ds.class_count = static_cast<int>(class_dirs.size());
  for (size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      ds.images.push_back(img::read_png(file.string()));  // throws naming the file
      ds.labels.push_back(static_cast<int>(label));
    }
  }
  if (ds.images.empty()) throw FormatError("no PNG files under " + path);
  return ds;
}

namespace detail {

inline std::vector<size_t> shuffled_indices(size_t n, std::uint64_t seed) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  RngStream rng(seed);
  for (size_t i = n; i > 1; --i) {
    size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

inline LabeledDataset take(const LabeledDataset& ds, const std::vector<size_t>& idx,
                           size_t begin, size_t count) {
  LabeledDataset out;
  out.class_count = ds.class_count;
  out.images.reserve(count);
  out.labels.reserve(count);
  for (size_t i = begin; i < begin + count; ++i) {
    out.images.push_back(ds.images[idx[i]]);
    out.labels.push_back(ds.labels[idx[i]]);
  }
  return out;
}

}  // namespace detail

/// Seeded uniform split into disjoint (train, validation) subsets. With
/// `stratified`, per-class proportions are preserved (largest-remainder
/// apportionment, ties broken by class index).
inline std::pair<LabeledDataset, LabeledDataset> make_reduced_split(
    const LabeledDataset& ds, size_t train_n, size_t val_n, std::uint64_t seed,
    bool stratified = false) {
  if (train_n + val_n > ds.size()) {
    throw DomainError("split of " + std::to_string(train_n) + "+" + std::to_string(val_n) +
                      " exceeds dataset size " + std::to_string(ds.size()));
  }
  if (!stratified) {
    auto idx = detail::shuffled_indices(ds.size(), seed);
    return {detail::take(ds, idx, 0, train_n), detail::take(ds, idx, train_n, val_n)};
  }

  // Stratified: shuffle within each class, then apportion both subsets.
  std::vector<std::vector<size_t>> by_class(ds.class_count);
  for (size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  RngStream rng(seed);
  for (auto& group : by_class) {
    for (size_t i = group.size(); i > 1; --i) {
      std::swap(group[i - 1], group[rng.next_below(i)]);
    }
  }
  auto apportion = [&](size_t want, const std::vector<size_t>& available) {
    std::vector<size_t> counts(by_class.size(), 0);
    std::vector<std::pair<double, size_t>> fractions;
    size_t assigned = 0;
    size_t total = 0;
    for (auto a : available) total += a;
    for (size_t c = 0; c < by_class.size(); ++c) {
      double exact = total ? static_cast<double>(want) * available[c] / total : 0.0;
      counts[c] = std::min(available[c], static_cast<size_t>(exact));
      assigned += counts[c];
      fractions.push_back({exact - static_cast<double>(counts[c]), c});
    }
    std::stable_sort(fractions.begin(), fractions.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [frac, c] : fractions) {
      if (assigned >= want) break;
      if (counts[c] < available[c]) {
        counts[c]++;
        assigned++;
      }
    }
    return counts;
  };
  std::vector<size_t> avail(by_class.size());
  for (size_t c = 0; c < by_class.size(); ++c) avail[c] = by_class[c].size();
  auto train_counts = apportion(train_n, avail);
  for (size_t c = 0; c < by_class.size(); ++c) avail[c] -= train_counts[c];
  auto val_counts = apportion(val_n, avail);

  LabeledDataset train, val;
  train.class_count = val.class_count = ds.class_count;
  for (size_t c = 0; c < by_class.size(); ++c) {
    for (size_t i = 0; i < train_counts[c]; ++i) {
      train.images.push_back(ds.images[by_class[c][i]]);
      train.labels.push_back(ds.labels[by_class[c][i]]);
    }
    for (size_t i = 0; i < val_counts[c]; ++i) {
      val.images.push_back(ds.images[by_class[c][train_counts[c] + i]]);
      val.labels.push_back(ds.labels[by_class[c][train_counts[c] + i]]);
    }
  }
  return {std::move(train), std::move(val)};
}

}  // namespace boaug::data

#endif  // BOAUG_DATASET_HPP_
