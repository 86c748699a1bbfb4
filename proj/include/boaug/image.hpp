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
#ifndef BOAUG_IMAGE_HPP_
#define BOAUG_IMAGE_HPP_

#include <cstdint>
#include <vector>

#include "boaug/errors.hpp"

namespace boaug::img {

inline constexpr int kChannels = 3;

/// Row-major, channel-interleaved 8-bit RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // size = width * height * 3

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<size_t>(w) * h * kChannels, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * kChannels + c];
  }
  size_t sample_count() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height;
  }
};

/// Real-valued raster produced by standardization.
struct RealImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  RealImage() = default;
  RealImage(int w, int h)
      : width(w), height(h), data(static_cast<size_t>(w) * h * kChannels, 0.0f) {}

  float& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * kChannels + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * kChannels + c];
  }
};

}  // namespace boaug::img

#endif  // BOAUG_IMAGE_HPP_
