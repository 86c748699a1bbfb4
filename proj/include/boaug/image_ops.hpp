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
#ifndef BOAUG_IMAGE_OPS_HPP_
#define BOAUG_IMAGE_OPS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "boaug/errors.hpp"
#include "boaug/image.hpp"
#include "boaug/policy.hpp"
#include "boaug/rng.hpp"

namespace boaug::img {

namespace detail {

inline constexpr std::uint8_t kFillGray = 128;

inline std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, std::round(v))));
}

/// Bilinear tap at (sx, sy); out-of-bounds neighbors read as mid-gray.
inline double sample_bilinear(const Image& in, double sx, double sy, int c) {
  double fx0 = std::floor(sx);
  double fy0 = std::floor(sy);
  int x0 = static_cast<int>(fx0);
  int y0 = static_cast<int>(fy0);
  double ax = sx - fx0;
  double ay = sy - fy0;
  auto tap = [&](int x, int y) -> double {
    if (x < 0 || x >= in.width || y < 0 || y >= in.height) return kFillGray;
    return in.at(x, y, c);
  };
  double top = (1.0 - ax) * tap(x0, y0) + ax * tap(x0 + 1, y0);
  double bot = (1.0 - ax) * tap(x0, y0 + 1) + ax * tap(x0 + 1, y0 + 1);
  return (1.0 - ay) * top + ay * bot;
}

/// Inverse-mapped affine warp: output (x,y) samples input at
/// (a*x + b*y + c0, d*x + e*y + f0).
inline Image affine_warp(const Image& in, double a, double b, double c0, double d,
                         double e, double f0) {
  Image out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double sx = a * x + b * y + c0;
      double sy = d * x + e * y + f0;
      for (int c = 0; c < kChannels; ++c) {
        out.at(x, y, c) = clamp_byte(sample_bilinear(in, sx, sy, c));
      }
    }
  }
  return out;
}

/// Integer luminance per the ITU-R 601-2 weights used by common RGB->L
/// conversions: (299 R + 587 G + 114 B) / 1000, truncated.
inline int luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (299 * r + 587 * g + 114 * b) / 1000;
}

/// out = degenerate + factor * (original - degenerate), per sample.
/// factor 0 gives the degenerate image, 1 the original; factors above 1
/// extrapolate.
template <typename DegenerateFn>
Image blend_with(const Image& in, double factor, DegenerateFn&& degenerate) {
  Image out(in.width, in.height);
  for (size_t i = 0; i < in.data.size(); ++i) {
    double d = degenerate(i);
    out.data[i] = clamp_byte(d + factor * (in.data[i] - d));
  }
  return out;
}

inline Image blur3x3(const Image& in) {
  // 3x3 smoothing kernel, center 5, others 1, normalized by 13; border
  // coordinates clamp.
  Image out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int sx = std::clamp(x + dx, 0, in.width - 1);
            int sy = std::clamp(y + dy, 0, in.height - 1);
            double w = (dx == 0 && dy == 0) ? 5.0 : 1.0;
            acc += w * in.at(sx, sy, c);
          }
        }
        out.at(x, y, c) = clamp_byte(acc / 13.0);
      }
    }
  }
  return out;
}

}  // namespace detail

inline Image shear_x(const Image& in, double rate) {
  return detail::affine_warp(in, 1.0, rate, 0.0, 0.0, 1.0, 0.0);
}

inline Image shear_y(const Image& in, double rate) {
  return detail::affine_warp(in, 1.0, 0.0, 0.0, rate, 1.0, 0.0);
}

inline Image translate_x(const Image& in, double pixels) {
  return detail::affine_warp(in, 1.0, 0.0, pixels, 0.0, 1.0, 0.0);
}

inline Image translate_y(const Image& in, double pixels) {
  return detail::affine_warp(in, 1.0, 0.0, 0.0, 0.0, 1.0, pixels);
}

/// Counter-clockwise rotation about the image center.
inline Image rotate(const Image& in, double degrees) {
  double rad = degrees * M_PI / 180.0;
  double cs = std::cos(rad), sn = std::sin(rad);
  double cx = (in.width - 1) / 2.0, cy = (in.height - 1) / 2.0;
  // Inverse map: rotate output coordinates by -degrees about the center.
  return detail::affine_warp(in, cs, sn, cx - cs * cx - sn * cy, -sn, cs,
                             cy + sn * cx - cs * cy);
}

/// Invert every sample strictly above the threshold.
inline Image solarize(const Image& in, double threshold) {
  Image out(in.width, in.height);
  for (size_t i = 0; i < in.data.size(); ++i) {
    std::uint8_t s = in.data[i];
    out.data[i] = (s > threshold) ? static_cast<std::uint8_t>(255 - s) : s;
  }
  return out;
}

/// Keep the top `bits` bits of every sample.
inline Image posterize(const Image& in, int bits) {
  if (bits < 0 || bits > 8) throw DomainError("posterize bits out of [0,8]");
  std::uint8_t mask =
      bits >= 8 ? 0xFF : static_cast<std::uint8_t>(0xFF << (8 - bits));
  Image out(in.width, in.height);
  for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] & mask;
  return out;
}

inline Image contrast(const Image& in, double factor) {
  // Degenerate image: constant at the rounded mean gray level.
  long long total = 0;
  size_t pixels = static_cast<size_t>(in.width) * in.height;
  for (size_t p = 0; p < pixels; ++p) {
    total += detail::luminance(in.data[p * 3], in.data[p * 3 + 1], in.data[p * 3 + 2]);
  }
  double mean = pixels ? std::floor(static_cast<double>(total) / pixels + 0.5) : 0.0;
  return detail::blend_with(in, factor, [mean](size_t) { return mean; });
}

inline Image color(const Image& in, double factor) {
  // Degenerate image: per-pixel luminance replicated across channels.
  std::vector<double> gray(static_cast<size_t>(in.width) * in.height);
  for (size_t p = 0; p < gray.size(); ++p) {
    gray[p] = detail::luminance(in.data[p * 3], in.data[p * 3 + 1], in.data[p * 3 + 2]);
  }
  return detail::blend_with(in, factor, [&gray](size_t i) { return gray[i / 3]; });
}

inline Image brightness(const Image& in, double factor) {
  return detail::blend_with(in, factor, [](size_t) { return 0.0; });
}

inline Image sharpness(const Image& in, double factor) {
  Image blurred = detail::blur3x3(in);
  return detail::blend_with(in, factor,
                            [&blurred](size_t i) { return double(blurred.data[i]); });
}

/// Stretch each channel's histogram to the full [0,255] range.
inline Image auto_contrast(const Image& in) {
  Image out(in.width, in.height);
  for (int c = 0; c < kChannels; ++c) {
    int lo = 255, hi = 0;
    for (size_t i = c; i < in.data.size(); i += kChannels) {
      lo = std::min<int>(lo, in.data[i]);
      hi = std::max<int>(hi, in.data[i]);
    }
    for (size_t i = c; i < in.data.size(); i += kChannels) {
      out.data[i] = (hi > lo) ? detail::clamp_byte((in.data[i] - lo) * 255.0 / (hi - lo))
                              : in.data[i];
    }
  }
  return out;
}

inline Image invert(const Image& in) {
  Image out(in.width, in.height);
  for (size_t i = 0; i < in.data.size(); ++i) {
    out.data[i] = static_cast<std::uint8_t>(255 - in.data[i]);
  }
  return out;
}

/// Per-channel histogram equalization (cumulative-count remap; channels with
/// fewer than two occupied bins pass through).
inline Image equalize(const Image& in) {
  Image out(in.width, in.height);
  for (int c = 0; c < kChannels; ++c) {
    std::array<long long, 256> histo{};
    for (size_t i = c; i < in.data.size(); i += kChannels) histo[in.data[i]]++;

    int last_nonzero = -1;
    int nonzero_bins = 0;
    long long total = 0;
    for (int v = 0; v < 256; ++v) {
      if (histo[v] > 0) {
        last_nonzero = v;
        nonzero_bins++;
        total += histo[v];
      }
    }
    long long step = nonzero_bins > 1 ? (total - histo[last_nonzero]) / 255 : 0;
    std::array<std::uint8_t, 256> lut{};
    if (step == 0) {
      for (int v = 0; v < 256; ++v) lut[v] = static_cast<std::uint8_t>(v);
    } else {
      long long n = step / 2;
      for (int v = 0; v < 256; ++v) {
        lut[v] = static_cast<std::uint8_t>(std::min<long long>(255, n / step));
        n += histo[v];
      }
    }
    for (size_t i = c; i < in.data.size(); i += kChannels) out.data[i] = lut[in.data[i]];
  }
  return out;
}

/// Apply one named transform with its actual-unit magnitude.
/// Ranged operations require a magnitude; magnitude-free ones reject it.
inline Image apply_operation(const Image& in, policy::OperationKind op,
                             std::optional<double> magnitude) {
  using policy::OperationKind;
  if (policy::is_magnitude_free(op) && magnitude.has_value()) {
    throw DomainError(std::string(policy::operation_name(op)) +
                      " takes no magnitude but one was given");
  }
  if (!policy::is_magnitude_free(op) && !magnitude.has_value()) {
    throw DomainError(std::string(policy::operation_name(op)) +
                      " requires a magnitude but none was given");
  }
  switch (op) {
    case OperationKind::kShearX: return shear_x(in, *magnitude);
    case OperationKind::kShearY: return shear_y(in, *magnitude);
    case OperationKind::kTranslateX: return translate_x(in, *magnitude);
    case OperationKind::kTranslateY: return translate_y(in, *magnitude);
    case OperationKind::kRotate: return rotate(in, *magnitude);
    case OperationKind::kSolarize: return solarize(in, *magnitude);
    case OperationKind::kPosterize:
      return posterize(in, static_cast<int>(std::lround(*magnitude)));
    case OperationKind::kContrast: return contrast(in, *magnitude);
    case OperationKind::kColor: return color(in, *magnitude);
    case OperationKind::kBrightness: return brightness(in, *magnitude);
    case OperationKind::kSharpness: return sharpness(in, *magnitude);
    case OperationKind::kAutoContrast: return auto_contrast(in);
    case OperationKind::kInvert: return invert(in);
    case OperationKind::kEqualize: return equalize(in);
  }
  throw DomainError("unknown operation");
}

/// Apply a sub-policy stochastically. Both uniforms are drawn up front, in
/// order, whether or not each operation fires, so seeded replays are stable.
inline Image apply_sub_policy(const Image& in, const policy::DecodedSubPolicy& sp,
                              RngStream& rng) {
  double u1 = rng.next_double();
  double u2 = rng.next_double();
  Image out = (u1 < sp.prob1) ? apply_operation(in, sp.op1, sp.mag1) : in;
  if (u2 < sp.prob2) out = apply_operation(out, sp.op2, sp.mag2);
  return out;
}

/// Augment a batch: each image draws one sub-policy uniformly from the pool.
///
/// Image i uses the substream derived from (rng seed, i) for both the pool
/// draw and the sub-policy application, so results are independent of any
/// worker-level splitting of the batch.
inline std::vector<Image> augment_batch(const std::vector<Image>& imgs,
                                        const std::vector<policy::DecodedSubPolicy>& pool,
                                        const RngStream& rng) {
  if (pool.empty()) throw DomainError("augment_batch: sub-policy pool is empty");
  std::vector<Image> out(imgs.size());
  for (size_t i = 0; i < imgs.size(); ++i) {
    RngStream sub = rng.substream(i);
    size_t idx = sub.next_below(pool.size());
    out[i] = apply_sub_policy(imgs[i], pool[idx], sub);
  }
  return out;
}

/// Spatial preprocessing configuration. `crop` of 0 means crop back to the
/// input size.
struct PreprocessConfig {
  int pad = 4;
  int crop = 0;
  double horizontal_flip_prob = 0.5;
  std::optional<int> cutout_size = 16;
  bool standardize = true;
};

/// Pad/crop/flip/cutout stage of the stock preprocessing, on 8-bit images.
/// Standardization is the separate real-valued stage below.
///
/// Draw order per image: crop x, crop y, flip u, then (when configured)
/// cutout center x, cutout center y. Draws happen for every configured stage
/// regardless of outcome.
inline Image baseline_preprocess(const Image& in, const PreprocessConfig& cfg,
                                 RngStream& rng) {
  if (cfg.pad < 0) throw DomainError("pad must be non-negative");
  int crop = cfg.crop > 0 ? cfg.crop : std::min(in.width, in.height);
  int padded_w = in.width + 2 * cfg.pad;
  int padded_h = in.height + 2 * cfg.pad;
  if (crop > padded_w || crop > padded_h) {
    throw DomainError("crop size exceeds padded image size");
  }
  if (cfg.cutout_size && (*cfg.cutout_size < 0 || *cfg.cutout_size > crop)) {
    throw DomainError("cutout size exceeds image size");
  }

  // Zero-pad, then crop at a uniform offset.
  int off_x = static_cast<int>(rng.next_below(padded_w - crop + 1));
  int off_y = static_cast<int>(rng.next_below(padded_h - crop + 1));
  Image out(crop, crop);
  for (int y = 0; y < crop; ++y) {
    for (int x = 0; x < crop; ++x) {
      int sx = x + off_x - cfg.pad;
      int sy = y + off_y - cfg.pad;
      bool inside = sx >= 0 && sx < in.width && sy >= 0 && sy < in.height;
      for (int c = 0; c < kChannels; ++c) {
        out.at(x, y, c) = inside ? in.at(sx, sy, c) : 0;
      }
    }
  }

  if (rng.next_double() < cfg.horizontal_flip_prob) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width / 2; ++x) {
        for (int c = 0; c < kChannels; ++c) {
          std::swap(out.at(x, y, c), out.at(out.width - 1 - x, y, c));
        }
      }
    }
  }

  if (cfg.cutout_size && *cfg.cutout_size > 0) {
    int cx = static_cast<int>(rng.next_below(out.width));
    int cy = static_cast<int>(rng.next_below(out.height));
    int half = *cfg.cutout_size / 2;
    int x0 = std::max(0, cx - half), x1 = std::min(out.width, cx - half + *cfg.cutout_size);
    int y0 = std::max(0, cy - half), y1 = std::min(out.height, cy - half + *cfg.cutout_size);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        for (int c = 0; c < kChannels; ++c) out.at(x, y, c) = 0;
      }
    }
  }

  return out;
}

/// Per-image standardization: zero mean, unit standard deviation over all
/// samples. The divisor is floored at 1/sqrt(N) so constant images map to
/// all-zero rasters instead of dividing by zero.
inline RealImage standardize(const Image& in) {
  RealImage out(in.width, in.height);
  size_t n = in.data.size();
  if (n == 0) return out;
  double mean = 0.0;
  for (auto s : in.data) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (auto s : in.data) var += (s - mean) * (s - mean);
  double stddev = std::sqrt(var / static_cast<double>(n));
  double adjusted = std::max(stddev, 1.0 / std::sqrt(static_cast<double>(n)));
  for (size_t i = 0; i < n; ++i) {
    out.data[i] = static_cast<float>((in.data[i] - mean) / adjusted);
  }
  return out;
}

}  // namespace boaug::img

#endif  // BOAUG_IMAGE_OPS_HPP_
