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

#include <cmath>
#include <numeric>

#include "boaug/image_ops.hpp"
#include "boaug/png_io.hpp"
#include "boaug/rng.hpp"
#include "support/temp_dir.hpp"

using namespace boaug;
using namespace boaug::img;
using policy::OperationKind;

namespace {

Image random_image(int w, int h, RngStream& rng) {
  Image out(w, h);
  for (auto& s : out.data) s = static_cast<std::uint8_t>(rng.next_below(256));
  return out;
}

bool images_equal(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height && a.data == b.data;
}

}  // namespace

TEST_CASE("invert is an involution and maps 10 to 245", "[image]") {
  Image constant(8, 6, 10);
  Image inv = invert(constant);
  for (auto s : inv.data) CHECK(s == 245);

  RngStream rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Image im = random_image(16, 16, rng);
    CHECK(images_equal(invert(invert(im)), im));
  }
}

TEST_CASE("posterize equals the bit-mask oracle on all sample values", "[image]") {
  for (int bits = 0; bits <= 8; ++bits) {
    Image im(16, 16);
    for (size_t i = 0; i < im.data.size(); ++i) {
      im.data[i] = static_cast<std::uint8_t>(i % 256);
    }
    Image out = posterize(im, bits);
    for (size_t i = 0; i < im.data.size(); ++i) {
      // Independent oracle: rebuild the value from its top `bits` bits.
      int expected = 0;
      for (int b = 0; b < bits; ++b) {
        expected |= im.data[i] & (1 << (7 - b));
      }
      REQUIRE(static_cast<int>(out.data[i]) == expected);
    }
  }
  // Worked value: keeping the top 4 bits of 95 (0b01011111) gives 80.
  Image one(1, 1);
  one.data = {95, 95, 95};
  CHECK(posterize(one, 4).data[0] == 80);
}

TEST_CASE("solarize threshold semantics", "[image]") {
  RngStream rng(2);
  Image im = random_image(12, 12, rng);
  CHECK(images_equal(solarize(im, 256.0), im));  // nothing exceeds 256
  Image all = solarize(im, -1.0);                // everything exceeds -1
  CHECK(images_equal(all, invert(im)));
  Image half = solarize(im, 127.0);
  for (size_t i = 0; i < im.data.size(); ++i) {
    CHECK(half.data[i] == (im.data[i] > 127 ? 255 - im.data[i] : im.data[i]));
  }
}

TEST_CASE("zero-magnitude geometric transforms are the identity", "[image]") {
  RngStream rng(3);
  Image im = random_image(20, 14, rng);
  CHECK(images_equal(shear_x(im, 0.0), im));
  CHECK(images_equal(shear_y(im, 0.0), im));
  CHECK(images_equal(translate_x(im, 0.0), im));
  CHECK(images_equal(translate_y(im, 0.0), im));
  CHECK(images_equal(rotate(im, 0.0), im));
}

TEST_CASE("integer translate moves pixels and fills with mid-gray", "[image]") {
  Image im(4, 1);
  for (int x = 0; x < 4; ++x) {
    for (int c = 0; c < 3; ++c) im.at(x, 0, c) = static_cast<std::uint8_t>(10 * (x + 1));
  }
  // Positive magnitude samples input at x+2: content shifts left.
  Image out = translate_x(im, 2.0);
  CHECK(out.at(0, 0, 0) == 30);
  CHECK(out.at(1, 0, 0) == 40);
  CHECK(out.at(2, 0, 0) == 128);
  CHECK(out.at(3, 0, 0) == 128);
}

TEST_CASE("rotate 90 degrees permutes pixels without interpolation loss", "[image]") {
  RngStream rng(4);
  Image im = random_image(9, 9, rng);
  Image out = rotate(rotate(rotate(rotate(im, 90.0), 90.0), 90.0), 90.0);
  CHECK(images_equal(out, im));
}

TEST_CASE("blend operations reproduce the input at factor 1", "[image]") {
  RngStream rng(5);
  Image im = random_image(16, 16, rng);
  CHECK(images_equal(contrast(im, 1.0), im));
  CHECK(images_equal(color(im, 1.0), im));
  CHECK(images_equal(brightness(im, 1.0), im));
  CHECK(images_equal(sharpness(im, 1.0), im));
}

TEST_CASE("blend operations at factor 0 give their degenerate image", "[image]") {
  RngStream rng(6);
  Image im = random_image(8, 8, rng);
  Image black = brightness(im, 0.0);
  for (auto s : black.data) CHECK(s == 0);

  Image gray = color(im, 0.0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      CHECK(gray.at(x, y, 0) == gray.at(x, y, 1));
      CHECK(gray.at(x, y, 1) == gray.at(x, y, 2));
    }
  }

  Image flat = contrast(im, 0.0);
  for (size_t i = 1; i < flat.data.size(); ++i) CHECK(flat.data[i] == flat.data[0]);
}

TEST_CASE("autocontrast stretches and is identity on full-span channels", "[image]") {
  Image im(4, 1);
  // Red channel spans [50,150]; green and blue already span [0,255].
  for (int x = 0; x < 4; ++x) {
    im.at(x, 0, 0) = static_cast<std::uint8_t>(50 + x * 33);
    im.at(x, 0, 1) = static_cast<std::uint8_t>(x * 85);
    im.at(x, 0, 2) = static_cast<std::uint8_t>(255 - x * 85);
  }
  im.at(3, 0, 0) = 150;
  Image out = auto_contrast(im);
  CHECK(out.at(0, 0, 0) == 0);
  CHECK(out.at(3, 0, 0) == 255);
  for (int x = 0; x < 4; ++x) {
    CHECK(out.at(x, 0, 1) == im.at(x, 0, 1));
    CHECK(out.at(x, 0, 2) == im.at(x, 0, 2));
  }

  RngStream rng(7);
  Image full = random_image(16, 16, rng);
  for (int c = 0; c < 3; ++c) {
    full.data[c] = 0;
    full.data[3 + c] = 255;
  }
  CHECK(images_equal(auto_contrast(full), full));
}

TEST_CASE("equalize flattens a skewed histogram", "[image]") {
  Image constant(8, 8, 200);
  CHECK(images_equal(equalize(constant), constant));  // single bin: identity

  RngStream rng(8);
  Image im(32, 32);
  for (auto& s : im.data) s = static_cast<std::uint8_t>(64 + rng.next_below(32));
  Image out = equalize(im);
  int lo = 255, hi = 0;
  for (size_t i = 0; i < out.data.size(); i += 3) {
    lo = std::min<int>(lo, out.data[i]);
    hi = std::max<int>(hi, out.data[i]);
  }
  CHECK(hi - lo > 200);  // narrow band spread over most of the range
}

TEST_CASE("every transform preserves image validity", "[image]") {
  auto table = policy::MagnitudeTable::stock();
  RngStream rng(9);
  for (int i = 0; i < policy::kOperationCount; ++i) {
    auto op = static_cast<OperationKind>(i);
    for (int trial = 0; trial < 10; ++trial) {
      Image im = random_image(18, 12, rng);
      std::optional<double> mag;
      if (!policy::is_magnitude_free(op)) {
        mag = policy::denormalize_magnitude(op, rng.next_double() * 9.0, table);
      }
      Image out = apply_operation(im, op, mag);
      REQUIRE(out.width == im.width);
      REQUIRE(out.height == im.height);
      REQUIRE(out.data.size() == im.data.size());
    }
  }
}

TEST_CASE("apply_operation rejects magnitude arity mismatch", "[image]") {
  Image im(4, 4, 100);
  CHECK_THROWS_AS(apply_operation(im, OperationKind::kInvert, 1.0), DomainError);
  CHECK_THROWS_AS(apply_operation(im, OperationKind::kRotate, std::nullopt), DomainError);
}

TEST_CASE("apply_sub_policy draw discipline", "[image]") {
  RngStream rng(10);
  Image im = random_image(10, 10, rng);

  policy::DecodedSubPolicy never{OperationKind::kInvert, 0.0, std::nullopt,
                                 OperationKind::kInvert, 0.0, std::nullopt};
  RngStream a(42), b(42);
  Image out = apply_sub_policy(im, never, a);
  CHECK(images_equal(out, im));
  // Exactly two draws consumed even though nothing fired.
  b.next_double();
  b.next_double();
  CHECK(a.next_double() == b.next_double());

  policy::DecodedSubPolicy always{OperationKind::kInvert, 1.0, std::nullopt,
                                  OperationKind::kInvert, 1.0, std::nullopt};
  RngStream c(43);
  CHECK(images_equal(apply_sub_policy(im, always, c), im));  // invert twice

  // Seeded replay is byte-identical.
  policy::DecodedSubPolicy coin{OperationKind::kRotate, 0.5, 7.5,
                                OperationKind::kSolarize, 0.5, 100.0};
  RngStream r1(77), r2(77);
  CHECK(images_equal(apply_sub_policy(im, coin, r1), apply_sub_policy(im, coin, r2)));
}

TEST_CASE("augment_batch selection is uniform and order-preserving", "[image]") {
  // 24 sub-policies, nothing ever applied, tiny images: only the draw
  // pattern matters.
  std::vector<policy::DecodedSubPolicy> pool(
      24, policy::DecodedSubPolicy{OperationKind::kInvert, 0.0, std::nullopt,
                                   OperationKind::kInvert, 0.0, std::nullopt});
  std::vector<Image> batch(10000, Image(2, 2, 7));
  RngStream rng(123);
  auto out = augment_batch(batch, pool, rng);
  REQUIRE(out.size() == batch.size());

  // Count the selections the way the implementation derives them.
  std::vector<int> counts(24, 0);
  for (size_t i = 0; i < batch.size(); ++i) {
    RngStream sub = rng.substream(i);
    counts[sub.next_below(24)]++;
  }
  for (int c : counts) {
    CHECK(c >= 250);
    CHECK(c <= 600);
  }
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 10000);

  CHECK_THROWS_AS(augment_batch(batch, {}, rng), DomainError);

  // Pool of one no-op sub-policy returns the batch unchanged.
  std::vector<policy::DecodedSubPolicy> single(pool.begin(), pool.begin() + 1);
  auto unchanged = augment_batch(batch, single, rng);
  for (size_t i = 0; i < batch.size(); ++i) REQUIRE(images_equal(unchanged[i], batch[i]));
}

TEST_CASE("augment_batch is deterministic and splittable by image index", "[image]") {
  std::vector<policy::DecodedSubPolicy> pool{
      {OperationKind::kRotate, 0.8, 12.0, OperationKind::kBrightness, 0.7, 1.4},
      {OperationKind::kShearX, 0.6, 0.2, OperationKind::kInvert, 0.3, std::nullopt}};
  RngStream img_rng(20);
  std::vector<Image> batch;
  for (int i = 0; i < 16; ++i) batch.push_back(random_image(12, 12, img_rng));

  RngStream r1(555), r2(555);
  auto full = augment_batch(batch, pool, r1);
  auto again = augment_batch(batch, pool, r2);
  for (size_t i = 0; i < batch.size(); ++i) REQUIRE(images_equal(full[i], again[i]));

  // Split the batch in two; per-image substreams make the halves agree with
  // the full batch, which is what allows worker-level splitting.
  RngStream r3(555);
  std::vector<Image> first(batch.begin(), batch.begin() + 8);
  auto head = augment_batch(first, pool, r3);
  for (size_t i = 0; i < head.size(); ++i) REQUIRE(images_equal(head[i], full[i]));
}

TEST_CASE("baseline preprocess identity configuration", "[image]") {
  RngStream img_rng(30);
  Image im = random_image(16, 16, img_rng);
  PreprocessConfig cfg;
  cfg.pad = 0;
  cfg.crop = 0;
  cfg.horizontal_flip_prob = 0.0;
  cfg.cutout_size = std::nullopt;
  cfg.standardize = false;
  RngStream rng(1);
  CHECK(images_equal(baseline_preprocess(im, cfg, rng), im));
}

TEST_CASE("cutout zeroes a full square away from borders", "[image]") {
  Image im(32, 32, 255);
  PreprocessConfig cfg;
  cfg.pad = 0;
  cfg.crop = 0;
  cfg.horizontal_flip_prob = 0.0;
  cfg.cutout_size = 16;
  cfg.standardize = false;
  // Scan seeds for a draw whose square is fully interior, then count.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream probe(seed);
    probe.next_below(1);
    probe.next_below(1);
    probe.next_double();
    int cx = static_cast<int>(probe.next_below(32));
    int cy = static_cast<int>(probe.next_below(32));
    if (cx - 8 < 0 || cx + 8 > 32 || cy - 8 < 0 || cy + 8 > 32) continue;
    RngStream rng(seed);
    Image out = baseline_preprocess(im, cfg, rng);
    size_t zeros_per_channel = 0;
    for (size_t i = 0; i < out.data.size(); i += 3) {
      if (out.data[i] == 0) zeros_per_channel++;
    }
    CHECK(zeros_per_channel == 256);
    return;
  }
  FAIL("no interior cutout draw found in 200 seeds");
}

TEST_CASE("pad and crop produce the configured size with zero borders", "[image]") {
  Image im(8, 8, 200);
  PreprocessConfig cfg;
  cfg.pad = 4;
  cfg.crop = 8;
  cfg.horizontal_flip_prob = 1.0;  // always flip; content is constant
  cfg.cutout_size = std::nullopt;
  cfg.standardize = false;
  RngStream rng(9);
  Image out = baseline_preprocess(im, cfg, rng);
  CHECK(out.width == 8);
  CHECK(out.height == 8);
  for (auto s : out.data) CHECK((s == 0 || s == 200));

  PreprocessConfig bad = cfg;
  bad.crop = 20;  // exceeds padded size 16
  RngStream rng2(9);
  CHECK_THROWS_AS(baseline_preprocess(im, bad, rng2), DomainError);
}

TEST_CASE("standardization yields zero mean and unit deviation", "[image]") {
  RngStream rng(40);
  Image im = random_image(24, 24, rng);
  RealImage out = standardize(im);
  double mean = 0.0;
  for (float v : out.data) mean += v;
  mean /= static_cast<double>(out.data.size());
  double var = 0.0;
  for (float v : out.data) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / static_cast<double>(out.data.size()));
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(sd - 1.0) < 1e-6);

  Image flat(8, 8, 77);
  RealImage zeros = standardize(flat);
  for (float v : zeros.data) CHECK(v == 0.0f);
}

TEST_CASE("png round trip is pixel exact", "[image]") {
  testsupport::TempDir tmp("png");
  RngStream rng(50);
  Image im = random_image(21, 13, rng);
  write_png(tmp.file("a.png"), im);
  Image back = read_png(tmp.file("a.png"));
  CHECK(images_equal(back, im));

  testsupport::write_text(tmp.file("bad.png"), "not a png at all");
  CHECK_THROWS_AS(read_png(tmp.file("bad.png")), FormatError);
}
