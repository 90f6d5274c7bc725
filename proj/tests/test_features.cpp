#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbir/errors.hpp"
#include "cbir/features.hpp"
#include "cbir/random.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace cbir;
using namespace cbir::features;
using imagecore::GrayImage;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double pop_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

GrayImage rotate_ccw(const GrayImage& img) {
  const std::size_t s = img.width();
  GrayImage out(s, s);
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < s; ++c) out(s - 1 - c, r) = img(r, c);
  }
  return out;
}

}  // namespace

TEST_CASE("bin count and angles") {
  CHECK(radon_bin_count(256) == 363);
  CHECK(radon_bin_count(64) == 91);
  CHECK(radon_bin_count(1) == 2);
  CHECK(radon_angle(0, 4) == 0.0);
  CHECK(radon_angle(2, 4) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("Radon transform of a zero image is zero") {
  const auto s = radon_transform(GrayImage(16, 16), 4);
  CHECK(s.num_projections() == 4);
  CHECK(s.num_bins() == 23);
  for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("Radon transform conserves mass") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    const std::size_t side = 1 + rng.below(40);
    const auto img = oracle::random_image(side, side, rng, 0.3);
    const double total = img.sum();
    for (std::size_t n : {1, 3, 16}) {
      const auto s = radon_transform(img, n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto p = s.projection(k);
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        REQUIRE(std::abs(sum - total) <= 1e-12 * std::max(1.0, total));
      }
    }
  }
}

TEST_CASE("Radon theta 0 places column sums in the central bins") {
  Rng rng(2);
  const auto img = oracle::random_image(4, 4, rng);
  const auto s = radon_transform(img, 1);
  REQUIRE(s.num_bins() == 6);
  const auto p = s.projection(0);
  CHECK(p[0] == 0.0);
  CHECK(p[5] == 0.0);
  for (std::size_t c = 0; c < 4; ++c) {
    double col = 0.0;
    for (std::size_t r = 0; r < 4; ++r) col += img(r, c);
    CHECK(p[c + 1] == doctest::Approx(col).epsilon(1e-15));
  }
  const auto ref = oracle::radon(img, 1);
  CHECK(std::equal(p.begin(), p.end(), ref[0].begin()));
}

TEST_CASE("Radon matches the per-pixel oracle exactly on small images") {
  Rng rng(23);
  for (std::size_t side = 1; side <= 8; ++side) {
    for (int t = 0; t < 5; ++t) {
      const auto img = oracle::random_image(side, side, rng, 0.2);
      for (std::size_t n : {1, 2, 5, 8, 16}) {
        const auto s = radon_transform(img, n);
        const auto ref = oracle::radon(img, n);
        for (std::size_t k = 0; k < n; ++k) {
          const auto p = s.projection(k);
          REQUIRE(std::equal(p.begin(), p.end(), ref[k].begin(), ref[k].end()));
        }
      }
    }
  }
}

TEST_CASE("Radon is covariant under 90 degree rotation") {
  Rng rng(41);
  for (std::size_t side : {3, 6, 9}) {
    const auto img = oracle::random_image(side, side, rng);
    const auto rot = rotate_ccw(img);
    const std::size_t n = 8;  // theta + 90 degrees is index k + 4
    const auto a = radon_transform(img, n);
    const auto b = radon_transform(rot, n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto orig = a.projection(k);
      const auto turned = b.projection((k + n / 2) % n);
      for (std::size_t i = 0; i < orig.size(); ++i) {
        const double expected = k + n / 2 < n ? orig[i] : orig[orig.size() - 1 - i];
        REQUIRE(std::abs(turned[i] - expected) < 1e-5);
      }
    }
  }
}

TEST_CASE("Radon rejects non-square input and zero angles") {
  CHECK_THROWS_AS(radon_transform(GrayImage(4, 3), 2), ParameterError);
  CHECK_THROWS_AS(radon_transform(GrayImage(4, 4), 0), ParameterError);
}

TEST_CASE("normalize_radon hand example") {
  Sinogram s(2, 2);
  s.projection(0)[0] = 2;
  s.projection(0)[1] = 4;
  s.projection(1)[0] = 1;
  s.projection(1)[1] = 3;
  const auto scaled = max_normalize(s);
  CHECK(scaled == std::vector<double>{0.5, 1.0, 1.0 / 3.0, 1.0});

  const std::vector<double> raw{0.5, 1.0, 1.0 / 3.0, 1.0};
  const double m = (0.5 + 1.0 + 1.0 / 3.0 + 1.0) / 4.0;
  double var = 0.0;
  for (double x : raw) var += (x - m) * (x - m) / 4.0;
  const auto fv = normalize_radon(s);
  CHECK(fv.kind == FeatureKind::radon);
  REQUIRE(fv.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(fv.values[i] == doctest::Approx((raw[i] - m) / std::sqrt(var)).epsilon(1e-12));
  CHECK(std::abs(mean_of(fv.values)) < 1e-12);
  CHECK(std::abs(pop_std(fv.values) - 1.0) < 1e-12);
}

TEST_CASE("normalize_radon edge cases") {
  CHECK_THROWS_AS(normalize_radon(Sinogram(3, 5)), DegenerateInputError);
  SUBCASE("zero projections stay zero") {
    Sinogram s(2, 3);
    s.projection(1)[1] = 5.0;
    CHECK(max_normalize(s) == std::vector<double>{0, 0, 0, 0, 1, 0});
    CHECK_NOTHROW(normalize_radon(s));
  }
  SUBCASE("random sinograms meet the contract") {
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
      Sinogram s(1 + rng.below(8), 2 + rng.below(30));
      for (std::size_t k = 0; k < s.num_projections(); ++k) {
        for (double& v : s.projection(k)) v = rng.uniform() * 100.0;
      }
      const auto scaled = max_normalize(s);
      for (std::size_t k = 0; k < s.num_projections(); ++k) {
        const auto b = scaled.begin() + static_cast<long>(k * s.num_bins());
        REQUIRE(*std::max_element(b, b + static_cast<long>(s.num_bins())) == 1.0);
      }
      const auto fv = normalize_radon(s);
      REQUIRE(std::abs(mean_of(fv.values)) < 1e-6);
      REQUIRE(std::abs(pop_std(fv.values) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("HOG shapes and degenerate input") {
  CHECK(hog_features(GrayImage(16, 16), {1, 9, 1e-6}).size() == 9);
  CHECK(hog_features(GrayImage(64, 64), {8, 9, 1e-6}).size() == 576);
  for (double v : hog_features(GrayImage(32, 32, 0.7), {4, 9, 1e-6}).values) CHECK(v == 0.0);
  CHECK_THROWS_AS(hog_features(GrayImage(7, 7), {4, 9, 1e-6}), ParameterError);
  CHECK_THROWS_AS(hog_features(GrayImage(3, 3), {4, 9, 1e-6}), ParameterError);
  CHECK_THROWS_AS(hog_features(GrayImage(8, 6), {2, 9, 1e-6}), ParameterError);
}

TEST_CASE("HOG vertical step edge votes into the 0 degree bin") {
  GrayImage img(16, 16);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 8; c < 16; ++c) img(r, c) = 1.0;
  }
  const HogConfig cfg{2, 9, 1e-6};
  const auto fv = hog_features(img, cfg);
  const auto ref = oracle::hog(img, 2, 9, 1e-6);
  REQUIRE(fv.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(fv.values[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  // every cell touching the edge has all its mass in bin 0
  for (std::size_t cell = 0; cell < 4; ++cell) {
    CHECK(fv.values[cell * 9] == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t b = 1; b < 9; ++b) CHECK(fv.values[cell * 9 + b] == 0.0);
  }
}

TEST_CASE("HOG matches the voting oracle on random images") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    const std::size_t grid = 1 + rng.below(4);
    const std::size_t side = grid * (2 + rng.below(6)) + rng.below(3);
    const std::size_t bins = 2 + rng.below(12);
    const auto img = oracle::random_image(side, side, rng);
    const auto fv = hog_features(img, {grid, bins, 1e-6});
    const auto ref = oracle::hog(img, grid, bins, 1e-6);
    REQUIRE(fv.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(std::abs(fv.values[i] - ref[i]) < 1e-12);
  }
}

TEST_CASE("HOG is invariant to a constant intensity shift") {
  Rng rng(12);
  GrayImage img(24, 24);
  // dyadic values keep the shifted differences exact
  for (double& p : img.pixels()) p = static_cast<double>(rng.below(64)) / 128.0;
  GrayImage shifted = img;
  for (double& p : shifted.pixels()) p += 0.25;
  CHECK(hog_features(img, {3, 9, 1e-6}).values == hog_features(shifted, {3, 9, 1e-6}).values);
}

TEST_CASE("extract dispatches and sizes") {
  Rng rng(4);
  const auto img = oracle::random_image(64, 64, rng);
  const auto raw = extract(img, RawConfig{1.0}, "x");
  CHECK(raw.kind == FeatureKind::raw);
  CHECK(raw.size() == 4096);
  CHECK(raw.source_id == "x");
  CHECK(extract(img, HogConfig{}, "y").size() == 576);
  CHECK(feature_length(RadonConfig{16}, 256) == 5808);
  CHECK(feature_length(HogConfig{}, 256) == 576);
  CHECK(feature_length(RawConfig{0.25}, 256) == 4096);
  CHECK(extract(img, RadonConfig{8}).size() == feature_length(RadonConfig{8}, 64));
  CHECK(to_string(FeatureKind::hog) == std::string("hog"));
  CHECK(feature_kind_from_string("radon") == FeatureKind::radon);
  CHECK_THROWS_AS(feature_kind_from_string("sift"), ParameterError);
}

TEST_CASE("radon extraction at 256 has 5808 values") {
  Rng rng(6);
  const auto fv = extract(oracle::random_image(256, 256, rng), RadonConfig{16});
  CHECK(fv.size() == 5808);
}

TEST_CASE("feature dump round-trip") {
  testing_support::TempDir dir;
  std::vector<FeatureVector> feats = {{{1.5, -2.0, 0.25}, FeatureKind::radon, "a"},
                                      {{}, FeatureKind::hog, ""},
                                      {{3.0}, FeatureKind::raw, "long-id-\xc3\xa9"}};
  write_feature_dump(feats, dir / "f.cbfd");
  const auto back = read_feature_dump(dir / "f.cbfd");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].values == feats[i].values);
    CHECK(back[i].kind == feats[i].kind);
    CHECK(back[i].source_id == feats[i].source_id);
  }
  testing_support::write_text(dir / "bad.cbfd", "not a feature dump at all");
  CHECK_THROWS_AS(read_feature_dump(dir / "bad.cbfd"), FormatError);
  std::filesystem::resize_file(dir / "f.cbfd", 40);
  CHECK_THROWS_AS(read_feature_dump(dir / "f.cbfd"), IoError);
}
