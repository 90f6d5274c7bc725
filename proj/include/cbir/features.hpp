#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "cbir/feature_vector.hpp"
#include "cbir/imagecore.hpp"

namespace cbir::features {

using imagecore::GrayImage;

// The image side comes from preprocessing (PipelineConfig::target_side).
struct RadonConfig {
  std::size_t num_projections = 16;
};

struct HogConfig {
  std::size_t num_histograms = 8;
  std::size_t orientation_bins = 9;
  double epsilon = 1e-6;
};

struct RawConfig {
  double factor = 1.0;
};

// Detector bins per projection for a side x side image: ceil(side * sqrt 2).
std::size_t radon_bin_count(std::size_t side);

// Projection angle k of n, in radians: k * pi / n.
double radon_angle(std::size_t k, std::size_t n);

// N projections of num_bins bins each, stored row-major by angle.
class Sinogram {
 public:
  Sinogram(std::size_t num_projections, std::size_t num_bins);

  std::size_t num_projections() const noexcept { return projections_; }
  std::size_t num_bins() const noexcept { return bins_; }
  std::span<const double> projection(std::size_t k) const;
  std::span<double> projection(std::size_t k);
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t projections_;
  std::size_t bins_;
  std::vector<double> values_;
};

// Parallel-beam Radon transform of a square image. Pixel centres are rotated
// about the image centre (x to the right, y up); the rotated coordinate
// t = x cos(theta) + y sin(theta) is binned on unit-spaced detector bins
// centred on 0, with each pixel's value split linearly between the two
// nearest bins. theta = 0 sums along columns; angles run counterclockwise
// over half a turn.
Sinogram radon_transform(const GrayImage& img, std::size_t num_projections);

// Concatenation of every projection divided by its own maximum (all-zero
// projections stay zero). Exposed separately from standardization for tests.
std::vector<double> max_normalize(const Sinogram& sinogram);

// Shift/scale to mean 0 and population standard deviation 1. Throws
// DegenerateInputError on a constant vector.
std::vector<double> standardize(std::vector<double> values);

// max_normalize followed by standardize.
FeatureVector normalize_radon(const Sinogram& sinogram);

// Per-cell orientation histograms over a num_histograms^2 grid, L2
// normalised per cell and concatenated row-major.
FeatureVector hog_features(const GrayImage& img, const HogConfig& cfg);

using FeatureConfig = std::variant<RadonConfig, HogConfig, RawConfig>;

FeatureKind kind_of(const FeatureConfig& config);

// Output length for a square image of the given side.
std::size_t feature_length(const FeatureConfig& config, std::size_t side);

// Dispatch on the config alternative; the image must already be
// preprocessed (square).
FeatureVector extract(const GrayImage& img, const FeatureConfig& config, std::string source_id = {});

// Binary dump: 16-byte magic, version byte, u64 record count, then per
// record u32 id length, id bytes, u8 kind, u32 length, little-endian f32s.
void write_feature_dump(const std::vector<FeatureVector>& features, const std::filesystem::path& path);
std::vector<FeatureVector> read_feature_dump(const std::filesystem::path& path);

}  // namespace cbir::features
