#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cbir/feature_vector.hpp"
#include "cbir/irma.hpp"

namespace cbir::imagecore {

// Row-major grayscale image with intensities in [0,1].
class GrayImage {
 public:
  GrayImage() = default;
  // Throws ParameterError if either side is zero.
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool square() const noexcept { return width_ == height_; }

  double operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  const std::vector<double>& pixels() const noexcept { return pixels_; }
  std::vector<double>& pixels() noexcept { return pixels_; }

  double sum() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

// Decodes PNG (1-16 bit gray, optional alpha dropped) or binary PGM (P5),
// mapping the source bit depth linearly onto [0,1].
GrayImage load_gray(const std::filesystem::path& path);

// 8- or 16-bit binary PGM / gray PNG writers, used for fixtures and the
// synthetic dataset tool.
void save_pgm(const GrayImage& img, const std::filesystem::path& path, int bit_depth = 8);
void save_png(const GrayImage& img, const std::filesystem::path& path, int bit_depth = 8);

// Symmetric zero padding to a square; the odd extra row/column goes to the
// bottom/right.
GrayImage pad_to_square(const GrayImage& img);

// Bilinear resampling with pixel-center alignment and clamped borders.
GrayImage resize_bilinear(const GrayImage& img, std::size_t new_width, std::size_t new_height);

// pad_to_square followed by a bilinear resize to target_side x target_side.
GrayImage preprocess(const GrayImage& img, std::size_t target_side);

// Bilinear resize of a square image to (factor * side)^2, vectorized
// row-major. factor must be one of 0.25, 0.5, 1.0.
FeatureVector downsample_raw(const GrayImage& img, double factor);

enum class Split { train, test };

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path file_path;  // resolved against the manifest directory
  irma::IrmaCode irma_code;
  Split split = Split::train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> select(Split split) const;
  // nullptr when absent.
  const ManifestEntry* find(const std::string& image_id) const;
};

// CSV with header `image_id,file_path,irma_code,split`.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace cbir::imagecore
