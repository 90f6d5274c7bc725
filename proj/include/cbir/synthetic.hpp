#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbir/imagecore.hpp"
#include "cbir/random.hpp"

namespace cbir::synthetic {

// Five shape classes with distinct four-axis codes.
enum class Shape { horizontal_bar, vertical_bar, diagonal_bar, disc, cross };

inline constexpr std::size_t kShapeCount = 5;

const std::vector<std::string>& shape_codes();
std::string_view shape_name(Shape s);

// One jittered, noisy rendering of `shape` (intensities in [0,1]).
imagecore::GrayImage render_shape(Shape shape, std::size_t width, std::size_t height, Rng& rng);

struct DatasetOptions {
  std::size_t train_per_class = 40;
  std::size_t test_per_class = 10;
  std::size_t classes = kShapeCount;  // the first `classes` shapes
  std::size_t side = 64;
  std::uint64_t seed = 1;
  // When set, some images are rendered non-square to exercise padding.
  bool vary_aspect = true;
};

// Writes PNG images and manifest.csv under `dir`; returns the manifest path.
std::filesystem::path write_shapes_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

}  // namespace cbir::synthetic
