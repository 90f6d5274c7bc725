#include "cbir/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cbir/errors.hpp"

namespace cbir::synthetic {

namespace fs = std::filesystem;

const std::vector<std::string>& shape_codes() {
  static const std::vector<std::string> codes = {
      "1121-110-411-700",  // horizontal bar
      "1121-120-411-700",  // vertical bar
      "1121-120-412-700",  // diagonal bar
      "1123-211-500-700",  // disc
      "1121-210-630-700",  // cross
  };
  return codes;
}

std::string_view shape_name(Shape s) {
  switch (s) {
    case Shape::horizontal_bar: return "hbar";
    case Shape::vertical_bar: return "vbar";
    case Shape::diagonal_bar: return "dbar";
    case Shape::disc: return "disc";
    case Shape::cross: return "cross";
  }
  return "shape";
}

namespace {

// Distance-based membership of point (x, y), in units of the short side.
bool inside_bar(double x, double y, double angle, double half_len, double half_width) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double along = x * c + y * s;
  const double across = -x * s + y * c;
  return std::abs(along) <= half_len && std::abs(across) <= half_width;
}

}  // namespace

imagecore::GrayImage render_shape(Shape shape, std::size_t width, std::size_t height, Rng& rng) {
  const double unit = static_cast<double>(std::min(width, height));
  const double cx = static_cast<double>(width) / 2.0 + rng.uniform(-0.08, 0.08) * unit;
  const double cy = static_cast<double>(height) / 2.0 + rng.uniform(-0.08, 0.08) * unit;
  const double tilt = rng.uniform(-8.0, 8.0) * std::numbers::pi / 180.0;
  const double half_len = rng.uniform(0.28, 0.38);
  const double half_width = rng.uniform(0.05, 0.08);
  const double radius = rng.uniform(0.2, 0.3);
  const double level = rng.uniform(0.6, 1.0);
  const double noise = 0.12;

  imagecore::GrayImage img(width, height);
  constexpr int kSuper = 2;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double x = (static_cast<double>(c) + (sx + 0.5) / kSuper - cx) / unit;
          const double y = (cy - static_cast<double>(r) - (sy + 0.5) / kSuper) / unit;
          bool in = false;
          switch (shape) {
            case Shape::horizontal_bar: in = inside_bar(x, y, tilt, half_len, half_width); break;
            case Shape::vertical_bar: in = inside_bar(x, y, std::numbers::pi / 2 + tilt, half_len, half_width); break;
            case Shape::diagonal_bar: in = inside_bar(x, y, std::numbers::pi / 4 + tilt, half_len, half_width); break;
            case Shape::disc: in = x * x + y * y <= radius * radius; break;
            case Shape::cross:
              in = inside_bar(x, y, tilt, half_len, half_width) ||
                   inside_bar(x, y, std::numbers::pi / 2 + tilt, half_len, half_width);
              break;
          }
          hits += in ? 1 : 0;
        }
      }
      const double v = level * hits / double(kSuper * kSuper) + noise * rng.uniform();
      img(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

fs::path write_shapes_dataset(const fs::path& dir, const DatasetOptions& options) {
  if (options.side < 8) throw ParameterError("synthetic images need a side of at least 8");
  if (options.classes < 1 || options.classes > kShapeCount) {
    throw ParameterError("synthetic class count must lie in [1, " + std::to_string(kShapeCount) + "]");
  }
  fs::create_directories(dir / "images");
  Rng rng(options.seed);
  imagecore::DatasetManifest manifest;
  const auto& codes = shape_codes();
  for (std::size_t cls = 0; cls < options.classes; ++cls) {
    const auto shape = static_cast<Shape>(cls);
    const std::size_t total = options.train_per_class + options.test_per_class;
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t w = options.side;
      std::size_t h = options.side;
      if (options.vary_aspect && i % 3 == 1) w = options.side + options.side / 4;
      if (options.vary_aspect && i % 3 == 2) h = options.side - options.side / 8;
      const auto img = render_shape(shape, w, h, rng);
      const bool is_train = i < options.train_per_class;
      const std::string id = std::string(shape_name(shape)) + "_" + (is_train ? "tr" : "te") + std::to_string(i);
      const fs::path file = dir / "images" / (id + ".png");
      imagecore::save_png(img, file);
      imagecore::ManifestEntry entry;
      entry.image_id = id;
      entry.file_path = fs::absolute(file);
      entry.irma_code = irma::parse_code(codes[cls]);
      entry.split = is_train ? imagecore::Split::train : imagecore::Split::test;
      manifest.entries.push_back(std::move(entry));
    }
  }
  const fs::path manifest_path = fs::absolute(dir / "manifest.csv");
  imagecore::save_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace cbir::synthetic
