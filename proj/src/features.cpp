#include "cbir/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cbir/errors.hpp"

namespace cbir {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::radon: return "radon";
    case FeatureKind::hog: return "hog";
    case FeatureKind::raw: return "raw";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(std::string_view name) {
  if (name == "radon") return FeatureKind::radon;
  if (name == "hog") return FeatureKind::hog;
  if (name == "raw") return FeatureKind::raw;
  throw ParameterError("unknown feature kind '" + std::string(name) + "'");
}

}  // namespace cbir

namespace cbir::features {

std::size_t radon_bin_count(std::size_t side) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(side) * std::numbers::sqrt2));
}

double radon_angle(std::size_t k, std::size_t n) {
  return static_cast<double>(k) * std::numbers::pi / static_cast<double>(n);
}

Sinogram::Sinogram(std::size_t num_projections, std::size_t num_bins)
    : projections_(num_projections), bins_(num_bins), values_(num_projections * num_bins, 0.0) {}

std::span<const double> Sinogram::projection(std::size_t k) const {
  return std::span<const double>(values_).subspan(k * bins_, bins_);
}

std::span<double> Sinogram::projection(std::size_t k) {
  return std::span<double>(values_).subspan(k * bins_, bins_);
}

Sinogram radon_transform(const GrayImage& img, std::size_t num_projections) {
  if (!img.square()) throw ParameterError("Radon transform requires a square image");
  if (num_projections == 0) throw ParameterError("at least one projection angle is required");
  const std::size_t side = img.width();
  const std::size_t bins = radon_bin_count(side);
  const double centre = (static_cast<double>(side) - 1.0) / 2.0;
  const double half = (static_cast<double>(bins) - 1.0) / 2.0;

  Sinogram sino(num_projections, bins);
  std::vector<double> xc(side);
  std::vector<double> ys(side);
  for (std::size_t k = 0; k < num_projections; ++k) {
    const double theta = radon_angle(k, num_projections);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t j = 0; j < side; ++j) xc[j] = (static_cast<double>(j) - centre) * c;
    for (std::size_t i = 0; i < side; ++i) ys[i] = (centre - static_cast<double>(i)) * s;

    auto proj = sino.projection(k);
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        const double v = img(i, j);
        if (v == 0.0) continue;
        const double u = (xc[j] + ys[i]) + half;
        const double lo = std::floor(u);
        const auto b = static_cast<std::size_t>(lo);
        const double upper = v * (u - lo);
        proj[b] += v - upper;
        proj[b + 1] += upper;
      }
    }
  }
  return sino;
}

std::vector<double> max_normalize(const Sinogram& sinogram) {
  if (sinogram.num_projections() == 0 || sinogram.num_bins() == 0) {
    throw DegenerateInputError("empty sinogram");
  }
  std::vector<double> out;
  out.reserve(sinogram.values().size());
  for (std::size_t k = 0; k < sinogram.num_projections(); ++k) {
    const auto proj = sinogram.projection(k);
    const double peak = *std::max_element(proj.begin(), proj.end());
    for (double v : proj) out.push_back(peak > 0.0 ? v / peak : 0.0);
  }
  return out;
}

std::vector<double> standardize(std::vector<double> values) {
  if (values.empty()) throw DegenerateInputError("cannot standardize an empty vector");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  const double sd = std::sqrt(var);
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw DegenerateInputError("feature vector has zero variance");
  }
  for (double& v : values) v = (v - mean) / sd;
  return values;
}

FeatureVector normalize_radon(const Sinogram& sinogram) {
  FeatureVector fv;
  fv.kind = FeatureKind::radon;
  fv.values = standardize(max_normalize(sinogram));
  return fv;
}

FeatureVector hog_features(const GrayImage& img, const HogConfig& cfg) {
  if (!img.square()) throw ParameterError("HOG requires a square image");
  if (cfg.num_histograms == 0 || cfg.orientation_bins == 0) {
    throw ParameterError("HOG needs at least one histogram and one orientation bin");
  }
  const std::size_t side = img.width();
  if (side < cfg.num_histograms) {
    throw ParameterError("image side " + std::to_string(side) + " is smaller than the histogram grid");
  }
  const std::size_t cell = side / cfg.num_histograms;
  if (cell < 2) throw ParameterError("HOG cell side must be at least 2 pixels");

  const std::size_t nbins = cfg.orientation_bins;
  const double bin_width = 180.0 / static_cast<double>(nbins);
  const std::size_t grid = cfg.num_histograms;
  std::vector<double> hist(grid * grid * nbins, 0.0);

  const std::size_t covered = grid * cell;
  for (std::size_t r = 0; r < covered; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = std::min(r + 1, side - 1);
    for (std::size_t c = 0; c < covered; ++c) {
      const std::size_t left = c == 0 ? 0 : c - 1;
      const std::size_t right = std::min(c + 1, side - 1);
      const double gx = img(r, right) - img(r, left);
      const double gy = img(up, c) - img(down, c);  // y axis points up
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (deg < 0.0) deg += 180.0;
      if (deg >= 180.0) deg -= 180.0;
      // Bin b is centred on b * bin_width; votes wrap around 180 degrees.
      const double pos = deg / bin_width;
      const double lo = std::floor(pos);
      const double frac = pos - lo;
      const std::size_t b0 = static_cast<std::size_t>(lo) % nbins;
      const std::size_t b1 = (b0 + 1) % nbins;
      double* h = hist.data() + ((r / cell) * grid + (c / cell)) * nbins;
      h[b0] += mag * (1.0 - frac);
      h[b1] += mag * frac;
    }
  }

  const double eps2 = cfg.epsilon * cfg.epsilon;
  for (std::size_t cellid = 0; cellid < grid * grid; ++cellid) {
    double* h = hist.data() + cellid * nbins;
    double norm2 = 0.0;
    for (std::size_t b = 0; b < nbins; ++b) norm2 += h[b] * h[b];
    if (norm2 == 0.0) continue;
    const double scale = 1.0 / std::sqrt(norm2 + eps2);
    for (std::size_t b = 0; b < nbins; ++b) h[b] *= scale;
  }

  FeatureVector fv;
  fv.kind = FeatureKind::hog;
  fv.values = std::move(hist);
  return fv;
}

FeatureKind kind_of(const FeatureConfig& config) {
  return std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, RadonConfig>) return FeatureKind::radon;
        else if constexpr (std::is_same_v<T, HogConfig>) return FeatureKind::hog;
        else return FeatureKind::raw;
      },
      config);
}

std::size_t feature_length(const FeatureConfig& config, std::size_t side) {
  return std::visit(
      [side](const auto& c) -> std::size_t {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, RadonConfig>) {
          return c.num_projections * radon_bin_count(side);
        } else if constexpr (std::is_same_v<T, HogConfig>) {
          return c.num_histograms * c.num_histograms * c.orientation_bins;
        } else {
          const double s = c.factor * static_cast<double>(side);
          if (s != std::floor(s) || s < 1.0) {
            throw ParameterError("raw factor does not give an integer side for side " +
                                 std::to_string(side));
          }
          const auto n = static_cast<std::size_t>(s);
          return n * n;
        }
      },
      config);
}

FeatureVector extract(const GrayImage& img, const FeatureConfig& config, std::string source_id) {
  FeatureVector fv = std::visit(
      [&img](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, RadonConfig>) {
          return normalize_radon(radon_transform(img, c.num_projections));
        } else if constexpr (std::is_same_v<T, HogConfig>) {
          return hog_features(img, c);
        } else {
          return imagecore::downsample_raw(img, c.factor);
        }
      },
      config);
  fv.source_id = std::move(source_id);
  return fv;
}

}  // namespace cbir::features
