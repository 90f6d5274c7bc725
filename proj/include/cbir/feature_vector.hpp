#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cbir {

enum class FeatureKind : unsigned char { radon = 0, hog = 1, raw = 2 };

std::string_view to_string(FeatureKind kind);
// Throws ParameterError for unknown names.
FeatureKind feature_kind_from_string(std::string_view name);

// A 1-D descriptor fed to the autoencoder and used for local search.
struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::raw;
  std::string source_id;

  std::size_t size() const noexcept { return values.size(); }
};

}  // namespace cbir
