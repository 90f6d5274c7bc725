#include <array>
#include <fstream>

#include "binary_io.hpp"
#include "cbir/errors.hpp"
#include "cbir/features.hpp"

namespace cbir::features {

namespace {

constexpr std::array<char, 16> kMagic = {'C', 'B', 'I', 'R', '-', 'F', 'E', 'A',
                                         'T', 'U', 'R', 'E', 'S', '\0', '\0', '\0'};
constexpr std::uint8_t kVersion = 1;

}  // namespace

void write_feature_dump(const std::vector<FeatureVector>& features, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature dump " + path.string());
  out.write(kMagic.data(), kMagic.size());
  detail::put_le<std::uint8_t>(out, kVersion);
  detail::put_le<std::uint64_t>(out, features.size());
  for (const auto& fv : features) {
    detail::put_string(out, fv.source_id);
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(fv.kind));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fv.values.size()));
    for (double v : fv.values) detail::put_f32(out, v);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<FeatureVector> read_feature_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature dump " + path.string());
  detail::Reader rd(in, "feature dump " + path.string());
  std::array<char, 16> magic{};
  rd.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError(rd.what() + ": bad magic");
  if (const auto v = rd.le<std::uint8_t>(); v != kVersion) {
    throw FormatError(rd.what() + ": unsupported version " + std::to_string(v));
  }
  const auto count = rd.le<std::uint64_t>();
  std::vector<FeatureVector> out;
  for (std::uint64_t r = 0; r < count; ++r) {
    FeatureVector fv;
    fv.source_id = rd.string();
    const auto kind = rd.le<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(FeatureKind::raw)) {
      throw FormatError(rd.what() + ": unknown feature kind tag " + std::to_string(kind));
    }
    fv.kind = static_cast<FeatureKind>(kind);
    fv.values.resize(rd.le<std::uint32_t>());
    rd.f32s(fv.values);
    out.push_back(std::move(fv));
  }
  return out;
}

}  // namespace cbir::features
