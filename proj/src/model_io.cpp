#include <array>
#include <fstream>

#include "binary_io.hpp"
#include "cbir/errors.hpp"
#include "cbir/neural.hpp"

namespace cbir::nn {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'B', 'I', 'R', 'N', 'N', 'M', '\0'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 24;

}  // namespace

void save_model(const NeuralModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model " + path.string());
  out.write(kMagic.data(), kMagic.size());
  detail::put_le<std::uint8_t>(out, kVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
  detail::put_f32(out, model.dropout_rate);
  for (const auto& l : model.layers) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out()));
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) detail::put_f32(out, l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) detail::put_f32(out, l.biases(r));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

NeuralModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  detail::Reader rd(in, "model " + path.string());
  std::array<char, 8> magic{};
  rd.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError(rd.what() + ": bad magic");
  if (const auto v = rd.le<std::uint8_t>(); v != kVersion) {
    throw FormatError(rd.what() + ": unsupported version " + std::to_string(v));
  }
  const auto count = rd.le<std::uint32_t>();
  if (count == 0 || count > 1024) throw FormatError(rd.what() + ": implausible layer count");
  NeuralModel model;
  model.dropout_rate = rd.f32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto in_dim = rd.le<std::uint32_t>();
    const auto out_dim = rd.le<std::uint32_t>();
    const auto tag = rd.le<std::uint8_t>();
    if (in_dim == 0 || out_dim == 0 || in_dim > kMaxDim || out_dim > kMaxDim) {
      throw FormatError(rd.what() + ": implausible layer dimensions");
    }
    if (tag > static_cast<std::uint8_t>(Activation::softmax)) {
      throw FormatError(rd.what() + ": unknown activation tag " + std::to_string(tag));
    }
    DenseLayer l;
    l.activation = static_cast<Activation>(tag);
    l.weights.resize(out_dim, in_dim);
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = rd.f32();
    }
    l.biases.resize(out_dim);
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) l.biases(r) = rd.f32();
    model.layers.push_back(std::move(l));
  }
  try {
    model.validate();
  } catch (const Error& e) {
    throw FormatError(rd.what() + ": " + e.what());
  }
  return model;
}

}  // namespace cbir::nn
