#include "cbir/retrieval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "cbir/errors.hpp"

namespace cbir::retrieval {

ClassIndex ClassIndex::build(const std::vector<IndexItem>& items, std::size_t class_count) {
  if (items.empty()) throw ValidationError("cannot build an index from no items");
  if (class_count == 0) throw ValidationError("class count must be positive");
  ClassIndex index;
  index.dim_ = items.front().vector.size();
  index.class_count_ = class_count;
  if (index.dim_ == 0) throw ValidationError("index vectors must be non-empty");

  std::map<std::size_t, std::pair<std::vector<double>, std::vector<std::string>>> grouped;
  for (const auto& item : items) {
    if (item.vector.size() != index.dim_) {
      throw ValidationError("item '" + item.image_id + "' has dimension " + std::to_string(item.vector.size()) +
                            ", expected " + std::to_string(index.dim_));
    }
    if (item.class_id >= class_count) {
      throw ValidationError("item '" + item.image_id + "' has class " + std::to_string(item.class_id) +
                            " outside [0, " + std::to_string(class_count) + ")");
    }
    auto& [pts, ids] = grouped[item.class_id];
    pts.insert(pts.end(), item.vector.begin(), item.vector.end());
    ids.push_back(item.image_id);
  }
  for (auto& [cls, group] : grouped) {
    index.trees_.emplace(cls, KdTree(index.dim_, std::move(group.first), std::move(group.second)));
  }
  return index;
}

std::vector<std::size_t> ClassIndex::classes() const {
  std::vector<std::size_t> out;
  for (const auto& [cls, tree] : trees_) out.push_back(cls);
  return out;
}

const KdTree& ClassIndex::tree(std::size_t class_id) const {
  auto it = trees_.find(class_id);
  if (it == trees_.end()) throw LookupError("class " + std::to_string(class_id) + " is not in the index");
  return it->second;
}

std::size_t ClassIndex::size() const {
  std::size_t n = 0;
  for (const auto& [cls, tree] : trees_) n += tree.size();
  return n;
}

std::vector<Neighbor> ClassIndex::knn(std::size_t class_id, std::span<const double> query, std::size_t k) const {
  return tree(class_id).knn(query, k);
}

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'B', 'I', 'R', 'I', 'D', 'X', '\0'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kMetricL2 = 0;

}  // namespace

void ClassIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write index " + path.string());
  out.write(kMagic.data(), kMagic.size());
  detail::put_le<std::uint8_t>(out, kVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  detail::put_le<std::uint8_t>(out, kMetricL2);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(class_count_));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(trees_.size()));
  for (const auto& [cls, tree] : trees_) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cls));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.size()));
    for (std::size_t i = 0; i < tree.size(); ++i) {
      detail::put_string(out, tree.id(i));
      for (double v : tree.point(i)) detail::put_f64(out, v);
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ClassIndex ClassIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index " + path.string());
  detail::Reader rd(in, "index " + path.string());
  std::array<char, 8> magic{};
  rd.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError(rd.what() + ": bad magic");
  if (const auto v = rd.le<std::uint8_t>(); v != kVersion) {
    throw FormatError(rd.what() + ": unsupported version " + std::to_string(v));
  }
  const auto dim = rd.le<std::uint32_t>();
  if (rd.le<std::uint8_t>() != kMetricL2) throw FormatError(rd.what() + ": unsupported metric");
  const auto class_count = rd.le<std::uint32_t>();
  const auto present = rd.le<std::uint32_t>();
  if (dim == 0 || present > class_count) throw FormatError(rd.what() + ": inconsistent header");
  std::vector<IndexItem> items;
  for (std::uint32_t c = 0; c < present; ++c) {
    const auto cls = rd.le<std::uint32_t>();
    const auto count = rd.le<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
      IndexItem item;
      item.class_id = cls;
      item.image_id = rd.string();
      item.vector.resize(dim);
      rd.f64s(item.vector);
      items.push_back(std::move(item));
    }
  }
  try {
    return build(items, class_count);
  } catch (const ValidationError& e) {
    throw FormatError(rd.what() + ": " + e.what());
  }
}

RetrievalResult retrieve(const ClassIndex& index, std::span<const double> probabilities,
                         std::span<const double> query, const RetrieveParams& params) {
  if (probabilities.size() != index.class_count()) {
    throw ValidationError("expected " + std::to_string(index.class_count()) + " class probabilities, got " +
                          std::to_string(probabilities.size()));
  }
  for (double p : probabilities) {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError("class probabilities must be finite and non-negative");
  }
  if (query.size() != index.dim()) {
    throw ValidationError("query has dimension " + std::to_string(query.size()) + ", index has " +
                          std::to_string(index.dim()));
  }
  if (params.top_classes == 0 || params.k_per_class == 0) {
    throw ParameterError("top_classes and k_per_class must be at least 1");
  }

  std::vector<std::size_t> order = index.classes();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] != probabilities[b] ? probabilities[a] > probabilities[b] : a < b;
  });
  if (order.size() > params.top_classes) order.resize(params.top_classes);
  if (order.empty()) throw EmptyResultError("none of the top predicted classes is present in the index");

  RetrievalResult result;
  for (std::size_t cls : order) {
    const double p = probabilities[cls];
    for (auto& nb : index.knn(cls, query, params.k_per_class)) {
      const double score = nb.distance / std::max(p, kProbabilityFloor);
      result.ranked.push_back({std::move(nb.image_id), cls, nb.distance, p, score});
    }
  }
  std::sort(result.ranked.begin(), result.ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.weighted_score != b.weighted_score) return a.weighted_score < b.weighted_score;
    if (a.raw_distance != b.raw_distance) return a.raw_distance < b.raw_distance;
    return a.image_id < b.image_id;
  });
  if (result.ranked.empty()) throw EmptyResultError("retrieval produced no candidates");
  return result;
}

}  // namespace cbir::retrieval
