#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cbir/kdtree.hpp"

namespace cbir::retrieval {

struct IndexItem {
  std::vector<double> vector;
  std::size_t class_id = 0;
  std::string image_id;
};

// One k-d tree per class over the training feature vectors (L2 metric).
class ClassIndex {
 public:
  // Throws ValidationError on empty input, mixed dimensions, or class ids
  // outside [0, class_count).
  static ClassIndex build(const std::vector<IndexItem>& items, std::size_t class_count = 57);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t class_count() const noexcept { return class_count_; }
  bool has_class(std::size_t class_id) const { return trees_.contains(class_id); }
  std::vector<std::size_t> classes() const;
  // Throws LookupError for an absent class.
  const KdTree& tree(std::size_t class_id) const;
  std::size_t size() const;

  std::vector<Neighbor> knn(std::size_t class_id, std::span<const double> query, std::size_t k) const;

  // Header (magic, version, dim, metric tag, class count), then per present
  // class: id, item count, items as (id string, f64 vector). Trees are
  // rebuilt on load.
  void save(const std::filesystem::path& path) const;
  static ClassIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  std::size_t class_count_ = 0;
  std::map<std::size_t, KdTree> trees_;
};

struct Candidate {
  std::string image_id;
  std::size_t class_id = 0;
  double raw_distance = 0.0;
  double class_probability = 0.0;
  double weighted_score = 0.0;
};

struct RetrievalResult {
  // Ascending by weighted_score, then raw_distance, then image_id.
  std::vector<Candidate> ranked;

  const Candidate& best() const { return ranked.front(); }
};

struct RetrieveParams {
  std::size_t k_per_class = 5;
  std::size_t top_classes = 5;
};

inline constexpr double kProbabilityFloor = 1e-9;

// The top_classes most probable classes present in the index (ties to the
// lower id), k nearest per class, scored distance / max(p, 1e-9).
// Throws EmptyResultError when no selected class is present.
RetrievalResult retrieve(const ClassIndex& index, std::span<const double> probabilities,
                         std::span<const double> query, const RetrieveParams& params = {});

}  // namespace cbir::retrieval
