#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cbir::retrieval {

struct Neighbor {
  std::string image_id;
  double distance = 0.0;  // Euclidean
};

// Orders by squared distance, then image id.
bool neighbor_less(double d2a, const std::string& ida, double d2b, const std::string& idb);

// Exact L2 k-d tree. The split axis cycles with depth; each node holds the
// lower median of its subset along that axis (ties ordered by insertion
// index), so the structure depends only on the input order.
class KdTree {
 public:
  KdTree() = default;
  KdTree(std::size_t dim, std::vector<double> points, std::vector<std::string> ids);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t depth() const;

  std::span<const double> point(std::size_t i) const { return {points_.data() + i * dim_, dim_}; }
  const std::string& id(std::size_t i) const { return ids_[i]; }

  // k nearest, ascending by (distance, image id); fewer if size() < k.
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

 private:
  struct Node {
    std::size_t point;
    std::size_t axis;
    std::ptrdiff_t left = -1;
    std::ptrdiff_t right = -1;
  };

  std::ptrdiff_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, std::size_t depth);

  std::size_t dim_ = 0;
  std::vector<double> points_;
  std::vector<std::string> ids_;
  std::vector<Node> nodes_;
  std::ptrdiff_t root_ = -1;
};

// Squared Euclidean distance, accumulated in index order.
double squared_l2(std::span<const double> a, std::span<const double> b);

}  // namespace cbir::retrieval
