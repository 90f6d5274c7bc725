#include "cbir/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>

#include "cbir/errors.hpp"

namespace cbir::retrieval {

bool neighbor_less(double d2a, const std::string& ida, double d2b, const std::string& idb) {
  if (d2a != d2b) return d2a < d2b;
  return ida < idb;
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

KdTree::KdTree(std::size_t dim, std::vector<double> points, std::vector<std::string> ids)
    : dim_(dim), points_(std::move(points)), ids_(std::move(ids)) {
  if (dim_ == 0) throw ValidationError("k-d tree dimension must be positive");
  if (points_.size() != dim_ * ids_.size()) throw ValidationError("k-d tree point buffer does not match id count");
  std::vector<std::size_t> idx(ids_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  nodes_.reserve(ids_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

std::ptrdiff_t KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, std::size_t depth) {
  if (lo >= hi) return -1;
  const std::size_t axis = depth % dim_;
  const std::size_t mid = lo + (hi - lo - 1) / 2;
  auto first = idx.begin() + static_cast<std::ptrdiff_t>(lo);
  auto last = idx.begin() + static_cast<std::ptrdiff_t>(hi);
  std::nth_element(first, idx.begin() + static_cast<std::ptrdiff_t>(mid), last,
                   [&](std::size_t a, std::size_t b) {
                     const double va = points_[a * dim_ + axis];
                     const double vb = points_[b * dim_ + axis];
                     return va != vb ? va < vb : a < b;
                   });
  const auto node = static_cast<std::ptrdiff_t>(nodes_.size());
  nodes_.push_back({idx[mid], axis});
  const auto left = build(idx, lo, mid, depth + 1);
  const auto right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(node)].left = left;
  nodes_[static_cast<std::size_t>(node)].right = right;
  return node;
}

std::size_t KdTree::depth() const {
  std::function<std::size_t(std::ptrdiff_t)> rec = [&](std::ptrdiff_t n) -> std::size_t {
    if (n < 0) return 0;
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    return 1 + std::max(rec(node.left), rec(node.right));
  };
  return rec(root_);
}

std::vector<Neighbor> KdTree::knn(std::span<const double> query, std::size_t k) const {
  if (query.size() != dim_) {
    throw ValidationError("query has dimension " + std::to_string(query.size()) + ", index has " +
                          std::to_string(dim_));
  }
  if (k == 0) throw ParameterError("k must be at least 1");

  struct Entry {
    double d2;
    std::size_t point;
  };
  // Max-heap on (d2, id): top is the current worst candidate.
  auto worse = [this](const Entry& a, const Entry& b) { return neighbor_less(a.d2, ids_[a.point], b.d2, ids_[b.point]); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);

  std::function<void(std::ptrdiff_t)> visit = [&](std::ptrdiff_t n) {
    if (n < 0) return;
    const Node& node = nodes_[static_cast<std::size_t>(n)];
    const Entry e{squared_l2(query, point(node.point)), node.point};
    if (heap.size() < k) {
      heap.push(e);
    } else if (worse(e, heap.top())) {
      heap.pop();
      heap.push(e);
    }
    const double diff = query[node.axis] - points_[node.point * dim_ + node.axis];
    const std::ptrdiff_t near = diff < 0.0 ? node.left : node.right;
    const std::ptrdiff_t far = diff < 0.0 ? node.right : node.left;
    visit(near);
    // Equal-distance candidates on the far side may still win the id tie-break.
    if (heap.size() < k || diff * diff <= heap.top().d2) visit(far);
  };
  visit(root_);

  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = {ids_[heap.top().point], std::sqrt(heap.top().d2)};
    heap.pop();
  }
  return out;
}

}  // namespace cbir::retrieval
