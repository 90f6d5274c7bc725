#include <doctest.h>

#include <cmath>
#include <string>

#include "cbir/errors.hpp"
#include "cbir/kdtree.hpp"
#include "cbir/random.hpp"
#include "support/oracles.hpp"

using namespace cbir;
using namespace cbir::retrieval;

namespace {

struct PointSet {
  std::vector<double> flat;
  std::vector<std::string> ids;
};

PointSet random_points(std::size_t n, std::size_t dim, Rng& rng, std::size_t levels = 0) {
  PointSet s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      // a few discrete levels force distance ties and coordinate ties
      s.flat.push_back(levels == 0 ? rng.normal() : static_cast<double>(rng.below(levels)));
    }
    s.ids.push_back("p" + std::to_string(i));
  }
  return s;
}

void check_against_scan(const KdTree& tree, const PointSet& s, std::size_t dim, Rng& rng, std::size_t levels,
                        std::size_t queries, std::size_t k) {
  for (std::size_t q = 0; q < queries; ++q) {
    std::vector<double> query(dim);
    for (double& v : query) v = levels == 0 ? rng.normal() : static_cast<double>(rng.below(levels));
    const auto got = tree.knn(query, k);
    const auto want = oracle::linear_knn(s.flat, s.ids, query, k);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].image_id == want[i].second);
      REQUIRE(got[i].distance == std::sqrt(want[i].first));
    }
  }
}

}  // namespace

TEST_CASE("squared_l2 accumulates in order") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 0, 7};
  CHECK(squared_l2(a, b) == 20.0);
}

TEST_CASE("tree basics") {
  const std::vector<double> pts{0, 0, 1, 1, 2, 2};
  KdTree t(2, pts, {"a", "b", "c"});
  CHECK(t.size() == 3);
  CHECK(t.dim() == 2);
  CHECK(t.depth() == 2);
  const auto all = t.knn(std::vector<double>{1, 1}, 10);
  REQUIRE(all.size() == 3);
  CHECK(all[0].image_id == "b");
  CHECK(all[0].distance == 0.0);
  // equal distances fall back to id order
  CHECK(all[1].image_id == "a");
  CHECK(all[2].image_id == "c");
  CHECK_THROWS_AS(t.knn(std::vector<double>{1}, 1), ValidationError);
  CHECK_THROWS_AS(t.knn(std::vector<double>{1, 1}, 0), ParameterError);
}

TEST_CASE("duplicates are all retrievable") {
  const std::vector<double> pts{5, 5, 5, 5, 1, 1};
  KdTree t(2, pts, {"x", "y", "z"});
  const auto r = t.knn(std::vector<double>{5, 5}, 2);
  CHECK(r[0].image_id == "x");
  CHECK(r[1].image_id == "y");
  CHECK(r[0].distance == 0.0);
  CHECK(r[1].distance == 0.0);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(KdTree(2, {1, 2, 3}, {"a", "b"}), ValidationError);
  CHECK_THROWS_AS(KdTree(0, {}, {}), ValidationError);
}

TEST_CASE("structure is deterministic") {
  Rng rng(3);
  const auto s = random_points(200, 3, rng, 4);
  KdTree a(3, s.flat, s.ids);
  KdTree b(3, s.flat, s.ids);
  const std::vector<double> q{1, 2, 1};
  const auto ra = a.knn(q, 30);
  const auto rb = b.knn(q, 30);
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].image_id == rb[i].image_id);
  CHECK(a.depth() <= 8);
}

TEST_CASE("nearest neighbour matches a linear scan") {
  Rng rng(16);
  const auto s = random_points(1000, 16, rng);
  KdTree t(16, s.flat, s.ids);
  check_against_scan(t, s, 16, rng, 0, 100, 1);
}

TEST_CASE("top-5 of a 50 item class matches brute force") {
  Rng rng(50);
  const auto s = random_points(50, 8, rng);
  KdTree t(8, s.flat, s.ids);
  check_against_scan(t, s, 8, rng, 0, 50, 5);
}

TEST_CASE("ties on a coarse grid keep the stated order") {
  Rng rng(7);
  for (std::size_t dim : {1, 2, 3}) {
    const auto s = random_points(300, dim, rng, 3);
    KdTree t(dim, s.flat, s.ids);
    for (std::size_t k : {1, 4, 17, 300, 400}) check_against_scan(t, s, dim, rng, 3, 20, k);
  }
}
