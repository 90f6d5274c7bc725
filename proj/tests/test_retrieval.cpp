#include <doctest.h>

#include <cmath>
#include <string>

#include "cbir/errors.hpp"
#include "cbir/random.hpp"
#include "cbir/retrieval.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace cbir;
using namespace cbir::retrieval;

namespace {

std::vector<IndexItem> random_items(std::size_t n, std::size_t dim, std::size_t classes, Rng& rng) {
  std::vector<IndexItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    IndexItem it;
    for (std::size_t j = 0; j < dim; ++j) it.vector.push_back(rng.normal());
    it.class_id = static_cast<std::size_t>(rng.below(classes));
    it.image_id = "img" + std::to_string(i);
    items.push_back(std::move(it));
  }
  return items;
}

// Scores every stored item of the chosen classes and keeps k per class.
std::vector<Candidate> exhaustive(const std::vector<IndexItem>& items, const std::vector<double>& probs,
                                  const std::vector<double>& query, std::size_t k, std::size_t top) {
  std::vector<std::size_t> present;
  for (const auto& it : items) {
    if (std::find(present.begin(), present.end(), it.class_id) == present.end()) present.push_back(it.class_id);
  }
  std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
  });
  present.resize(std::min(top, present.size()));
  std::vector<Candidate> out;
  for (std::size_t cls : present) {
    std::vector<double> flat;
    std::vector<std::string> ids;
    for (const auto& it : items) {
      if (it.class_id != cls) continue;
      flat.insert(flat.end(), it.vector.begin(), it.vector.end());
      ids.push_back(it.image_id);
    }
    for (const auto& [d2, id] : oracle::linear_knn(flat, ids, query, k)) {
      const double d = std::sqrt(d2);
      out.push_back({id, cls, d, probs[cls], d / std::max(probs[cls], 1e-9)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.weighted_score, a.raw_distance, a.image_id) < std::tie(b.weighted_score, b.raw_distance, b.image_id);
  });
  return out;
}

std::vector<std::string> ids_of(const RetrievalResult& r) {
  std::vector<std::string> out;
  for (const auto& c : r.ranked) out.push_back(c.image_id);
  return out;
}

}  // namespace

TEST_CASE("index build") {
  std::vector<IndexItem> items = {{{0, 0}, 3, "a"}, {{1, 0}, 3, "b"}, {{0, 1}, 3, "c"}};
  const auto idx = ClassIndex::build(items);
  CHECK(idx.class_count() == 57);
  CHECK(idx.dim() == 2);
  CHECK(idx.size() == 3);
  CHECK(idx.classes() == std::vector<std::size_t>{3});
  CHECK(idx.tree(3).size() == 3);
  CHECK_FALSE(idx.has_class(0));
  CHECK_THROWS_AS(idx.tree(0), LookupError);
  CHECK_THROWS_AS(idx.knn(4, std::vector<double>{0, 0}, 1), LookupError);

  CHECK_THROWS_AS(ClassIndex::build({}), ValidationError);
  CHECK_THROWS_AS(ClassIndex::build({{{0, 0}, 1, "a"}, {{0}, 1, "b"}}), ValidationError);
  CHECK_THROWS_AS(ClassIndex::build({{{0, 0}, 57, "a"}}), ValidationError);
}

TEST_CASE("knn within a class") {
  std::vector<IndexItem> items = {{{0, 0}, 1, "a"}, {{3, 4}, 1, "b"}, {{0, 0}, 1, "dup"}, {{9, 9}, 2, "z"}};
  const auto idx = ClassIndex::build(items, 3);
  const auto r = idx.knn(1, std::vector<double>{3, 4}, 10);
  REQUIRE(r.size() == 3);
  CHECK(r[0].image_id == "b");
  CHECK(r[0].distance == 0.0);
  CHECK(r[1].distance == 5.0);
  CHECK(r[1].image_id == "a");
  CHECK(r[2].image_id == "dup");
}

TEST_CASE("index round-trip keeps vectors exactly") {
  Rng rng(4);
  const auto items = random_items(120, 7, 5, rng);
  const auto idx = ClassIndex::build(items, 5);
  testing_support::TempDir dir;
  idx.save(dir / "i.cbidx");
  const auto back = ClassIndex::load(dir / "i.cbidx");
  CHECK(back.dim() == 7);
  CHECK(back.class_count() == 5);
  CHECK(back.classes() == idx.classes());
  for (const auto& it : items) {
    const auto nb = back.knn(it.class_id, it.vector, 1);
    CHECK(nb[0].image_id == it.image_id);
    CHECK(nb[0].distance == 0.0);
  }
  testing_support::write_text(dir / "bad.cbidx", "CBIRIDX\0garbage");
  CHECK_THROWS_AS(ClassIndex::load(dir / "bad.cbidx"), std::exception);
  testing_support::write_text(dir / "bad2.cbidx", "NOTANIDX");
  CHECK_THROWS_AS(ClassIndex::load(dir / "bad2.cbidx"), FormatError);
}

TEST_CASE("retrieve: one-hot probability and an exact match") {
  Rng rng(5);
  auto items = random_items(200, 6, 57, rng);
  const auto idx = ClassIndex::build(items);
  const auto& target = items[17];
  std::vector<double> probs(57, 0.0);
  probs[target.class_id] = 1.0;
  const auto r = retrieve(idx, probs, target.vector, {5, 5});
  CHECK(r.best().image_id == target.image_id);
  CHECK(r.best().weighted_score == 0.0);
  CHECK(r.best().class_probability == 1.0);
}

TEST_CASE("retrieve: equal distances go to the more probable class") {
  std::vector<IndexItem> items = {{{1, 0}, 0, "left"}, {{-1, 0}, 1, "right"}};
  const auto idx = ClassIndex::build(items, 2);
  const auto r = retrieve(idx, std::vector<double>{0.4, 0.6}, std::vector<double>{0, 0}, {5, 5});
  REQUIRE(r.ranked.size() == 2);
  CHECK(r.ranked[0].image_id == "right");
  CHECK(r.ranked[0].weighted_score == doctest::Approx(1.0 / 0.6));
  CHECK(r.ranked[1].weighted_score == doctest::Approx(1.0 / 0.4));
}

TEST_CASE("retrieve: weighting flips the raw ranking") {
  // Class 2 holds the raw nearest neighbour but is unlikely; the true class 0
  // neighbour is second by raw distance and wins after weighting.
  std::vector<IndexItem> items = {{{1.0, 0}, 2, "decoy"},  {{1.2, 0}, 0, "truth"}, {{5, 5}, 0, "far0"},
                                  {{3, -3}, 1, "c1"},      {{-4, 1}, 3, "c3"},     {{0, 6}, 4, "c4"}};
  const auto idx = ClassIndex::build(items, 5);
  const std::vector<double> probs{0.6, 0.1, 0.15, 0.1, 0.05};
  const std::vector<double> q{0, 0};
  const auto r = retrieve(idx, probs, q, {5, 5});
  CHECK(idx.knn(2, q, 1)[0].distance < idx.knn(0, q, 1)[0].distance);
  CHECK(r.best().image_id == "truth");
  const auto want = exhaustive(items, probs, q, 5, 5);
  REQUIRE(r.ranked.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(r.ranked[i].image_id == want[i].image_id);
    CHECK(r.ranked[i].weighted_score == want[i].weighted_score);
  }
}

TEST_CASE("retrieve agrees with exhaustive scoring on random data") {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const std::size_t classes = 2 + rng.below(10);
    const auto items = random_items(50 + rng.below(200), 4, classes, rng);
    const auto idx = ClassIndex::build(items, classes);
    std::vector<double> probs(classes);
    for (double& p : probs) p = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    std::vector<double> q(4);
    for (double& v : q) v = rng.normal();
    const std::size_t k = 1 + rng.below(6);
    const std::size_t top = 1 + rng.below(6);
    const auto r = retrieve(idx, probs, q, {k, top});
    const auto want = exhaustive(items, probs, q, k, top);
    REQUIRE(r.ranked.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      REQUIRE(r.ranked[i].image_id == want[i].image_id);
      REQUIRE(r.ranked[i].class_id == want[i].class_id);
    }
  }
}

TEST_CASE("retrieve properties") {
  Rng rng(7);
  const auto items = random_items(400, 8, 57, rng);
  const auto idx = ClassIndex::build(items);
  std::vector<double> q(8);
  for (double& v : q) v = rng.normal();

  SUBCASE("uniform probabilities over all classes give the global nearest") {
    const std::vector<double> uniform(57, 1.0 / 57.0);
    const auto r = retrieve(idx, uniform, q, {5, 57});
    std::vector<double> flat;
    std::vector<std::string> ids;
    for (const auto& it : items) {
      flat.insert(flat.end(), it.vector.begin(), it.vector.end());
      ids.push_back(it.image_id);
    }
    const auto global = oracle::linear_knn(flat, ids, q, 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.ranked[i].image_id == global[i].second);
  }
  SUBCASE("scaling all probabilities keeps the order") {
    std::vector<double> probs(57);
    for (double& p : probs) p = rng.uniform();
    const auto base = ids_of(retrieve(idx, probs, q, {5, 5}));
    for (double c : {0.25, 2.0, 3.0, 1024.0}) {
      auto scaled = probs;
      for (double& p : scaled) p *= c;
      CHECK(ids_of(retrieve(idx, scaled, q, {5, 5})) == base);
    }
  }
  SUBCASE("identical inputs, identical rankings") {
    std::vector<double> probs(57, 0.0);
    probs[3] = 0.5;
    probs[9] = 0.5;
    const auto a = retrieve(idx, probs, q, {3, 5});
    const auto b = retrieve(idx, probs, q, {3, 5});
    CHECK(ids_of(a) == ids_of(b));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(retrieve(idx, std::vector<double>(56, 0.1), q, {}), ValidationError);
    std::vector<double> bad(57, 0.1);
    bad[2] = -0.1;
    CHECK_THROWS_AS(retrieve(idx, bad, q, {}), ValidationError);
    CHECK_THROWS_AS(retrieve(idx, std::vector<double>(57, 0.1), std::vector<double>(7), {}), ValidationError);
    CHECK_THROWS_AS(retrieve(idx, std::vector<double>(57, 0.1), q, {0, 5}), ParameterError);
  }
}

TEST_CASE("retrieve on an empty index") {
  ClassIndex empty;
  CHECK_THROWS_AS(retrieve(empty, std::vector<double>{}, std::vector<double>{}, {}), EmptyResultError);
}
