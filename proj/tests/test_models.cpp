#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cbir/errors.hpp"
#include "cbir/models.hpp"
#include "cbir/random.hpp"

using namespace cbir;
using namespace cbir::models;
using nn::Matrix;

namespace {

AutoencoderSpec ae_spec(std::size_t dim, std::size_t layers, double dropout = 0.2) {
  AutoencoderSpec s;
  s.input_dim = dim;
  s.hidden_layers = layers;
  s.dropout = dropout;
  s.seed = 3;
  return s;
}

std::vector<FeatureVector> random_features(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<FeatureVector> out(n);
  for (auto& f : out) {
    f.kind = FeatureKind::radon;
    for (std::size_t j = 0; j < dim; ++j) f.values.push_back(rng.normal());
  }
  return out;
}

Matrix to_matrix(const std::vector<FeatureVector>& f) {
  Matrix m(static_cast<Eigen::Index>(f.size()), static_cast<Eigen::Index>(f[0].size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[i].values[j];
  }
  return m;
}

// Two or more isotropic Gaussian blobs with centres `sep` apart on a circle.
void blobs(std::size_t classes, std::size_t per_class, std::size_t dim, double sep, Rng& rng, Matrix& x,
           std::vector<std::size_t>& labels) {
  x.resize(static_cast<Eigen::Index>(classes * per_class), static_cast<Eigen::Index>(dim));
  labels.clear();
  const double radius = sep / (2.0 * std::sin(std::numbers::pi / static_cast<double>(std::max<std::size_t>(classes, 2))));
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(row, j) = rng.normal();
      x(row, 0) += radius * std::cos(a);
      x(row, 1) += radius * std::sin(a);
      labels.push_back(c);
    }
  }
}

}  // namespace

TEST_CASE("encoder sizes") {
  CHECK(encoder_sizes(ae_spec(1024, 2)) == std::vector<std::size_t>{768, 512});
  CHECK(encoder_sizes(ae_spec(1024, 1)) == std::vector<std::size_t>{768});
  CHECK(encoder_sizes(ae_spec(100, 2)) == std::vector<std::size_t>{75, 50});
  // round half up: 4.5 -> 5, 7.5 -> 8
  CHECK(encoder_sizes(ae_spec(6, 1)) == std::vector<std::size_t>{5});
  CHECK(encoder_sizes(ae_spec(10, 2)) == std::vector<std::size_t>{8, 5});
  CHECK(encoder_sizes(ae_spec(5808, 2)) == std::vector<std::size_t>{4356, 2904});
  CHECK_THROWS_AS(encoder_sizes(ae_spec(3, 1)), ParameterError);
  CHECK_THROWS_AS(encoder_sizes(ae_spec(64, 3)), ParameterError);
}

TEST_CASE("autoencoder structure") {
  const auto m = build_autoencoder(ae_spec(1024, 2));
  REQUIRE(m.layers.size() == 4);
  const std::size_t dims[] = {1024, 768, 512, 768, 1024};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(m.layers[i].in() == dims[i]);
    CHECK(m.layers[i].out() == dims[i + 1]);
  }
  CHECK(m.layers[0].activation == nn::Activation::relu);
  CHECK(m.layers[3].activation == nn::Activation::linear);
  CHECK(m.dropout_rate == 0.2);
  CHECK(encoder_depth(m) == 2);

  const auto one = build_autoencoder(ae_spec(1024, 1));
  REQUIRE(one.layers.size() == 2);
  CHECK(one.layers[1].out() == 1024);
  CHECK(encoder_depth(one) == 1);
}

TEST_CASE("encode") {
  Rng rng(1);
  const auto feats = random_features(3, 64, rng);
  SUBCASE("zero weights give a zero code") {
    auto m = build_autoencoder(ae_spec(64, 2));
    for (auto& l : m.layers) l.weights.setZero();
    for (double v : encode(m, feats[0])) CHECK(v == 0.0);
  }
  SUBCASE("deterministic with the expected length") {
    for (std::size_t layers : {1, 2}) {
      const auto m = build_autoencoder(ae_spec(64, layers));
      const auto a = encode(m, feats[1]);
      CHECK(a == encode(m, feats[1]));
      CHECK(a.size() == (layers == 1 ? 48u : 32u));
    }
  }
  SUBCASE("batch agrees with single encodes") {
    const auto m = build_autoencoder(ae_spec(64, 2));
    const Matrix codes = encode_batch(m, to_matrix(feats));
    for (std::size_t i = 0; i < 3; ++i) {
      const auto single = encode(m, feats[i]);
      for (std::size_t j = 0; j < single.size(); ++j) CHECK(codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == doctest::Approx(single[j]).epsilon(1e-12));
    }
  }
  SUBCASE("length mismatch") {
    const auto m = build_autoencoder(ae_spec(64, 2));
    CHECK_THROWS_AS(encode(m, std::vector<double>(63)), ShapeError);
  }
}

TEST_CASE("autoencoder training") {
  Rng rng(2);
  nn::TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 4;
  cfg.folds = 4;
  SUBCASE("a constant dataset is reconstructed") {
    std::vector<FeatureVector> feats(16, FeatureVector{std::vector<double>(8, 0.75), FeatureKind::raw, ""});
    const auto r = train_autoencoder(feats, ae_spec(8, 2, 0.0), cfg);
    const Matrix x = to_matrix(feats);
    CHECK(nn::loss(nn::LossKind::mse, nn::predict(r.model, x), x) < 1e-4);
    CHECK(r.report.folds.size() == 4);
  }
  SUBCASE("fewer samples than folds") {
    CHECK_THROWS_AS(train_autoencoder(random_features(3, 8, rng), ae_spec(8, 1), cfg), ParameterError);
  }
  SUBCASE("mixed lengths") {
    auto feats = random_features(8, 8, rng);
    feats[5].values.pop_back();
    CHECK_THROWS_AS(train_autoencoder(feats, ae_spec(8, 1), cfg), ShapeError);
  }
}

TEST_CASE("memorization needs the true targets") {
  // Same network and budget: the true pairing is learned, while a pairing
  // re-drawn every epoch leaves only the mean to fit.
  Rng rng(5);
  const Matrix x = to_matrix(random_features(32, 64, rng));
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 8;
  cfg.min_delta = 0.0;
  const std::size_t epochs = 1500;
  const auto model = build_autoencoder(ae_spec(64, 2, 0.0));

  cfg.max_epochs = epochs;
  cfg.patience = epochs;
  const auto real = nn::train(model, x, x, cfg, nn::LossKind::mse);
  const double real_mse = nn::loss(nn::LossKind::mse, nn::predict(real.model, x), x);

  auto control = model;
  std::vector<Eigen::Index> perm(32);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  cfg.max_epochs = 1;
  double control_best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < epochs; ++e) {
    rng.shuffle(std::span<Eigen::Index>(perm));
    Matrix targets(32, 64);
    for (Eigen::Index i = 0; i < 32; ++i) targets.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    cfg.seed = e;
    control = nn::train(control, x, targets, cfg, nn::LossKind::mse).model;
    control_best = std::min(control_best, nn::loss(nn::LossKind::mse, nn::predict(control, x), targets));
  }
  MESSAGE("reconstruction mse " << real_mse << ", best shuffled-control mse " << control_best);
  CHECK(real_mse < 1e-2);
  CHECK(control_best > 1e-2);
}

TEST_CASE("classifier structure") {
  ClassifierSpec spec;
  spec.input_dim = 50;
  CHECK(spec.resolved_hidden() == std::vector<std::size_t>{64});
  spec.input_dim = 363;
  CHECK(spec.resolved_hidden() == std::vector<std::size_t>{182});
  spec.hidden_dims = std::vector<std::size_t>{};
  const auto flat = build_classifier(spec);
  REQUIRE(flat.layers.size() == 1);
  CHECK(flat.layers[0].out() == 57);
  CHECK(flat.layers[0].activation == nn::Activation::softmax);
}

TEST_CASE("one_hot and label validation") {
  const Matrix m = one_hot({0, 2}, 3);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 2) == 1.0);
  CHECK(m.sum() == 2.0);
  CHECK_THROWS_AS(one_hot({57}, 57), ValidationError);
  ClassifierSpec spec;
  spec.input_dim = 4;
  nn::TrainConfig cfg;
  cfg.folds = 2;
  CHECK_THROWS_AS(train_classifier(Matrix::Zero(4, 4), {0, 1, 57, 3}, spec, cfg), ValidationError);
}

TEST_CASE("classifier separates two blobs") {
  Rng rng(6);
  Matrix x;
  std::vector<std::size_t> labels;
  blobs(2, 100, 2, 8.0, rng, x, labels);
  ClassifierSpec spec;
  spec.input_dim = 2;
  spec.num_classes = 2;
  spec.seed = 4;
  nn::TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  const auto r = train_classifier(x, labels, spec, cfg);
  CHECK(r.report.folds.size() == 10);
  CHECK(r.report.mean_metric >= 0.99);
}

TEST_CASE("single-class data is predicted with confidence") {
  Rng rng(7);
  Matrix x(40, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  ClassifierSpec spec;
  spec.input_dim = 3;
  spec.num_classes = 4;
  nn::TrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 8;
  cfg.patience = 300;
  cfg.min_delta = 0.0;
  const auto r = train_classifier(x, std::vector<std::size_t>(40, 2), spec, cfg);
  for (Eigen::Index i = 0; i < 40; ++i) {
    std::vector<double> row(3);
    for (Eigen::Index j = 0; j < 3; ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    CHECK(classify(r.model, row)[2] >= 0.99);
  }
}

TEST_CASE("classify outputs") {
  Rng rng(8);
  ClassifierSpec spec;
  spec.input_dim = 12;
  spec.seed = 11;
  auto mlp = build_classifier(spec);
  SUBCASE("zero final layer is uniform") {
    auto flat = mlp;
    flat.layers.back().weights.setZero();
    for (double p : classify(flat, std::vector<double>(12, 0.3))) CHECK(p == doctest::Approx(1.0 / 57.0).epsilon(1e-12));
  }
  SUBCASE("distributions whose argmax follows the logits") {
    auto logits = mlp;
    logits.layers.back().activation = nn::Activation::linear;
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> code(12);
      for (double& c : code) c = rng.normal() * 3.0;
      const auto p = classify(mlp, code);
      double sum = 0.0;
      for (double v : p) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        sum += v;
      }
      REQUIRE(std::abs(sum - 1.0) < 1e-6);
      Matrix in(1, 12);
      for (Eigen::Index j = 0; j < 12; ++j) in(0, j) = code[static_cast<std::size_t>(j)];
      Eigen::Index la = 0;
      nn::predict(logits, in).row(0).maxCoeff(&la);
      REQUIRE(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == static_cast<std::size_t>(la));
    }
  }
  SUBCASE("shifting every logit leaves the output unchanged") {
    auto shifted = mlp;
    shifted.layers.back().biases.array() += 17.5;
    for (int t = 0; t < 50; ++t) {
      std::vector<double> code(12);
      for (double& c : code) c = rng.normal();
      const auto a = classify(mlp, code);
      const auto b = classify(shifted, code);
      for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - b[i]) < 1e-6);
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(classify(mlp, std::vector<double>(11)), ShapeError);
    auto plain = mlp;
    plain.layers.back().activation = nn::Activation::linear;
    CHECK_THROWS_AS(classify(plain, std::vector<double>(12)), ShapeError);
  }
}

TEST_CASE("fine_tune updates both networks in place") {
  Rng rng(9);
  Matrix x;
  std::vector<std::size_t> labels;
  blobs(3, 20, 8, 6.0, rng, x, labels);
  auto ae = build_autoencoder(ae_spec(8, 1, 0.0));
  ClassifierSpec spec;
  spec.input_dim = 6;
  spec.num_classes = 3;
  auto mlp = build_classifier(spec);
  const auto ae0 = ae;
  const auto mlp0 = mlp;
  nn::TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.learning_rate = 0.05;
  fine_tune(ae, mlp, x, labels, cfg);
  CHECK(ae.layers.size() == ae0.layers.size());
  CHECK(ae.layers[0].weights != ae0.layers[0].weights);
  CHECK(ae.layers[1].weights == ae0.layers[1].weights);  // decoder untouched
  CHECK(mlp.layers[0].weights != mlp0.layers[0].weights);
  CHECK(mlp.layers.back().out() == 3);
}
