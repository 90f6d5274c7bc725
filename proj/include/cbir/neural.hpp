#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cbir/random.hpp"

namespace cbir::nn {

// Rows are samples, columns are features.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { linear = 0, relu = 1, sigmoid = 2, tanh = 3, softmax = 4 };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::linear;

  std::size_t in() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

struct NeuralModel {
  std::vector<DenseLayer> layers;
  // Applied to hidden activations in train mode only.
  double dropout_rate = 0.0;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  // Throws ShapeError / ParameterError when layers do not chain, parameters
  // are non-finite, softmax is not last, or dropout is outside [0,1).
  void validate() const;
};

// Layer sizes dims[0] -> dims[1] -> ... with `hidden` on every layer but the
// last, which uses `output`. Glorot-uniform weights, zero biases.
NeuralModel make_model(const std::vector<std::size_t>& dims, Activation hidden, Activation output,
                       double dropout_rate, std::uint64_t seed);

// Redraws every weight uniformly in +-sqrt(6 / (fan_in + fan_out)); zeroes biases.
void initialize(NeuralModel& model, std::uint64_t seed);

enum class Mode { train, infer };

struct ForwardPass {
  Mode mode = Mode::infer;
  std::vector<Matrix> inputs;   // inputs[i]: what layer i consumed
  std::vector<Matrix> outputs;  // outputs[i]: activation of layer i, before dropout
  std::vector<Matrix> masks;    // masks[i]: scaled keep mask of hidden layer i (empty if none)

  const Matrix& result() const { return outputs.back(); }
};

// Train mode with dropout > 0 draws masks from rng (required then).
ForwardPass forward(const NeuralModel& model, const Matrix& batch, Mode mode, Rng* rng = nullptr);
// Train-mode pass replaying previously drawn masks.
ForwardPass forward_with_masks(const NeuralModel& model, const Matrix& batch, std::vector<Matrix> masks);
// Infer-mode output only.
Matrix predict(const NeuralModel& model, const Matrix& batch);

enum class LossKind { mse, cross_entropy };

// mse: mean over all entries. cross_entropy: batch mean of -log p(true class),
// p clamped below at 1e-12.
double loss(LossKind kind, const Matrix& predictions, const Matrix& targets);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Exact gradients of loss(kind, pass.result(), targets). Cross-entropy
// requires a softmax output layer and uses the fused (p - y) / batch delta.
Gradients backward(const NeuralModel& model, const ForwardPass& pass, const Matrix& targets, LossKind kind);

void apply_sgd(NeuralModel& model, const Gradients& grads, double learning_rate);

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  std::size_t folds = 10;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;  // monitored loss
};

struct TrainResult {
  NeuralModel model;  // best monitored-loss parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0: initial parameters kept
  bool stopped_early = false;
};

// Mini-batch SGD with per-epoch seeded shuffling. The monitored loss is the
// validation loss, or the infer-mode training loss when no validation set is
// given. Throws DivergenceError on a non-finite loss.
TrainResult train(NeuralModel model, const Matrix& inputs, const Matrix& targets, const TrainConfig& cfg,
                  LossKind kind);
TrainResult train(NeuralModel model, const Matrix& inputs, const Matrix& targets, const Matrix& val_inputs,
                  const Matrix& val_targets, const TrainConfig& cfg, LossKind kind);

enum class Metric { loss, accuracy };

// Fraction of rows whose argmax agrees with the target argmax.
double accuracy(const Matrix& predictions, const Matrix& targets);

// Seeded permutation cut into `folds` contiguous groups, the first n % folds
// of which hold one extra index.
std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, std::size_t folds, std::uint64_t seed);

struct FoldResult {
  double metric = 0.0;
  double val_loss = 0.0;
  std::size_t validation_size = 0;
  TrainResult training;
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_metric = 0.0;
  std::size_t best_fold = 0;
  Metric metric = Metric::loss;

  const NeuralModel& best_model() const { return folds.at(best_fold).training.model; }
};

// One model per fold, each starting from `model_template`'s parameters.
// Accuracy is maximised, loss minimised; the best fold's model is kept.
CvReport cross_validate(const NeuralModel& model_template, const Matrix& inputs, const Matrix& targets,
                        const TrainConfig& cfg, LossKind kind, Metric metric);

// Container: magic, version, layer count, dropout; per layer in/out dims,
// activation tag, row-major f32 weights, f32 biases (little-endian).
void save_model(const NeuralModel& model, const std::filesystem::path& path);
NeuralModel load_model(const std::filesystem::path& path);

}  // namespace cbir::nn
