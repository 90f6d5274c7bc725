#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cbir/feature_vector.hpp"
#include "cbir/neural.hpp"

namespace cbir::models {

using nn::Activation;
using nn::NeuralModel;

struct AutoencoderSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_layers = 2;  // 1 or 2
  Activation activation = Activation::relu;
  double dropout = 0.2;
  // linear for standardized features; sigmoid is an option for raw pixels.
  Activation output_activation = Activation::linear;
  std::uint64_t seed = 0;
};

// Every encoder layer removes a quarter of the input width.
inline constexpr double kReductionPerLayer = 0.25;

// round-half-up(input_dim * (1 - 0.25 k)) for k = 1..hidden_layers.
std::vector<std::size_t> encoder_sizes(const AutoencoderSpec& spec);

// Symmetric encoder/decoder: input -> encoder sizes -> mirrored -> input.
NeuralModel build_autoencoder(const AutoencoderSpec& spec);

// Number of encoder layers of a symmetric autoencoder.
std::size_t encoder_depth(const NeuralModel& autoencoder);

// Deepest encoder activations, infer mode.
std::vector<double> encode(const NeuralModel& autoencoder, std::span<const double> feature);
std::vector<double> encode(const NeuralModel& autoencoder, const FeatureVector& feature);
nn::Matrix encode_batch(const NeuralModel& autoencoder, const nn::Matrix& features);

struct TrainedModel {
  NeuralModel model;
  nn::CvReport report;
};

// Reconstruction training (targets = inputs, mse) under k-fold CV with early
// stopping; keeps the best fold's model.
TrainedModel train_autoencoder(const std::vector<FeatureVector>& features, const AutoencoderSpec& spec,
                               const nn::TrainConfig& cfg);

struct ClassifierSpec {
  std::size_t input_dim = 0;
  // nullopt: one hidden layer of max(64, round(input_dim / 2)).
  std::optional<std::vector<std::size_t>> hidden_dims;
  std::size_t num_classes = 57;
  Activation activation = Activation::relu;
  double dropout = 0.2;
  std::uint64_t seed = 0;

  std::vector<std::size_t> resolved_hidden() const;
};

NeuralModel build_classifier(const ClassifierSpec& spec);

// Cross-entropy training under k-fold CV (accuracy metric). Throws
// ValidationError on a label outside [0, num_classes).
TrainedModel train_classifier(const nn::Matrix& codes, const std::vector<std::size_t>& labels,
                              const ClassifierSpec& spec, const nn::TrainConfig& cfg);

nn::Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes);

// Softmax class probabilities.
std::vector<double> classify(const NeuralModel& mlp, std::span<const double> code);

// Optional joint pass: trains encoder + classifier as one network with
// cross-entropy and writes the updated weights back into both models.
void fine_tune(NeuralModel& autoencoder, NeuralModel& mlp, const nn::Matrix& features,
               const std::vector<std::size_t>& labels, const nn::TrainConfig& cfg);

}  // namespace cbir::models
