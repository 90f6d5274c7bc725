#include "cbir/models.hpp"

#include <algorithm>

#include "cbir/errors.hpp"

namespace cbir::models {

std::vector<std::size_t> encoder_sizes(const AutoencoderSpec& spec) {
  if (spec.hidden_layers != 1 && spec.hidden_layers != 2) {
    throw ParameterError("autoencoder supports 1 or 2 hidden layers");
  }
  if (spec.input_dim < 4) throw ParameterError("autoencoder input_dim must be at least 4");
  // round-half-up of n * (4 - k) / 4 in integer arithmetic
  std::vector<std::size_t> sizes;
  for (std::size_t k = 1; k <= spec.hidden_layers; ++k) {
    sizes.push_back((spec.input_dim * (4 - k) * 2 + 4) / 8);
  }
  return sizes;
}

NeuralModel build_autoencoder(const AutoencoderSpec& spec) {
  const auto enc = encoder_sizes(spec);
  std::vector<std::size_t> dims{spec.input_dim};
  dims.insert(dims.end(), enc.begin(), enc.end());
  for (auto it = enc.rbegin() + 1; it != enc.rend(); ++it) dims.push_back(*it);
  dims.push_back(spec.input_dim);
  return nn::make_model(dims, spec.activation, spec.output_activation, spec.dropout, spec.seed);
}

std::size_t encoder_depth(const NeuralModel& autoencoder) {
  const std::size_t n = autoencoder.layers.size();
  if (n < 2 || n % 2 != 0 || autoencoder.input_dim() != autoencoder.output_dim()) {
    throw ShapeError("model is not a symmetric autoencoder");
  }
  return n / 2;
}

nn::Matrix encode_batch(const NeuralModel& autoencoder, const nn::Matrix& features) {
  const std::size_t depth = encoder_depth(autoencoder);
  if (static_cast<std::size_t>(features.cols()) != autoencoder.input_dim()) {
    throw ShapeError("feature length " + std::to_string(features.cols()) + " does not match autoencoder input " +
                     std::to_string(autoencoder.input_dim()));
  }
  NeuralModel encoder;
  encoder.layers.assign(autoencoder.layers.begin(), autoencoder.layers.begin() + static_cast<std::ptrdiff_t>(depth));
  return nn::predict(encoder, features);
}

std::vector<double> encode(const NeuralModel& autoencoder, std::span<const double> feature) {
  nn::Matrix row(1, static_cast<Eigen::Index>(feature.size()));
  for (std::size_t i = 0; i < feature.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = feature[i];
  const nn::Matrix code = encode_batch(autoencoder, row);
  return {code.data(), code.data() + code.size()};
}

std::vector<double> encode(const NeuralModel& autoencoder, const FeatureVector& feature) {
  return encode(autoencoder, std::span<const double>(feature.values));
}

TrainedModel train_autoencoder(const std::vector<FeatureVector>& features, const AutoencoderSpec& spec,
                               const nn::TrainConfig& cfg) {
  cfg.validate();
  if (features.size() < cfg.folds) {
    throw ParameterError("autoencoder training needs at least " + std::to_string(cfg.folds) + " samples, got " +
                         std::to_string(features.size()));
  }
  nn::Matrix x(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(spec.input_dim));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != spec.input_dim) {
      throw ShapeError("feature '" + features[i].source_id + "' has length " + std::to_string(features[i].size()) +
                       ", expected " + std::to_string(spec.input_dim));
    }
    for (std::size_t j = 0; j < spec.input_dim; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i].values[j];
    }
  }
  const NeuralModel tmpl = build_autoencoder(spec);
  nn::CvReport report = nn::cross_validate(tmpl, x, x, cfg, nn::LossKind::mse, nn::Metric::loss);
  NeuralModel best = report.best_model();
  return {std::move(best), std::move(report)};
}

std::vector<std::size_t> ClassifierSpec::resolved_hidden() const {
  if (hidden_dims) return *hidden_dims;
  return {std::max<std::size_t>(64, (input_dim + 1) / 2)};
}

NeuralModel build_classifier(const ClassifierSpec& spec) {
  if (spec.input_dim == 0) throw ParameterError("classifier input_dim must be positive");
  if (spec.num_classes < 2) throw ParameterError("classifier needs at least 2 classes");
  std::vector<std::size_t> dims{spec.input_dim};
  for (std::size_t h : spec.resolved_hidden()) dims.push_back(h);
  dims.push_back(spec.num_classes);
  return nn::make_model(dims, spec.activation, Activation::softmax, spec.dropout, spec.seed);
}

nn::Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes) {
  nn::Matrix y = nn::Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("label " + std::to_string(labels[i]) + " at sample " + std::to_string(i) +
                            " is outside [0, " + std::to_string(num_classes) + ")");
    }
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  }
  return y;
}

TrainedModel train_classifier(const nn::Matrix& codes, const std::vector<std::size_t>& labels,
                              const ClassifierSpec& spec, const nn::TrainConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(codes.rows()) != labels.size()) {
    throw ShapeError("codes and labels are not aligned");
  }
  if (static_cast<std::size_t>(codes.cols()) != spec.input_dim) {
    throw ShapeError("code length " + std::to_string(codes.cols()) + " does not match classifier input " +
                     std::to_string(spec.input_dim));
  }
  const nn::Matrix y = one_hot(labels, spec.num_classes);
  if (labels.size() < cfg.folds) {
    throw ParameterError("classifier training needs at least " + std::to_string(cfg.folds) + " samples");
  }
  const NeuralModel tmpl = build_classifier(spec);
  nn::CvReport report = nn::cross_validate(tmpl, codes, y, cfg, nn::LossKind::cross_entropy, nn::Metric::accuracy);
  NeuralModel best = report.best_model();
  return {std::move(best), std::move(report)};
}

std::vector<double> classify(const NeuralModel& mlp, std::span<const double> code) {
  if (mlp.layers.empty() || mlp.layers.back().activation != Activation::softmax) {
    throw ShapeError("classifier must end in a softmax layer");
  }
  if (code.size() != mlp.input_dim()) {
    throw ShapeError("code length " + std::to_string(code.size()) + " does not match classifier input " +
                     std::to_string(mlp.input_dim()));
  }
  nn::Matrix row(1, static_cast<Eigen::Index>(code.size()));
  for (std::size_t i = 0; i < code.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = code[i];
  const nn::Matrix p = nn::predict(mlp, row);
  return {p.data(), p.data() + p.size()};
}

void fine_tune(NeuralModel& autoencoder, NeuralModel& mlp, const nn::Matrix& features,
               const std::vector<std::size_t>& labels, const nn::TrainConfig& cfg) {
  const std::size_t depth = encoder_depth(autoencoder);
  NeuralModel joint;
  joint.dropout_rate = mlp.dropout_rate;
  joint.layers.assign(autoencoder.layers.begin(), autoencoder.layers.begin() + static_cast<std::ptrdiff_t>(depth));
  joint.layers.insert(joint.layers.end(), mlp.layers.begin(), mlp.layers.end());
  joint.validate();
  const nn::Matrix y = one_hot(labels, mlp.output_dim());
  const nn::TrainResult r = nn::train(std::move(joint), features, y, cfg, nn::LossKind::cross_entropy);
  std::copy(r.model.layers.begin(), r.model.layers.begin() + static_cast<std::ptrdiff_t>(depth),
            autoencoder.layers.begin());
  std::copy(r.model.layers.begin() + static_cast<std::ptrdiff_t>(depth), r.model.layers.end(), mlp.layers.begin());
}

}  // namespace cbir::models
