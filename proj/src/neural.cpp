#include "cbir/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cbir/errors.hpp"

namespace cbir::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  for (auto a : {Activation::linear, Activation::relu, Activation::sigmoid, Activation::tanh, Activation::softmax}) {
    if (to_string(a) == name) return a;
  }
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

std::size_t NeuralModel::input_dim() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  return layers.front().in();
}

std::size_t NeuralModel::output_dim() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  return layers.back().out();
}

void NeuralModel::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ParameterError("dropout rate must lie in [0,1)");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.out() == 0 || l.in() == 0) throw ShapeError("layer " + std::to_string(i) + " has a zero dimension");
    if (static_cast<std::size_t>(l.biases.size()) != l.out()) {
      throw ShapeError("layer " + std::to_string(i) + " bias length does not match its output size");
    }
    if (i + 1 < layers.size() && layers[i + 1].in() != l.out()) {
      throw ShapeError("layer " + std::to_string(i) + " output (" + std::to_string(l.out()) +
                       ") does not chain into layer " + std::to_string(i + 1) + " input (" +
                       std::to_string(layers[i + 1].in()) + ")");
    }
    if (l.activation == Activation::softmax && i + 1 != layers.size()) {
      throw ParameterError("softmax is only allowed on the final layer");
    }
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw ParameterError("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

void initialize(NeuralModel& model, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : model.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in() + l.out()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = rng.uniform(-limit, limit);
    }
    l.biases.setZero();
  }
}

NeuralModel make_model(const std::vector<std::size_t>& dims, Activation hidden, Activation output,
                       double dropout_rate, std::uint64_t seed) {
  if (dims.size() < 2) throw ShapeError("a model needs at least an input and an output size");
  NeuralModel model;
  model.dropout_rate = dropout_rate;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer l;
    l.weights = Matrix::Zero(static_cast<Eigen::Index>(dims[i + 1]), static_cast<Eigen::Index>(dims[i]));
    l.biases = Vector::Zero(static_cast<Eigen::Index>(dims[i + 1]));
    l.activation = i + 2 == dims.size() ? output : hidden;
    model.layers.push_back(std::move(l));
  }
  initialize(model, seed);
  model.validate();
  return model;
}

namespace {

void activate(Matrix& z, Activation a) {
  switch (a) {
    case Activation::linear: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::sigmoid: z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::softmax:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double peak = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - peak).exp().matrix();
        z.row(r) /= z.row(r).sum();
      }
      break;
  }
}

// dL/dz from dL/dy for activation output y.
Matrix activation_backward(const Matrix& grad_out, const Matrix& y, Activation a) {
  switch (a) {
    case Activation::linear: return grad_out;
    case Activation::relu: return (y.array() > 0.0).select(grad_out, 0.0);
    case Activation::sigmoid: return (grad_out.array() * y.array() * (1.0 - y.array())).matrix();
    case Activation::tanh: return (grad_out.array() * (1.0 - y.array().square())).matrix();
    case Activation::softmax: {
      const Vector dots = (grad_out.array() * y.array()).rowwise().sum();
      Matrix out = grad_out;
      out.colwise() -= dots;
      return (out.array() * y.array()).matrix();
    }
  }
  return grad_out;
}

void check_batch(const NeuralModel& model, const Matrix& batch) {
  model.validate();
  if (static_cast<std::size_t>(batch.cols()) != model.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                     std::to_string(model.input_dim()));
  }
}

ForwardPass run_forward(const NeuralModel& model, const Matrix& batch, Mode mode, Rng* rng,
                        std::vector<Matrix>* replay) {
  ForwardPass pass;
  pass.mode = mode;
  const std::size_t n = model.layers.size();
  const bool dropout = mode == Mode::train && model.dropout_rate > 0.0;
  const double keep = 1.0 - model.dropout_rate;
  if (dropout && replay == nullptr && rng == nullptr) {
    throw StateError("train-mode dropout needs a random generator");
  }
  pass.inputs.reserve(n);
  pass.outputs.reserve(n);
  if (mode == Mode::train) pass.masks.resize(n);

  Matrix current = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = model.layers[i];
    Matrix z = current * layer.weights.transpose();
    z.rowwise() += layer.biases.transpose();
    activate(z, layer.activation);
    pass.inputs.push_back(std::move(current));
    current = z;
    if (dropout && i + 1 < n) {
      Matrix mask;
      if (replay != nullptr) {
        if (replay->size() != n || (*replay)[i].rows() != z.rows() || (*replay)[i].cols() != z.cols()) {
          throw ShapeError("replayed dropout mask does not match layer " + std::to_string(i));
        }
        mask = (*replay)[i];
      } else {
        mask.resize(z.rows(), z.cols());
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
          for (Eigen::Index c = 0; c < z.cols(); ++c) mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
        }
      }
      current = (z.array() * mask.array()).matrix();
      pass.masks[i] = std::move(mask);
    }
    pass.outputs.push_back(std::move(z));
  }
  return pass;
}

}  // namespace

ForwardPass forward(const NeuralModel& model, const Matrix& batch, Mode mode, Rng* rng) {
  check_batch(model, batch);
  return run_forward(model, batch, mode, rng, nullptr);
}

ForwardPass forward_with_masks(const NeuralModel& model, const Matrix& batch, std::vector<Matrix> masks) {
  check_batch(model, batch);
  return run_forward(model, batch, Mode::train, nullptr, &masks);
}

Matrix predict(const NeuralModel& model, const Matrix& batch) {
  return forward(model, batch, Mode::infer).result();
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("predictions are " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " but targets are " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

double loss(LossKind kind, const Matrix& predictions, const Matrix& targets) {
  check_same_shape(predictions, targets);
  if (predictions.size() == 0) throw ShapeError("empty batch");
  if (kind == LossKind::mse) {
    return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
  }
  double total = 0.0;
  for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
    Eigen::Index truth = 0;
    targets.row(r).maxCoeff(&truth);
    total += -std::log(std::max(predictions(r, truth), 1e-12));
  }
  return total / static_cast<double>(predictions.rows());
}

Gradients backward(const NeuralModel& model, const ForwardPass& pass, const Matrix& targets, LossKind kind) {
  const std::size_t n = model.layers.size();
  if (pass.outputs.size() != n || pass.inputs.size() != n) {
    throw StateError("forward pass does not belong to this model");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<std::size_t>(pass.outputs[i].cols()) != model.layers[i].out() ||
        static_cast<std::size_t>(pass.inputs[i].cols()) != model.layers[i].in()) {
      throw StateError("stale forward pass: layer " + std::to_string(i) + " shapes changed");
    }
  }
  const Matrix& y = pass.result();
  check_same_shape(y, targets);
  const auto batch = static_cast<double>(y.rows());

  Matrix delta;
  if (kind == LossKind::cross_entropy) {
    if (model.layers.back().activation != Activation::softmax) {
      throw ParameterError("cross-entropy requires a softmax output layer");
    }
    delta = (y - targets) / batch;
  } else {
    const Matrix grad_y = 2.0 * (y - targets) / static_cast<double>(y.size());
    delta = activation_backward(grad_y, y, model.layers.back().activation);
  }

  Gradients g;
  g.weights.resize(n);
  g.biases.resize(n);
  for (std::size_t i = n; i-- > 0;) {
    const auto& layer = model.layers[i];
    g.weights[i] = delta.transpose() * pass.inputs[i];
    g.biases[i] = delta.colwise().sum().transpose();
    if (i == 0) break;
    Matrix grad_in = delta * layer.weights;
    if (pass.mode == Mode::train && pass.masks.size() == n && pass.masks[i - 1].size() != 0) {
      grad_in = (grad_in.array() * pass.masks[i - 1].array()).matrix();
    }
    delta = activation_backward(grad_in, pass.outputs[i - 1], model.layers[i - 1].activation);
  }
  return g;
}

void apply_sgd(NeuralModel& model, const Gradients& grads, double learning_rate) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    model.layers[i].weights.noalias() -= learning_rate * grads.weights[i];
    model.layers[i].biases.noalias() -= learning_rate * grads.biases[i];
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (patience < 1) throw ParameterError("patience must be at least 1");
  if (folds < 2) throw ParameterError("folds must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ParameterError("learning_rate must be positive");
  if (!(min_delta >= 0.0)) throw ParameterError("min_delta must be non-negative");
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

TrainResult train_impl(NeuralModel model, const Matrix& inputs, const Matrix& targets, const Matrix* val_inputs,
                       const Matrix* val_targets, const TrainConfig& cfg, LossKind kind) {
  cfg.validate();
  model.validate();
  if (inputs.rows() == 0) throw ShapeError("no training samples");
  if (inputs.rows() != targets.rows()) throw ShapeError("inputs and targets have different sample counts");
  if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) throw ShapeError("inputs do not match the model input size");
  if (static_cast<std::size_t>(targets.cols()) != model.output_dim()) throw ShapeError("targets do not match the model output size");
  if (val_inputs != nullptr && val_inputs->rows() != val_targets->rows()) {
    throw ShapeError("validation inputs and targets have different sample counts");
  }

  TrainResult result;
  result.model = model;
  if (cfg.max_epochs == 0) return result;

  const Matrix& mon_in = val_inputs != nullptr ? *val_inputs : inputs;
  const Matrix& mon_tgt = val_targets != nullptr ? *val_targets : targets;

  Rng rng(cfg.seed);
  const auto n = static_cast<std::size_t>(inputs.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = gather_rows(inputs, idx);
      const Matrix yb = gather_rows(targets, idx);
      const ForwardPass pass = forward(model, xb, Mode::train, &rng);
      epoch_loss += loss(kind, pass.result(), yb) * static_cast<double>(idx.size());
      apply_sgd(model, backward(model, pass, yb, kind), cfg.learning_rate);
    }
    epoch_loss /= static_cast<double>(n);
    const double monitored = loss(kind, predict(model, mon_in), mon_tgt);
    if (!std::isfinite(epoch_loss) || !std::isfinite(monitored)) {
      throw DivergenceError(static_cast<int>(epoch), "training loss is not finite");
    }
    result.history.push_back({epoch, epoch_loss, monitored});
    if (monitored < best - cfg.min_delta) {
      best = monitored;
      result.model = model;
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace

TrainResult train(NeuralModel model, const Matrix& inputs, const Matrix& targets, const TrainConfig& cfg,
                  LossKind kind) {
  return train_impl(std::move(model), inputs, targets, nullptr, nullptr, cfg, kind);
}

TrainResult train(NeuralModel model, const Matrix& inputs, const Matrix& targets, const Matrix& val_inputs,
                  const Matrix& val_targets, const TrainConfig& cfg, LossKind kind) {
  return train_impl(std::move(model), inputs, targets, &val_inputs, &val_targets, cfg, kind);
}

double accuracy(const Matrix& predictions, const Matrix& targets) {
  check_same_shape(predictions, targets);
  if (predictions.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
    Eigen::Index p = 0;
    Eigen::Index t = 0;
    predictions.row(r).maxCoeff(&p);
    targets.row(r).maxCoeff(&t);
    if (p == t) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.rows());
}

std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ParameterError("folds must be at least 2");
  if (folds > n) {
    throw ParameterError("cannot split " + std::to_string(n) + " samples into " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0xF01D));
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    out[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos), perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

CvReport cross_validate(const NeuralModel& model_template, const Matrix& inputs, const Matrix& targets,
                        const TrainConfig& cfg, LossKind kind, Metric metric) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(inputs.rows());
  const auto parts = fold_partition(n, cfg.folds, cfg.seed);

  CvReport report;
  report.metric = metric;
  double sum = 0.0;
  for (std::size_t f = 0; f < parts.size(); ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < parts.size(); ++g) {
      if (g != f) train_idx.insert(train_idx.end(), parts[g].begin(), parts[g].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::vector<std::size_t> val_idx = parts[f];
    std::sort(val_idx.begin(), val_idx.end());

    const Matrix x_val = gather_rows(inputs, val_idx);
    const Matrix y_val = gather_rows(targets, val_idx);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, f + 1);

    FoldResult fold;
    fold.validation_size = val_idx.size();
    fold.training = train(model_template, gather_rows(inputs, train_idx), gather_rows(targets, train_idx), x_val,
                          y_val, fold_cfg, kind);
    const Matrix pred = predict(fold.training.model, x_val);
    fold.val_loss = loss(kind, pred, y_val);
    fold.metric = metric == Metric::accuracy ? accuracy(pred, y_val) : fold.val_loss;
    sum += fold.metric;

    const bool better = report.folds.empty() ||
                        (metric == Metric::accuracy ? fold.metric > report.folds[report.best_fold].metric
                                                    : fold.metric < report.folds[report.best_fold].metric);
    if (better) report.best_fold = f;
    report.folds.push_back(std::move(fold));
  }
  report.mean_metric = sum / static_cast<double>(report.folds.size());
  return report;
}

}  // namespace cbir::nn
