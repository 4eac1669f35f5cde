#include "marvel/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marvel/errors.hpp"
#include "marvel/rng.hpp"

namespace marvel {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sum_exp(std::span<const double> row) {
  const double top = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double v : row) total += std::exp(v - top);
  return top + std::log(total);
}

Layer init_layer(std::size_t in, std::size_t out, Activation act, CounterRng& rng) {
  Layer layer{Matrix(out, in), std::vector<double>(out, 0.0), act};
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.weight.data()) w = (2.0 * rng.uniform() - 1.0) * bound;
  return layer;
}

std::size_t output_width(std::size_t num_classes, OutputMode mode) {
  if (mode == OutputMode::binary_logit) {
    if (num_classes != 2) throw DomainError("binary_logit mode needs exactly 2 classes");
    return 1;
  }
  if (num_classes < 2) throw DomainError("softmax mode needs at least 2 classes");
  return num_classes;
}

void check_label(int label, std::size_t width, OutputMode mode) {
  if (mode == OutputMode::binary_logit) {
    if (label != -1 && label != 1) {
      throw DomainError("binary label must be -1 or +1, got " + std::to_string(label));
    }
  } else if (label < 0 || static_cast<std::size_t>(label) >= width) {
    throw DomainError("class label " + std::to_string(label) + " out of range");
  }
}

void check_batch(const Logits& logits, std::span<const int> labels, OutputMode mode) {
  if (labels.size() != logits.rows()) throw ShapeError("labels do not match logits rows");
  if (mode == OutputMode::binary_logit && logits.cols() != 1) {
    throw ShapeError("binary_logit mode expects one logit per row");
  }
  for (int y : labels) check_label(y, logits.cols(), mode);
}

// Affine map plus activation for all rows; keeps pre-activations for backprop.
Matrix affine(const Layer& layer, const Matrix& input) {
  const std::size_t out = layer.weight.rows();
  const std::size_t in = layer.weight.cols();
  Matrix z(input.rows(), out);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = layer.bias[o];
      auto w = layer.weight.row(o);
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
      z(r, o) = acc;
    }
  }
  return z;
}

Matrix activate(const Matrix& z, Activation act) {
  if (act == Activation::identity) return z;
  Matrix a = z;
  for (double& v : a.data()) v = std::max(v, 0.0);
  return a;
}

}  // namespace

Model::Model(std::vector<Layer> layers, OutputMode mode) : layers_(std::move(layers)), mode_(mode) {
  if (layers_.empty()) throw ShapeError("model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0) {
      throw ShapeError("layer " + std::to_string(l) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weight.rows()) {
      throw ShapeError("layer " + std::to_string(l) + " bias does not match weight rows");
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      throw ShapeError("layer " + std::to_string(l) + " input does not match previous output");
    }
  }
  if (layers_.back().activation != Activation::identity) {
    throw ShapeError("output layer must be identity");
  }
  if (mode_ == OutputMode::binary_logit && output_dim() != 1) {
    throw ShapeError("binary_logit mode needs a single output");
  }
  if (mode_ == OutputMode::softmax && output_dim() < 2) {
    throw ShapeError("softmax mode needs at least two outputs");
  }
}

Model Model::linear(std::size_t input_dim, std::size_t num_classes, OutputMode mode,
                    std::uint64_t seed) {
  return mlp(input_dim, {}, num_classes, mode, seed);
}

Model Model::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t num_classes, OutputMode mode, std::uint64_t seed) {
  if (input_dim == 0) throw ShapeError("input dimension must be positive");
  CounterRng rng(seed, Stream::init);
  std::vector<Layer> layers;
  std::size_t in = input_dim;
  for (std::size_t width : hidden) {
    if (width == 0) throw ShapeError("hidden width must be positive");
    layers.push_back(init_layer(in, width, Activation::relu, rng));
    in = width;
  }
  layers.push_back(init_layer(in, output_width(num_classes, mode), Activation::identity, rng));
  return Model(std::move(layers), mode);
}

std::size_t Model::parameter_count() const noexcept {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weight.size() + layer.bias.size();
  return count;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  for (const auto& layer : model.layers()) {
    g.weight.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw DomainError("weight decay must be nonnegative");
  if (!(decay_factor > 0.0)) throw DomainError("decay factor must be positive");
  for (std::size_t i = 1; i < decay_epochs.size(); ++i) {
    if (decay_epochs[i] <= decay_epochs[i - 1]) {
      throw DomainError("decay epochs must be strictly increasing");
    }
  }
}

double OptimizerConfig::learning_rate_at(int epoch) const {
  const auto passed = std::count_if(decay_epochs.begin(), decay_epochs.end(),
                                    [epoch](int d) { return d <= epoch; });
  return learning_rate / std::pow(decay_factor, static_cast<double>(passed));
}

Logits forward(const Model& model, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw ShapeError("feature width " + std::to_string(features.cols()) +
                     " does not match model input " + std::to_string(model.input_dim()));
  }
  Matrix a = features;
  for (const auto& layer : model.layers()) a = activate(affine(layer, a), layer.activation);
  return a;
}

Matrix probabilities(const Logits& logits) {
  if (logits.cols() == 1) {
    Matrix p(logits.rows(), 2);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      p(r, 0) = sigmoid(-logits(r, 0));
      p(r, 1) = sigmoid(logits(r, 0));
    }
    return p;
  }
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto f = logits.row(r);
    const double top = *std::max_element(f.begin(), f.end());
    double total = 0.0;
    for (std::size_t c = 0; c < f.size(); ++c) total += (p(r, c) = std::exp(f[c] - top));
    for (std::size_t c = 0; c < f.size(); ++c) p(r, c) /= total;
  }
  return p;
}

std::vector<double> instance_losses(const Logits& logits, std::span<const int> labels,
                                    OutputMode mode) {
  check_batch(logits, labels, mode);
  std::vector<double> losses(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (mode == OutputMode::binary_logit) {
      losses[r] = softplus(-labels[r] * logits(r, 0));
    } else {
      auto f = logits.row(r);
      losses[r] = log_sum_exp(f) - f[static_cast<std::size_t>(labels[r])];
    }
  }
  return losses;
}

double weighted_ce_loss(const Logits& logits, std::span<const int> labels,
                        std::span<const double> weights, OutputMode mode) {
  if (weights.size() != labels.size()) throw ShapeError("weights do not match batch size");
  for (double w : weights) {
    if (w < 0.0) throw DomainError("negative instance weight");
  }
  const auto losses = instance_losses(logits, labels, mode);
  double total = 0.0;
  for (std::size_t r = 0; r < losses.size(); ++r) {
    if (weights[r] != 0.0) total += weights[r] * losses[r];
  }
  return total;
}

Gradients gradients(const Model& model, const Matrix& features, std::span<const int> labels,
                    std::span<const double> weights) {
  if (features.rows() != labels.size()) throw ShapeError("labels do not match feature rows");
  if (weights.size() != labels.size()) throw ShapeError("weights do not match batch size");
  for (double w : weights) {
    if (w < 0.0) throw DomainError("negative instance weight");
  }
  if (features.cols() != model.input_dim()) throw ShapeError("feature width mismatch");

  const auto& layers = model.layers();
  const std::size_t depth = layers.size();

  // inputs[l] feeds layer l; pre[l] is its pre-activation.
  std::vector<Matrix> inputs{features};
  std::vector<Matrix> pre;
  for (const auto& layer : layers) {
    pre.push_back(affine(layer, inputs.back()));
    inputs.push_back(activate(pre.back(), layer.activation));
  }
  const Matrix& logits = inputs.back();
  check_batch(logits, labels, model.mode());

  // d loss / d logits, already scaled by the instance weight.
  Matrix delta(logits.rows(), logits.cols());
  const Matrix probs = probabilities(logits);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (weights[r] == 0.0) continue;
    if (model.mode() == OutputMode::binary_logit) {
      delta(r, 0) = weights[r] * (probs(r, 1) - (labels[r] == 1 ? 1.0 : 0.0));
    } else {
      for (std::size_t c = 0; c < logits.cols(); ++c) {
        const double target = static_cast<std::size_t>(labels[r]) == c ? 1.0 : 0.0;
        delta(r, c) = weights[r] * (probs(r, c) - target);
      }
    }
  }

  Gradients g = Gradients::zeros_like(model);
  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& a = inputs[l];
    const auto& layer = layers[l];
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      if (weights[r] == 0.0) continue;
      auto x = a.row(r);
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
        const double d = delta(r, o);
        if (d == 0.0) continue;
        g.bias[l][o] += d;
        auto gw = g.weight[l].row(o);
        for (std::size_t i = 0; i < x.size(); ++i) gw[i] += d * x[i];
      }
    }
    if (l == 0) break;
    Matrix next(delta.rows(), layer.weight.cols());
    const Activation below = layers[l - 1].activation;
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      if (weights[r] == 0.0) continue;
      for (std::size_t i = 0; i < layer.weight.cols(); ++i) {
        if (below == Activation::relu && pre[l - 1](r, i) <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t o = 0; o < layer.weight.rows(); ++o) acc += layer.weight(o, i) * delta(r, o);
        next(r, i) = acc;
      }
    }
    delta = std::move(next);
  }
  return g;
}

void sgd_step(Model& model, const Gradients& grads, int epoch, const OptimizerConfig& cfg,
              SgdState& state) {
  auto& layers = model.layers();
  if (grads.weight.size() != layers.size() || grads.bias.size() != layers.size()) {
    throw ShapeError("gradient layer count does not match model");
  }
  const double lr = cfg.learning_rate_at(epoch);
  auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                    std::vector<double>& velocity) {
    if (grad.size() != param.size() || velocity.size() != param.size()) {
      throw ShapeError("gradient shape does not match parameter");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      velocity[i] = cfg.momentum * velocity[i] + grad[i] + cfg.weight_decay * param[i];
      param[i] -= lr * velocity[i];
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight.data(), grads.weight[l].data(), state.velocity.weight[l].data());
    update(layers[l].bias, grads.bias[l], state.velocity.bias[l]);
  }
}

}  // namespace marvel
