#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "marvel/tensor.hpp"

namespace marvel {

enum class Activation { identity, relu };

/// binary_logit: one output f(x), labels in {-1,+1}, logistic loss.
/// softmax: k outputs, labels are class indices in [0,k), cross entropy.
enum class OutputMode { binary_logit, softmax };

struct Layer {
  Matrix weight;  // [out x in]
  std::vector<double> bias;
  Activation activation = Activation::identity;
};

/// Raw scores, one row per instance.
using Logits = Matrix;

/// Feed-forward classifier: a stack of affine layers with optional relu.
/// The last layer is always identity so forward() yields raw logits.
class Model {
 public:
  Model(std::vector<Layer> layers, OutputMode mode);

  /// Single affine layer. `num_classes` must be 2 in binary_logit mode.
  static Model linear(std::size_t input_dim, std::size_t num_classes, OutputMode mode,
                      std::uint64_t seed);

  /// Relu hidden layers of the given widths, then an affine output layer.
  static Model mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t num_classes, OutputMode mode, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return layers_.front().weight.cols(); }
  std::size_t output_dim() const noexcept { return layers_.back().weight.rows(); }
  OutputMode mode() const noexcept { return mode_; }

  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const noexcept;

 private:
  std::vector<Layer> layers_;
  OutputMode mode_;
};

/// Same shapes as the model's parameters.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const Model& model);
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 2e-4;
  std::vector<int> decay_epochs;  // strictly increasing
  double decay_factor = 10.0;

  /// Throws DomainError on an invalid configuration.
  void validate() const;

  /// initial / factor^(number of decay epochs <= epoch)
  double learning_rate_at(int epoch) const;
};

/// Momentum buffers carried across sgd_step calls.
struct SgdState {
  Gradients velocity;

  explicit SgdState(const Model& model) : velocity(Gradients::zeros_like(model)) {}
};

Logits forward(const Model& model, const Matrix& features);

/// Row-wise class probabilities. A one-column (binary) input yields two
/// columns [p(-1), p(+1)] from the sigmoid of the logit.
Matrix probabilities(const Logits& logits);

/// Per-instance -log p(label), computed from log-sum-exp.
std::vector<double> instance_losses(const Logits& logits, std::span<const int> labels,
                                    OutputMode mode);

/// sum_j w_j * (-log p_{y_j}(x_j)). Throws DomainError on a negative weight.
double weighted_ce_loss(const Logits& logits, std::span<const int> labels,
                        std::span<const double> weights, OutputMode mode);

/// Analytic gradient of weighted_ce_loss with respect to every parameter.
Gradients gradients(const Model& model, const Matrix& features, std::span<const int> labels,
                    std::span<const double> weights);

/// velocity <- momentum * velocity + grad + weight_decay * param
/// param    <- param - lr(epoch) * velocity
void sgd_step(Model& model, const Gradients& grads, int epoch, const OptimizerConfig& cfg,
              SgdState& state);

}  // namespace marvel
