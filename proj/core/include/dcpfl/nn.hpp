#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dcpfl/dataset.hpp"
#include "dcpfl/matrix.hpp"

namespace dcpfl {

// One fully connected block: y = W x + b, with W stored (out x in) row-major.
struct LayerParams {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  std::size_t size() const noexcept { return weights.size() + biases.size(); }
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Parameters of a feed-forward classifier with layer widths `layer_dims`.
// Hidden layers use tanh; the last block is linear into softmax.
class ModelParams {
 public:
  ModelParams() = default;

  /// Zero-initialised parameters. Throws ConfigError for fewer than two
  /// widths or a zero width.
  explicit ModelParams(std::vector<std::size_t> layer_dims);

  /// Glorot-uniform weights, zero biases.
  static ModelParams glorot_uniform(std::vector<std::size_t> layer_dims, std::uint64_t seed);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t num_classes() const { return dims_.back(); }

  /// Total parameter count.
  std::size_t dim() const noexcept;

  LayerParams& layer(std::size_t k) { return layers_.at(k); }
  const LayerParams& layer(std::size_t k) const { return layers_.at(k); }

  /// All parameters, block by block, weights before biases.
  std::vector<double> flatten() const;
  std::vector<double> flatten_layer(std::size_t k) const;
  void assign_layer(std::size_t k, std::span<const double> flat);

  bool same_shape(const ModelParams& other) const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<LayerParams> layers_;
};

struct Batch {
  Matrix inputs;            // batch_size x input_dim
  std::vector<int> labels;  // one class per row
};

struct ForwardResult {
  Matrix logits;
  // activations[0] is the input; activations[k] is the output of block k-1
  // after its nonlinearity (the last entry holds the logits).
  std::vector<Matrix> activations;
};

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grads;
};

ForwardResult forward(const ModelParams& params, const Matrix& inputs);
inline ForwardResult forward(const ModelParams& params, const Batch& batch) {
  return forward(params, batch.inputs);
}

/// Mean softmax cross-entropy and its exact gradient.
LossAndGrad loss_and_grad(const ModelParams& params, const Batch& batch);

/// Mean cross-entropy only (no gradient).
double mean_loss(const ModelParams& params, const Matrix& inputs, std::span<const int> labels);

ModelParams sgd_step(const ModelParams& params, const ModelParams& grads, double lr);

/// `epochs` passes of minibatch SGD with a seeded shuffle per epoch.
ModelParams local_train(const ModelParams& params, const ClientDataset& data, int epochs,
                        std::size_t batch_size, double lr, std::uint64_t seed);

/// Fraction of rows whose argmax logit equals the label.
double accuracy(const ModelParams& params, const Matrix& inputs, std::span<const int> labels);

}  // namespace dcpfl
