#include "dcpfl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dcpfl/errors.hpp"

namespace dcpfl {

namespace {

bool finite_span(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

void check_labels(std::span<const int> labels, std::size_t num_classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InputError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
  }
}

// Stable log-sum-exp of one logit row.
double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

std::size_t first_nonfinite_layer(const ForwardResult& fr) {
  for (std::size_t k = 1; k < fr.activations.size(); ++k) {
    if (!finite_span(fr.activations[k].data())) return k - 1;
  }
  return fr.activations.size() - 2;
}

}  // namespace

ModelParams::ModelParams(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ConfigError("a model needs at least an input and an output width");
  for (std::size_t w : dims_) {
    if (w == 0) throw ConfigError("layer widths must be positive");
  }
  layers_.reserve(dims_.size() - 1);
  for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
    LayerParams lp;
    lp.in = dims_[k];
    lp.out = dims_[k + 1];
    lp.weights.assign(lp.in * lp.out, 0.0);
    lp.biases.assign(lp.out, 0.0);
    layers_.push_back(std::move(lp));
  }
}

ModelParams ModelParams::glorot_uniform(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
  ModelParams p(std::move(layer_dims));
  std::mt19937_64 rng(seed);
  for (auto& lp : p.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(lp.in + lp.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : lp.weights) w = dist(rng);
  }
  return p;
}

std::size_t ModelParams::dim() const noexcept {
  std::size_t n = 0;
  for (const auto& lp : layers_) n += lp.size();
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(dim());
  for (const auto& lp : layers_) {
    out.insert(out.end(), lp.weights.begin(), lp.weights.end());
    out.insert(out.end(), lp.biases.begin(), lp.biases.end());
  }
  return out;
}

std::vector<double> ModelParams::flatten_layer(std::size_t k) const {
  const auto& lp = layers_.at(k);
  std::vector<double> out(lp.weights);
  out.insert(out.end(), lp.biases.begin(), lp.biases.end());
  return out;
}

void ModelParams::assign_layer(std::size_t k, std::span<const double> flat) {
  auto& lp = layers_.at(k);
  if (flat.size() != lp.size()) throw ConfigError("layer size mismatch in assign_layer");
  std::copy_n(flat.begin(), lp.weights.size(), lp.weights.begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(lp.weights.size()), flat.end(),
            lp.biases.begin());
}

bool ModelParams::same_shape(const ModelParams& other) const noexcept {
  return dims_ == other.dims_;
}

bool ModelParams::all_finite() const noexcept {
  return std::all_of(layers_.begin(), layers_.end(), [](const LayerParams& lp) {
    return finite_span(lp.weights) && finite_span(lp.biases);
  });
}

ForwardResult forward(const ModelParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.input_dim()) {
    throw ConfigError("input width " + std::to_string(inputs.cols()) +
                      " does not match model input width " +
                      std::to_string(params.input_dim()));
  }
  ForwardResult fr;
  fr.activations.reserve(params.num_layers() + 1);
  fr.activations.push_back(inputs);
  const std::size_t batch = inputs.rows();
  for (std::size_t k = 0; k < params.num_layers(); ++k) {
    const auto& lp = params.layer(k);
    const Matrix& a = fr.activations.back();
    Matrix z(batch, lp.out);
    for (std::size_t r = 0; r < batch; ++r) {
      const auto x = a.row(r);
      auto zr = z.row(r);
      for (std::size_t o = 0; o < lp.out; ++o) {
        const double* w = lp.weights.data() + o * lp.in;
        double acc = lp.biases[o];
        for (std::size_t i = 0; i < lp.in; ++i) acc += w[i] * x[i];
        zr[o] = acc;
      }
    }
    if (k + 1 < params.num_layers()) {
      for (double& v : z.data()) v = std::tanh(v);
    }
    fr.activations.push_back(std::move(z));
  }
  fr.logits = fr.activations.back();
  return fr;
}

double mean_loss(const ModelParams& params, const Matrix& inputs, std::span<const int> labels) {
  if (labels.size() != inputs.rows() || labels.empty()) {
    throw InputError("batch needs at least one sample and one label per row");
  }
  check_labels(labels, params.num_classes());
  const ForwardResult fr = forward(params, inputs);
  double total = 0.0;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto z = fr.logits.row(r);
    total += log_sum_exp(z) - z[static_cast<std::size_t>(labels[r])];
  }
  const double loss = total / static_cast<double>(labels.size());
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite loss", first_nonfinite_layer(fr));
  }
  return loss;
}

LossAndGrad loss_and_grad(const ModelParams& params, const Batch& batch) {
  const std::size_t bsz = batch.inputs.rows();
  if (bsz == 0 || batch.labels.size() != bsz) {
    throw InputError("batch needs at least one sample and one label per row");
  }
  check_labels(batch.labels, params.num_classes());
  const ForwardResult fr = forward(params, batch.inputs);
  const std::size_t num_classes = params.num_classes();
  const double inv_b = 1.0 / static_cast<double>(bsz);

  // dz = (softmax - onehot) / B at the output block.
  Matrix dz(bsz, num_classes);
  double total = 0.0;
  for (std::size_t r = 0; r < bsz; ++r) {
    const auto z = fr.logits.row(r);
    const double lse = log_sum_exp(z);
    const auto y = static_cast<std::size_t>(batch.labels[r]);
    total += lse - z[y];
    auto d = dz.row(r);
    for (std::size_t c = 0; c < num_classes; ++c) d[c] = std::exp(z[c] - lse) * inv_b;
    d[y] -= inv_b;
  }
  LossAndGrad out;
  out.loss = total * inv_b;
  if (!std::isfinite(out.loss)) {
    throw NumericalError("non-finite loss", first_nonfinite_layer(fr));
  }

  out.grads = ModelParams(params.layer_dims());
  for (std::size_t k = params.num_layers(); k-- > 0;) {
    const auto& lp = params.layer(k);
    auto& g = out.grads.layer(k);
    const Matrix& a = fr.activations[k];
    for (std::size_t r = 0; r < bsz; ++r) {
      const auto d = dz.row(r);
      const auto x = a.row(r);
      for (std::size_t o = 0; o < lp.out; ++o) {
        const double dv = d[o];
        g.biases[o] += dv;
        double* gw = g.weights.data() + o * lp.in;
        for (std::size_t i = 0; i < lp.in; ++i) gw[i] += dv * x[i];
      }
    }
    if (k == 0) break;
    // Back through W, then through tanh of the previous block.
    Matrix da(bsz, lp.in);
    for (std::size_t r = 0; r < bsz; ++r) {
      const auto d = dz.row(r);
      auto dar = da.row(r);
      const auto act = a.row(r);
      for (std::size_t o = 0; o < lp.out; ++o) {
        const double dv = d[o];
        const double* w = lp.weights.data() + o * lp.in;
        for (std::size_t i = 0; i < lp.in; ++i) dar[i] += dv * w[i];
      }
      for (std::size_t i = 0; i < lp.in; ++i) dar[i] *= 1.0 - act[i] * act[i];
    }
    dz = std::move(da);
  }
  return out;
}

ModelParams sgd_step(const ModelParams& params, const ModelParams& grads, double lr) {
  if (!params.same_shape(grads)) throw ConfigError("gradient shape does not match parameters");
  ModelParams next = params;
  for (std::size_t k = 0; k < next.num_layers(); ++k) {
    auto& lp = next.layer(k);
    const auto& g = grads.layer(k);
    for (std::size_t i = 0; i < lp.weights.size(); ++i) lp.weights[i] -= lr * g.weights[i];
    for (std::size_t i = 0; i < lp.biases.size(); ++i) lp.biases[i] -= lr * g.biases[i];
  }
  return next;
}

ModelParams local_train(const ModelParams& params, const ClientDataset& data, int epochs,
                        std::size_t batch_size, double lr, std::uint64_t seed) {
  if (data.empty()) throw InputError("local_train on an empty dataset");
  if (epochs < 1) throw InputError("local_train needs at least one epoch");
  if (batch_size == 0) throw InputError("batch size must be positive");
  if (data.feature_dim() != params.input_dim()) {
    throw ConfigError("dataset feature width does not match model input width");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ModelParams current = params;
  const std::size_t dim = data.feature_dim();
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      Batch batch{Matrix(end - start, dim), std::vector<int>(end - start)};
      for (std::size_t r = start; r < end; ++r) {
        const auto src = data.features.row(order[r]);
        std::copy(src.begin(), src.end(), batch.inputs.row(r - start).begin());
        batch.labels[r - start] = data.labels[order[r]];
      }
      const LossAndGrad lg = loss_and_grad(current, batch);
      current = sgd_step(current, lg.grads, lr);
    }
  }
  return current;
}

double accuracy(const ModelParams& params, const Matrix& inputs, std::span<const int> labels) {
  if (labels.empty() || labels.size() != inputs.rows()) {
    throw InputError("accuracy needs a non-empty labeled set");
  }
  const ForwardResult fr = forward(params, inputs);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto z = fr.logits.row(r);
    const auto pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace dcpfl
