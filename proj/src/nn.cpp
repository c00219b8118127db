#include "diet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diet::nn {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.9;

std::atomic<std::uint64_t> g_fit_count{0};

}  // namespace

void NetworkSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw std::invalid_argument("NetworkSpec: need at least input and output widths");
  }
  for (const Index w : layer_widths) {
    if (w < 1) throw std::invalid_argument("NetworkSpec: layer widths must be positive");
  }
}

NetworkSpec make_mlp_spec(Index input_width, Index hidden_width, Index hidden_layers,
                          Index output_width, Normalization normalization) {
  NetworkSpec spec;
  spec.layer_widths.push_back(input_width);
  for (Index l = 0; l < hidden_layers; ++l) spec.layer_widths.push_back(hidden_width);
  spec.layer_widths.push_back(output_width);
  spec.normalization = normalization;
  spec.validate();
  return spec;
}

NetworkParams init_network(const NetworkSpec& spec, RngStream stream) {
  spec.validate();
  NetworkParams params;
  Rng rng(stream);
  const Index n_layers = spec.n_layers();
  params.layers.resize(static_cast<std::size_t>(n_layers));
  for (Index l = 0; l < n_layers; ++l) {
    const Index fan_in = spec.layer_widths[static_cast<std::size_t>(l)];
    const Index fan_out = spec.layer_widths[static_cast<std::size_t>(l + 1)];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    LayerParams& layer = params.layers[static_cast<std::size_t>(l)];
    layer.weights.resize(fan_in, fan_out);
    for (Index i = 0; i < fan_in; ++i) {
      for (Index j = 0; j < fan_out; ++j) {
        layer.weights(i, j) = rng.uniform(-limit, limit);
      }
    }
    layer.bias = Vector::Zero(fan_out);
  }
  if (spec.normalization == Normalization::kBatchNorm) {
    params.norms.resize(static_cast<std::size_t>(spec.n_hidden()));
    for (Index l = 0; l < spec.n_hidden(); ++l) {
      const Index width = spec.layer_widths[static_cast<std::size_t>(l + 1)];
      BatchNormParams& bn = params.norms[static_cast<std::size_t>(l)];
      bn.gamma = Vector::Ones(width);
      bn.beta = Vector::Zero(width);
      bn.running_mean = Vector::Zero(width);
      bn.running_var = Vector::Ones(width);
    }
  }
  return params;
}

namespace {

void check_input(const NetworkSpec& spec, const Matrix& X) {
  if (X.cols() != spec.input_width()) {
    throw std::invalid_argument("forward: input has " + std::to_string(X.cols()) +
                                " columns but the network expects " +
                                std::to_string(spec.input_width()));
  }
  if (X.rows() < 1) throw std::invalid_argument("forward: empty batch");
}

Matrix apply_activation(const NetworkSpec& spec, const Matrix& v) {
  if (spec.activation == Activation::kIdentity) return v;
  return v.cwiseMax(0.0);
}

}  // namespace

Matrix forward(const NetworkSpec& spec, NetworkParams& params, const Matrix& X, Mode mode,
               ForwardCache* cache) {
  spec.validate();
  check_input(spec, X);
  const bool use_bn = spec.normalization == Normalization::kBatchNorm;
  const Index n_layers = spec.n_layers();
  const double n_rows = static_cast<double>(X.rows());

  if (cache) {
    cache->valid = false;
    cache->inputs.assign(static_cast<std::size_t>(n_layers), Matrix());
    cache->bn_xhat.assign(static_cast<std::size_t>(spec.n_hidden()), Matrix());
    cache->bn_inv_std.assign(static_cast<std::size_t>(spec.n_hidden()), Vector());
    cache->relu_input.assign(static_cast<std::size_t>(spec.n_hidden()), Matrix());
  }

  Matrix h = X;
  for (Index l = 0; l < n_layers; ++l) {
    if (cache) cache->inputs[static_cast<std::size_t>(l)] = h;
    const LayerParams& layer = params.layers[static_cast<std::size_t>(l)];
    Matrix pre = (h * layer.weights).rowwise() + layer.bias.transpose();
    if (l == n_layers - 1) {
      h = std::move(pre);  // output layer: affine only
      break;
    }
    if (use_bn) {
      BatchNormParams& bn = params.norms[static_cast<std::size_t>(l)];
      Matrix xhat(pre.rows(), pre.cols());
      Vector inv_std(pre.cols());
      if (mode == Mode::kTrain) {
        const Vector mean = pre.colwise().mean();
        Vector var(pre.cols());
        for (Index j = 0; j < pre.cols(); ++j) {
          var[j] = (pre.col(j).array() - mean[j]).square().sum() / n_rows;
        }
        for (Index j = 0; j < pre.cols(); ++j) {
          inv_std[j] = 1.0 / std::sqrt(var[j] + kBnEpsilon);
          xhat.col(j) = (pre.col(j).array() - mean[j]) * inv_std[j];
        }
        bn.running_mean = kBnMomentum * bn.running_mean + (1.0 - kBnMomentum) * mean;
        bn.running_var = kBnMomentum * bn.running_var + (1.0 - kBnMomentum) * var;
      } else {
        for (Index j = 0; j < pre.cols(); ++j) {
          inv_std[j] = 1.0 / std::sqrt(bn.running_var[j] + kBnEpsilon);
          xhat.col(j) = (pre.col(j).array() - bn.running_mean[j]) * inv_std[j];
        }
      }
      Matrix scaled(pre.rows(), pre.cols());
      for (Index j = 0; j < pre.cols(); ++j) {
        scaled.col(j) = bn.gamma[j] * xhat.col(j).array() + bn.beta[j];
      }
      if (cache) {
        cache->bn_xhat[static_cast<std::size_t>(l)] = xhat;
        cache->bn_inv_std[static_cast<std::size_t>(l)] = inv_std;
        cache->relu_input[static_cast<std::size_t>(l)] = scaled;
      }
      h = apply_activation(spec, scaled);
    } else {
      if (cache) cache->relu_input[static_cast<std::size_t>(l)] = pre;
      h = apply_activation(spec, pre);
    }
  }
  if (cache) cache->valid = (mode == Mode::kTrain);
  return h;
}

Matrix forward_eval(const NetworkSpec& spec, const NetworkParams& params, const Matrix& X) {
  // Eval mode never mutates parameters; the const_cast only feeds the shared
  // implementation, which touches running stats exclusively in train mode.
  return forward(spec, const_cast<NetworkParams&>(params), X, Mode::kEval, nullptr);
}

NetworkGradients backward(const NetworkSpec& spec, const NetworkParams& params,
                          const ForwardCache& cache, const Matrix& grad_output) {
  if (!cache.valid) {
    throw std::logic_error("backward: requires the cache of a matching train-mode forward pass");
  }
  const bool use_bn = spec.normalization == Normalization::kBatchNorm;
  const Index n_layers = spec.n_layers();
  if (grad_output.rows() != cache.inputs.front().rows() ||
      grad_output.cols() != spec.output_width()) {
    throw std::invalid_argument("backward: grad_output shape mismatch");
  }

  NetworkGradients grads;
  grads.layers.resize(static_cast<std::size_t>(n_layers));
  if (use_bn) grads.norms.resize(static_cast<std::size_t>(spec.n_hidden()));

  Matrix grad = grad_output;  // dLoss/d(output of current stage), walking backwards
  for (Index l = n_layers - 1; l >= 0; --l) {
    if (l < n_layers - 1) {
      // Backprop the activation.
      if (spec.activation == Activation::kRelu) {
        const Matrix& pre_act = cache.relu_input[static_cast<std::size_t>(l)];
        grad = (pre_act.array() > 0.0).select(grad, Matrix::Zero(grad.rows(), grad.cols()));
      }
      if (use_bn) {
        const Matrix& xhat = cache.bn_xhat[static_cast<std::size_t>(l)];
        const Vector& inv_std = cache.bn_inv_std[static_cast<std::size_t>(l)];
        const BatchNormParams& bn = params.norms[static_cast<std::size_t>(l)];
        BatchNormParams& bn_grad = grads.norms[static_cast<std::size_t>(l)];
        const Index width = xhat.cols();
        const double n = static_cast<double>(xhat.rows());
        bn_grad.gamma.resize(width);
        bn_grad.beta.resize(width);
        Matrix grad_pre(xhat.rows(), width);
        for (Index j = 0; j < width; ++j) {
          const auto dy = grad.col(j).array();
          const auto xh = xhat.col(j).array();
          bn_grad.beta[j] = dy.sum();
          bn_grad.gamma[j] = (dy * xh).sum();
          const auto dxhat = dy * bn.gamma[j];
          const double sum_dxhat = dxhat.sum();
          const double sum_dxhat_xhat = (dxhat * xh).sum();
          grad_pre.col(j) =
              (inv_std[j] / n) * (n * dxhat - sum_dxhat - xh * sum_dxhat_xhat);
        }
        grad = std::move(grad_pre);
      }
    }
    const Matrix& input = cache.inputs[static_cast<std::size_t>(l)];
    LayerParams& g = grads.layers[static_cast<std::size_t>(l)];
    g.weights = input.transpose() * grad;
    g.bias = grad.colwise().sum();
    if (l > 0) grad = grad * params.layers[static_cast<std::size_t>(l)].weights.transpose();
  }
  return grads;
}

namespace {

void adam_update_tensor(Matrix& theta, const Matrix& g, Matrix& m, Matrix& v,
                        const AdamConfig& c, double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v.array().matrix() + (1.0 - c.beta2) * g.array().square().matrix();
  theta.array() -=
      c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

void adam_update_tensor(Vector& theta, const Vector& g, Vector& m, Vector& v,
                        const AdamConfig& c, double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v.array().matrix() + (1.0 - c.beta2) * g.array().square().matrix();
  theta.array() -=
      c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

NetworkGradients zeros_like(const NetworkGradients& g) {
  NetworkGradients z;
  z.layers.resize(g.layers.size());
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    z.layers[l].weights = Matrix::Zero(g.layers[l].weights.rows(), g.layers[l].weights.cols());
    z.layers[l].bias = Vector::Zero(g.layers[l].bias.size());
  }
  z.norms.resize(g.norms.size());
  for (std::size_t l = 0; l < g.norms.size(); ++l) {
    z.norms[l].gamma = Vector::Zero(g.norms[l].gamma.size());
    z.norms[l].beta = Vector::Zero(g.norms[l].beta.size());
  }
  return z;
}

}  // namespace

void adam_step(NetworkParams& params, const NetworkGradients& grads, AdamState& state,
               const AdamConfig& config) {
  if (!state.initialized) {
    state.first_moment = zeros_like(grads);
    state.second_moment = zeros_like(grads);
    state.step = 0;
    state.initialized = true;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    adam_update_tensor(params.layers[l].weights, grads.layers[l].weights,
                       state.first_moment.layers[l].weights,
                       state.second_moment.layers[l].weights, config, bc1, bc2);
    adam_update_tensor(params.layers[l].bias, grads.layers[l].bias,
                       state.first_moment.layers[l].bias, state.second_moment.layers[l].bias,
                       config, bc1, bc2);
  }
  for (std::size_t l = 0; l < params.norms.size(); ++l) {
    adam_update_tensor(params.norms[l].gamma, grads.norms[l].gamma,
                       state.first_moment.norms[l].gamma, state.second_moment.norms[l].gamma,
                       config, bc1, bc2);
    adam_update_tensor(params.norms[l].beta, grads.norms[l].beta,
                       state.first_moment.norms[l].beta, state.second_moment.norms[l].beta,
                       config, bc1, bc2);
  }
}

double SquaredLoss::loss(const Matrix& outputs, const Matrix& targets, Matrix* grad) const {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    throw std::invalid_argument("SquaredLoss: outputs and targets differ in shape");
  }
  const double n = static_cast<double>(outputs.rows());
  const Matrix diff = outputs - targets;
  if (grad) *grad = (2.0 / n) * diff;
  return diff.array().square().sum() / n;
}

TrainResult train_network(const NetworkSpec& spec, const Matrix& X, const Matrix& Y,
                          const LossFunction& loss, const TrainConfig& config) {
  spec.validate();
  check_input(spec, X);
  if (Y.rows() != X.rows()) throw std::invalid_argument("train_network: X and Y row mismatch");
  if (config.batch_size < 1) throw std::invalid_argument("train_network: batch_size must be positive");
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    throw std::invalid_argument("train_network: validation_fraction must lie in [0, 1)");
  }
  g_fit_count.fetch_add(1, std::memory_order_relaxed);

  const Index n = X.rows();
  // Deterministic validation split.
  Rng split_rng(substream(config.stream, 0));
  std::vector<Index> order = split_rng.permutation(n);
  Index n_val = static_cast<Index>(
      std::floor(config.validation_fraction * static_cast<double>(n) + 0.5));
  const bool early_stop = config.patience > 0 && n_val >= 1 && n_val < n;
  if (!early_stop) n_val = 0;
  std::vector<Index> val_rows(order.begin(), order.begin() + n_val);
  std::vector<Index> train_rows(order.begin() + n_val, order.end());
  const Index n_train = static_cast<Index>(train_rows.size());
  if (n_train < 1) throw std::invalid_argument("train_network: empty training set");

  auto gather = [](const Matrix& src, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = src.row(rows[i]);
    return out;
  };
  const Matrix x_train = gather(X, train_rows);
  const Matrix y_train = gather(Y, train_rows);
  const Matrix x_val = gather(X, val_rows);
  const Matrix y_val = gather(Y, val_rows);

  TrainResult result;
  result.params = init_network(spec, substream(config.stream, 1));
  if (config.epochs == 0) {
    result.best_validation_loss = std::numeric_limits<double>::quiet_NaN();
    return result;
  }

  AdamState adam;
  NetworkParams best = result.params;
  double best_val = std::numeric_limits<double>::infinity();
  Index since_best = 0;
  double last_train_loss = 0.0;
  const bool use_bn = spec.normalization == Normalization::kBatchNorm;

  std::vector<Index> batch_order(static_cast<std::size_t>(n_train));
  for (Index i = 0; i < n_train; ++i) batch_order[static_cast<std::size_t>(i)] = i;

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng(substream(config.stream, 2 + static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(batch_order);
    double epoch_loss = 0.0;
    Index batches = 0;
    for (Index start = 0; start < n_train; start += config.batch_size) {
      const Index size = std::min(config.batch_size, n_train - start);
      // A singleton batch has zero variance under batch norm; skip the
      // trailing remainder in that case.
      if (size == 1 && use_bn && n_train > 1) continue;
      Matrix xb(size, X.cols());
      Matrix yb(size, Y.cols());
      for (Index i = 0; i < size; ++i) {
        const Index r = batch_order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x_train.row(r);
        yb.row(i) = y_train.row(r);
      }
      ForwardCache cache;
      const Matrix out = forward(spec, result.params, xb, Mode::kTrain, &cache);
      Matrix grad_out;
      const double batch_loss = loss.loss(out, yb, &grad_out);
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("train_network: non-finite loss at epoch " + std::to_string(epoch));
      }
      const NetworkGradients grads = backward(spec, result.params, cache, grad_out);
      adam_step(result.params, grads, adam, config.adam);
      epoch_loss += batch_loss;
      ++batches;
    }
    last_train_loss = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;
    result.epochs_run = epoch + 1;

    if (early_stop) {
      const Matrix val_out = forward_eval(spec, result.params, x_val);
      const double val_loss = loss.loss(val_out, y_val, nullptr);
      if (!std::isfinite(val_loss)) {
        throw TrainingError("train_network: non-finite validation loss at epoch " +
                            std::to_string(epoch));
      }
      if (val_loss < best_val - 1e-12) {
        best_val = val_loss;
        best = result.params;
        since_best = 0;
      } else {
        ++since_best;
        if (since_best >= config.patience) break;
      }
    }
  }

  if (early_stop) {
    result.params = best;
    result.best_validation_loss = best_val;
  } else {
    result.best_validation_loss = last_train_loss;
  }
  return result;
}

std::uint64_t fit_count() { return g_fit_count.load(std::memory_order_relaxed); }

void reset_fit_count() { g_fit_count.store(0, std::memory_order_relaxed); }

}  // namespace diet::nn
