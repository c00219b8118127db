#pragma once

// Minimal feed-forward network engine: affine layers, optional batch
// normalization, ReLU hidden activations, analytic backprop, Adam, and a
// deterministic training loop with early stopping.
//
// Shape conventions: batches are row-major sample matrices (N x d); an
// affine layer with weights W (d_in x d_out) maps X to X * W + 1 b^T.
// Hidden layers apply affine -> batch norm -> activation; the final layer is
// affine only.
//
// Batch normalization follows the usual two-mode contract: training mode
// normalizes with batch statistics (population variance, divisor N) and
// updates running statistics with momentum 0.9; eval mode uses the stored
// running statistics and never mutates them.

#include "diet/rng.hpp"

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace diet::nn {

enum class Activation { kRelu, kIdentity };
enum class Normalization { kNone, kBatchNorm };
enum class Mode { kTrain, kEval };

struct NetworkSpec {
  std::vector<Index> layer_widths;  // input, hidden..., output
  Activation activation = Activation::kRelu;
  Normalization normalization = Normalization::kBatchNorm;

  Index n_layers() const { return static_cast<Index>(layer_widths.size()) - 1; }
  Index n_hidden() const { return n_layers() - 1; }
  Index input_width() const { return layer_widths.front(); }
  Index output_width() const { return layer_widths.back(); }
  void validate() const;
};

/// Convenience builder: `hidden_layers` hidden layers of equal width.
NetworkSpec make_mlp_spec(Index input_width, Index hidden_width, Index hidden_layers,
                          Index output_width,
                          Normalization normalization = Normalization::kBatchNorm);

struct LayerParams {
  Matrix weights;  // d_in x d_out
  Vector bias;     // d_out
};

struct BatchNormParams {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
};

struct NetworkParams {
  std::vector<LayerParams> layers;      // one per affine layer
  std::vector<BatchNormParams> norms;   // one per hidden layer when enabled
};

/// He-uniform fan-in initialization: weights ~ U(-sqrt(6/fan_in),
/// +sqrt(6/fan_in)), biases zero, gamma 1, beta 0, running stats (0, 1).
NetworkParams init_network(const NetworkSpec& spec, RngStream stream);

/// Activations and batch statistics recorded by a train-mode forward pass;
/// required by backward().
struct ForwardCache {
  bool valid = false;
  std::vector<Matrix> inputs;      // activation entering each affine layer
  std::vector<Matrix> bn_xhat;     // normalized pre-activation per hidden layer
  std::vector<Vector> bn_inv_std;  // 1/sqrt(var + eps) per hidden layer
  std::vector<Matrix> relu_input;  // value entering the activation
};

/// Forward pass.  Train mode updates batch-norm running statistics on
/// `params` and fills `cache` when given; eval mode leaves params untouched.
Matrix forward(const NetworkSpec& spec, NetworkParams& params, const Matrix& X, Mode mode,
               ForwardCache* cache = nullptr);

/// Eval-mode forward over const parameters.
Matrix forward_eval(const NetworkSpec& spec, const NetworkParams& params, const Matrix& X);

struct NetworkGradients {
  std::vector<LayerParams> layers;  // same shapes as the parameters
  std::vector<BatchNormParams> norms;  // gamma/beta slots used; running stats unused
};

/// Backprop through the cached train-mode forward pass.  `grad_output` is
/// dLoss/dOutput for the batch.  Throws std::logic_error when the cache does
/// not come from a matching train-mode forward.
NetworkGradients backward(const NetworkSpec& spec, const NetworkParams& params,
                          const ForwardCache& cache, const Matrix& grad_output);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  NetworkGradients first_moment;
  NetworkGradients second_moment;
  long step = 0;
  bool initialized = false;
};

/// One Adam update with bias correction:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
void adam_step(NetworkParams& params, const NetworkGradients& grads, AdamState& state,
               const AdamConfig& config);

/// Differentiable scalar objective over a batch of network outputs.
class LossFunction {
 public:
  virtual ~LossFunction() = default;
  /// Returns the batch-mean loss; when `grad` is non-null it receives
  /// dLoss/dOutputs (same shape as outputs).
  virtual double loss(const Matrix& outputs, const Matrix& targets, Matrix* grad) const = 0;
};

/// Mean over rows of the squared error summed across output columns.
class SquaredLoss final : public LossFunction {
 public:
  double loss(const Matrix& outputs, const Matrix& targets, Matrix* grad) const override;
};

class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& message) : std::runtime_error(message) {}
};

struct TrainConfig {
  Index epochs = 100;
  Index batch_size = 100;
  AdamConfig adam;
  double validation_fraction = 0.1;  // held out for early stopping
  Index patience = 20;               // epochs without improvement; <= 0 disables
  RngStream stream;                  // drives init, the split, and shuffles
};

struct TrainResult {
  NetworkParams params;
  double best_validation_loss = 0.0;  // final training loss when no validation
  Index epochs_run = 0;
};

/// Deterministic minibatch training: Adam on shuffled batches, per-epoch
/// eval-mode validation, early stopping with best-parameter restore.
/// epochs == 0 returns the freshly initialized parameters untouched.
/// Non-finite losses raise TrainingError.
TrainResult train_network(const NetworkSpec& spec, const Matrix& X, const Matrix& Y,
                          const LossFunction& loss, const TrainConfig& config);

/// Number of train_network invocations since process start (or the last
/// reset).  Used to certify how many model fits a procedure performs.
std::uint64_t fit_count();
void reset_fit_count();

}  // namespace diet::nn
