#pragma once

// Conditional-CDF estimators F(v | z).  Every model here is mixture-backed:
// it maps a conditioning vector z to one-dimensional Gaussian mixture
// parameters, and cdf / log_density / sample derive from that mixture.
//
// Exposing the per-row mixtures (mixtures_for_rows) is what makes
// randomization tests cheap: with the conditioning matrix fixed, a fitted
// model is evaluated through the network once, after which every re-draw of
// the tested variable costs only mixture-CDF arithmetic.

#include "diet/data.hpp"
#include "diet/gmm.hpp"
#include "diet/nn.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace diet {

class ConditionalCdf {
 public:
  virtual ~ConditionalCdf() = default;

  /// Mixture law of the scalar given one conditioning row.
  virtual GmmParams mixture_at(const Eigen::Ref<const Vector>& z) const = 0;

  /// Mixture laws for every row of Z; override when batching is cheaper.
  virtual std::vector<GmmParams> mixtures_for_rows(const Matrix& Z) const;

  double cdf(double v, const Eigen::Ref<const Vector>& z) const;
  double log_density(double v, const Eigen::Ref<const Vector>& z) const;
  double sample(const Eigen::Ref<const Vector>& z, Rng& rng) const;

  /// Probability-integral-transform column: out[i] = cdf(values[i] | Z.row(i)).
  Vector pit_column(const Eigen::Ref<const Vector>& values, const Matrix& Z) const;
};

/// Analytic conditional normal: mean and stdev are caller-supplied functions
/// of z (stdev must be positive for every z it will see).
class OracleGaussianCdf final : public ConditionalCdf {
 public:
  using ScalarFn = std::function<double(const Eigen::Ref<const Vector>&)>;

  OracleGaussianCdf(ScalarFn mean_fn, ScalarFn stdev_fn);
  OracleGaussianCdf(ScalarFn mean_fn, double stdev);

  GmmParams mixture_at(const Eigen::Ref<const Vector>& z) const override;

 private:
  ScalarFn mean_fn_;
  ScalarFn stdev_fn_;
};

/// Negative log-likelihood of a Gaussian-mixture head over raw network
/// outputs (3K columns, see gmm_from_raw), averaged over the batch.
/// Targets are a single column.
class GmmNllLoss final : public nn::LossFunction {
 public:
  explicit GmmNllLoss(Index components);
  double loss(const Matrix& outputs, const Matrix& targets, Matrix* grad) const override;

 private:
  Index components_;
};

struct MdnOptions {
  Index components = 10;
  Index hidden_width = 64;
  Index hidden_layers = 6;
  nn::TrainConfig train;  // learning rate defaults to 1e-3 (Adam)
};

/// Mixture density network: a batch-norm MLP whose 3K-wide head encodes a
/// Gaussian mixture.  Inputs and the target are standardized internally with
/// training statistics; mixtures are mapped back to the raw target scale.
class MdnModel final : public ConditionalCdf {
 public:
  MdnModel(nn::NetworkSpec spec, nn::NetworkParams params, Standardization input_scaler,
           double target_mean, double target_stdev, Index components);

  GmmParams mixture_at(const Eigen::Ref<const Vector>& z) const override;
  std::vector<GmmParams> mixtures_for_rows(const Matrix& Z) const override;

  Index components() const { return components_; }
  const nn::NetworkParams& network_params() const { return params_; }

  /// Stable content hash of all parameters (used to certify that fitted
  /// models are reused unchanged across evaluations).
  std::uint64_t parameter_hash() const;

 private:
  nn::NetworkSpec spec_;
  nn::NetworkParams params_;
  Standardization input_scaler_;
  double target_mean_;
  double target_stdev_;
  Index components_;
};

/// Fit an MDN for target | conditioning by maximum likelihood.
MdnModel fit_mdn(const Matrix& conditioning, const Vector& target, const MdnOptions& options,
                 RngStream stream);

}  // namespace diet
