#pragma once

// One-dimensional Gaussian mixtures: the distribution family produced by
// every conditional-CDF model in this library (network heads, analytic
// oracles, and exact conditionals of joint mixtures).

#include "diet/rng.hpp"

namespace diet {

struct GmmParams {
  Vector weights;  // non-negative, sums to 1
  Vector means;
  Vector stdevs;   // strictly positive

  Index components() const { return weights.size(); }
  void validate() const;
};

/// Mixture CDF: sum_k w_k Phi((v - mu_k) / sigma_k).  Exact 0/1 limits at
/// -inf/+inf follow from the normal CDF implementation.
double gmm_cdf(double v, const GmmParams& params);

/// Mixture log-density via log-sum-exp over component log densities.
double gmm_log_density(double v, const GmmParams& params);

/// Draw: pick a component by weight, then sample its normal.
double gmm_sample(const GmmParams& params, Rng& rng);

/// Map a raw 3K-vector of network head outputs to mixture parameters:
/// weights = softmax(raw[0..K)), means = raw[K..2K) unchanged,
/// stdevs = 1e-3 + softplus(raw[2K..3K)).
GmmParams gmm_from_raw(const Eigen::Ref<const Vector>& raw);

/// Minimum standard deviation produced by the raw-output link.
inline constexpr double kGmmStdevFloor = 1e-3;

}  // namespace diet
