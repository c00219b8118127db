#include "diet/gmm.hpp"

#include <cmath>
#include <stdexcept>

namespace diet {

void GmmParams::validate() const {
  const Index k = weights.size();
  if (k < 1) throw std::invalid_argument("GmmParams: at least one component required");
  if (means.size() != k || stdevs.size() != k) {
    throw std::invalid_argument("GmmParams: weights, means, stdevs must share length");
  }
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("GmmParams: negative weight");
    if (!(stdevs[i] > 0.0)) throw std::invalid_argument("GmmParams: stdevs must be positive");
    if (!std::isfinite(means[i])) throw std::invalid_argument("GmmParams: non-finite mean");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("GmmParams: weights must sum to 1");
  }
}

double gmm_cdf(double v, const GmmParams& params) {
  double acc = 0.0;
  for (Index k = 0; k < params.components(); ++k) {
    acc += params.weights[k] * normal_cdf((v - params.means[k]) / params.stdevs[k]);
  }
  // Weight rounding can push the sum a hair outside [0, 1].
  return acc < 0.0 ? 0.0 : (acc > 1.0 ? 1.0 : acc);
}

double gmm_log_density(double v, const GmmParams& params) {
  Vector terms(params.components());
  for (Index k = 0; k < params.components(); ++k) {
    if (params.weights[k] <= 0.0) {
      terms[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double zscore = (v - params.means[k]) / params.stdevs[k];
    terms[k] = std::log(params.weights[k]) + normal_log_pdf(zscore) - std::log(params.stdevs[k]);
  }
  return log_sum_exp(terms);
}

double gmm_sample(const GmmParams& params, Rng& rng) {
  const Index k = rng.categorical(params.weights);
  return rng.normal(params.means[k], params.stdevs[k]);
}

GmmParams gmm_from_raw(const Eigen::Ref<const Vector>& raw) {
  if (raw.size() % 3 != 0 || raw.size() == 0) {
    throw std::invalid_argument("gmm_from_raw: raw vector length must be a positive multiple of 3");
  }
  const Index k = raw.size() / 3;
  GmmParams params;
  params.weights.resize(k);
  params.means = raw.segment(k, k);
  params.stdevs.resize(k);
  // softmax over the first K entries, max-shifted
  const double m = raw.head(k).maxCoeff();
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    params.weights[i] = std::exp(raw[i] - m);
    total += params.weights[i];
  }
  params.weights /= total;
  for (Index i = 0; i < k; ++i) {
    params.stdevs[i] = kGmmStdevFloor + softplus(raw[2 * k + i]);
  }
  return params;
}

}  // namespace diet
