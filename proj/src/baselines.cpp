#include "diet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace diet {
namespace {

using stream_layout::kFirstNull;
using stream_layout::kPrimaryFit;
using stream_layout::kSecondaryFit;
using stream_layout::kTrainingDraw;

constexpr std::uint64_t kThetaCv = 0;
constexpr std::uint64_t kEtaCv = 1;
constexpr std::uint64_t kInteractionCv = 2;
constexpr std::uint64_t kHalfOneNulls = 10;
constexpr std::uint64_t kHalfTwoNulls = 11;

void check_nulls(const CrtConfig& config) {
  if (config.num_nulls < 1) {
    throw std::invalid_argument("crt: num_nulls must be at least 1");
  }
}

LassoFit zero_fit(Index p, double intercept) {
  LassoFit fit;
  fit.coefficients = Vector::Zero(p);
  fit.intercept = intercept;
  return fit;
}

/// Map a standardized-space fit's coefficients to the raw feature scale
/// (constant columns contribute nothing).
Vector unscale_coefficients(const LassoFit& fit, const Standardization& scaler) {
  Vector out(fit.coefficients.size());
  for (Index j = 0; j < out.size(); ++j) {
    out[j] = scaler.constant[static_cast<std::size_t>(j)] ? 0.0
                                                          : fit.coefficients[j] / scaler.stdevs[j];
  }
  return out;
}

/// [x z] feature block used by the holdout regressor.
Matrix holdout_features(const Eigen::Ref<const Vector>& x, const Matrix& z) {
  Matrix f(z.rows(), z.cols() + 1);
  f.col(0) = x;
  f.rightCols(z.cols()) = z;
  return f;
}

double squared_loss_statistic(const NetRegressor& model, const Matrix& features,
                              const Vector& response) {
  const Vector predicted = model.predict(features);
  return (response - predicted).squaredNorm() / static_cast<double>(response.size());
}

double log_prob_loss_statistic(const MdnModel& model, const Matrix& features,
                               const Vector& response) {
  const std::vector<GmmParams> mixtures = model.mixtures_for_rows(features);
  double total = 0.0;
  for (Index i = 0; i < response.size(); ++i) {
    total -= gmm_log_density(response[i], mixtures[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(response.size());
}

/// One half of the holdout test: fit on fit_half, score on eval_half.
/// The statistic is a loss (low under dependence), so the p-value counts
/// nulls whose loss is at or below the observed one.
double holdout_half(const LabeledDataset& fit_half, const LabeledDataset& eval_half,
                    const ConditionalSampler& sampler, const CrtConfig& config,
                    const HrtConfig& hrt_config, RngStream fit_stream, RngStream null_root,
                    double* statistic) {
  const Matrix train_features = holdout_features(fit_half.x, fit_half.z);

  std::optional<NetRegressor> regressor;
  std::optional<MdnModel> density;
  std::function<double(const Matrix&)> loss_of;
  if (hrt_config.loss == HrtLoss::kLogProb) {
    density.emplace(fit_mdn(train_features, fit_half.y, hrt_config.density, fit_stream));
    loss_of = [&](const Matrix& f) { return log_prob_loss_statistic(*density, f, eval_half.y); };
  } else {
    regressor.emplace(
        fit_net_regressor(train_features, fit_half.y, hrt_config.regressor, fit_stream));
    loss_of = [&](const Matrix& f) { return squared_loss_statistic(*regressor, f, eval_half.y); };
  }

  const double observed = loss_of(holdout_features(eval_half.x, eval_half.z));
  Index at_or_below = 0;
  for (Index m = 0; m < config.num_nulls; ++m) {
    Rng rng(substream(null_root, kFirstNull + static_cast<std::uint64_t>(m)));
    const Vector null_x = sampler.sample_column(eval_half.z, rng);
    const double null_loss = loss_of(holdout_features(null_x, eval_half.z));
    if (observed >= null_loss) ++at_or_below;
  }
  *statistic = observed;
  return static_cast<double>(1 + at_or_below) / static_cast<double>(config.num_nulls + 1);
}

}  // namespace

LassoFit cv_lasso_raw(const Matrix& X, const Vector& y, CvSpec spec, LassoFit* standardized) {
  const Standardization scaler = standardize_columns(X);
  const double y_mean = y.mean();
  const Vector centered = y.array() - y_mean;

  if (spec.lambda_grid.size() == 0) {
    const double lambda_max = lasso_lambda_max(scaler.values, centered);
    if (!(lambda_max > 0.0)) {
      if (standardized != nullptr) *standardized = zero_fit(X.cols(), 0.0);
      return zero_fit(X.cols(), y_mean);
    }
    spec.lambda_grid = lasso_lambda_grid(lambda_max);
  }

  const LassoFit fit = lasso_cv(scaler.values, centered, spec);
  if (standardized != nullptr) *standardized = fit;
  return to_raw_space(fit, scaler, y_mean);
}

double d0_statistic(const LabeledDataset& d, const LassoFit& theta, const LassoFit& eta,
                    bool* degenerate) {
  const Vector r_y = d.y - lasso_predict(theta, d.z);
  const Vector r_x = d.x - lasso_predict(eta, d.z);
  const double denominator = r_x.squaredNorm();
  if (degenerate != nullptr) *degenerate = denominator <= 1e-12;
  if (denominator <= 1e-12) return 0.0;
  const double ratio = r_y.dot(r_x) / denominator;
  return ratio * ratio;
}

CrtResult d0_crt_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                      const CrtConfig& config, const CvSpec& cv) {
  d.validate();
  check_nulls(config);

  CvSpec theta_cv = cv;
  theta_cv.rng = substream(cv.rng, kThetaCv);
  const LassoFit theta = cv_lasso_raw(d.z, d.y, theta_cv);

  Rng train_rng(substream(config.stream, kTrainingDraw));
  const Vector synthetic_x = sampler.sample_column(d.z, train_rng);
  CvSpec eta_cv = cv;
  eta_cv.rng = substream(cv.rng, kEtaCv);
  const LassoFit eta = cv_lasso_raw(d.z, synthetic_x, eta_cv);

  CrtResult result;
  result.test_statistic = d0_statistic(d, theta, eta);
  result.null_statistics.resize(config.num_nulls);
  LabeledDataset null_data = d;
  for (Index m = 0; m < config.num_nulls; ++m) {
    Rng rng(substream(config.stream, kFirstNull + static_cast<std::uint64_t>(m)));
    null_data.x = sampler.sample_column(d.z, rng);
    result.null_statistics[m] = d0_statistic(null_data, theta, eta);
  }
  result.p_value = crt_pvalue(result.test_statistic, result.null_statistics);
  return result;
}

std::vector<Index> select_top_k(const LassoFit& theta, Index k) {
  const Index p = theta.coefficients.size();
  if (k < 1 || k > p) {
    throw std::invalid_argument("select_top_k: k must lie in [1, p]");
  }
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(theta.coefficients[a]) > std::abs(theta.coefficients[b]);
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

Vector di_default_lambda_grid() {
  Vector grid(7);
  grid << 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3;
  return grid;
}

double di_statistic(const LabeledDataset& d, const LassoFit& theta, const LassoFit& eta,
                    const std::vector<Index>& top_k, const CvSpec& interaction_cv) {
  if (top_k.empty()) throw std::invalid_argument("di_statistic: empty top-k set");
  for (const Index j : top_k) {
    if (j < 0 || j >= d.z.cols()) throw std::invalid_argument("di_statistic: top-k index out of range");
  }
  const auto k = static_cast<Index>(top_k.size());

  const Vector r_y = d.y - lasso_predict(theta, d.z);
  const Vector r_x = d.x - lasso_predict(eta, d.z);

  Matrix features(d.n_rows(), 1 + k);
  features.col(0) = r_x;
  for (Index i = 0; i < k; ++i) {
    features.col(1 + i) = r_x.cwiseProduct(d.z.col(top_k[static_cast<std::size_t>(i)]));
  }

  const Standardization scaler = standardize_columns(features);
  const Vector centered = r_y.array() - r_y.mean();

  CvSpec cv = interaction_cv;
  if (cv.lambda_grid.size() == 0) cv.lambda_grid = di_default_lambda_grid();
  const LassoFit fit = lasso_cv(scaler.values, centered, cv);
  const Vector beta = unscale_coefficients(fit, scaler);

  const double main_term = beta[0] * beta[0];
  const double interaction_term = beta.tail(k).squaredNorm() / static_cast<double>(k);
  return main_term + interaction_term;
}

CrtResult di_crt_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                      const CrtConfig& config, const CvSpec& cv, const DiConfig& di_config) {
  d.validate();
  check_nulls(config);
  const Index p = d.z.cols();

  CvSpec theta_cv = cv;
  theta_cv.rng = substream(cv.rng, kThetaCv);
  LassoFit theta_standardized;
  const LassoFit theta = cv_lasso_raw(d.z, d.y, theta_cv, &theta_standardized);

  Rng train_rng(substream(config.stream, kTrainingDraw));
  const Vector synthetic_x = sampler.sample_column(d.z, train_rng);
  CvSpec eta_cv = cv;
  eta_cv.rng = substream(cv.rng, kEtaCv);
  const LassoFit eta = cv_lasso_raw(d.z, synthetic_x, eta_cv);

  Index k = di_config.k;
  if (k <= 0) k = static_cast<Index>(std::ceil(2.0 * std::log(static_cast<double>(p))));
  k = std::max<Index>(1, std::min(k, p));
  // Magnitude ranking happens on the standardized scale so that column
  // units cannot reorder the selection.
  const std::vector<Index> top_k = select_top_k(theta_standardized, k);

  CvSpec interaction_cv = cv;
  interaction_cv.lambda_grid = di_config.interaction_lambda_grid.size() > 0
                                   ? di_config.interaction_lambda_grid
                                   : di_default_lambda_grid();
  // One shared fold partition for the observed and all null refits.
  interaction_cv.rng = substream(cv.rng, kInteractionCv);

  CrtResult result;
  result.test_statistic = di_statistic(d, theta, eta, top_k, interaction_cv);
  result.null_statistics.resize(config.num_nulls);
  LabeledDataset null_data = d;
  for (Index m = 0; m < config.num_nulls; ++m) {
    Rng rng(substream(config.stream, kFirstNull + static_cast<std::uint64_t>(m)));
    null_data.x = sampler.sample_column(d.z, rng);
    result.null_statistics[m] = di_statistic(null_data, theta, eta, top_k, interaction_cv);
  }
  result.p_value = crt_pvalue(result.test_statistic, result.null_statistics);
  return result;
}

Vector NetRegressor::predict(const Matrix& X) const {
  const Matrix outputs = nn::forward_eval(spec, params, input_scaler.apply(X));
  return outputs.col(0) * target_stdev + Vector::Constant(X.rows(), target_mean);
}

NetRegressor fit_net_regressor(const Matrix& X, const Vector& y,
                               const NetRegressorOptions& options, RngStream stream) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("fit_net_regressor: X rows and y length differ");
  }
  if (X.rows() < 2) throw std::invalid_argument("fit_net_regressor: need at least two rows");

  NetRegressor model;
  model.input_scaler = standardize_columns(X);
  model.target_mean = y.mean();
  const double variance =
      (y.array() - model.target_mean).square().sum() / static_cast<double>(y.size());
  model.target_stdev = std::sqrt(variance) > 1e-12 ? std::sqrt(variance) : 1.0;

  Matrix target(y.size(), 1);
  target.col(0) = (y.array() - model.target_mean) / model.target_stdev;

  model.spec = nn::make_mlp_spec(X.cols(), options.hidden_width, options.hidden_layers, 1,
                                 nn::Normalization::kBatchNorm);
  nn::TrainConfig train_config = options.train;
  train_config.stream = stream;
  nn::TrainResult fit =
      nn::train_network(model.spec, model.input_scaler.values, target, nn::SquaredLoss(),
                        train_config);
  model.params = std::move(fit.params);
  return model;
}

HrtResult hrt_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                   const CrtConfig& config, const HrtConfig& hrt_config) {
  d.validate();
  check_nulls(config);
  if (d.n_rows() < 4) throw std::invalid_argument("hrt_test: need at least four rows");

  const std::uint64_t fits_before = nn::fit_count();
  const TrainTestSplit split = split_train_test(d, hrt_config.split);
  if (split.train.n_rows() < 2 || split.test.n_rows() < 2) {
    throw std::invalid_argument("hrt_test: split leaves fewer than two rows in a half");
  }

  HrtResult result;
  result.p_half_one = holdout_half(split.train, split.test, sampler, config, hrt_config,
                                   substream(config.stream, kPrimaryFit),
                                   substream(config.stream, kHalfOneNulls),
                                   &result.statistic_half_one);
  result.p_half_two = holdout_half(split.test, split.train, sampler, config, hrt_config,
                                   substream(config.stream, kSecondaryFit),
                                   substream(config.stream, kHalfTwoNulls),
                                   &result.statistic_half_two);
  result.p_value = std::min(1.0, 2.0 * std::min(result.p_half_one, result.p_half_two));
  result.model_fits = static_cast<Index>(nn::fit_count() - fits_before);
  return result;
}

}  // namespace diet
