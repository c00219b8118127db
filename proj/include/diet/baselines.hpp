#pragma once

// Distilled and holdout randomization tests used as comparison methods:
//
//   d0:  residual-correlation statistic from two lasso distillations,
//        T = ( sum r_y r_x / sum r_x^2 )^2 with r_y = y - z theta,
//        r_x = x - z eta.
//   dI:  d0's distillations plus an interaction lasso of the response
//        residual on (x - z eta) and its products with the top-k columns
//        of z; T = beta^2 + (1/k) sum_j beta_j^2.  The interaction lasso
//        is refit for every dataset (observed and each null).
//   hrt: holdout test; fit a predictive network on one half, compare the
//        held-out loss of the observed data against null redraws, swap the
//        halves, and combine p = min(1, 2 min(p1, p2)).
//
// Training-data hygiene mirrors the residual test: eta (the z -> x
// distillation) trains on synthetic sampler draws, never the observed x
// column, and the hrt regressor only sees the training half.
//
// Stream usage: theta's CV folds use substream(cv.rng, 0), eta's
// substream(cv.rng, 1), the dI interaction-lasso folds substream(cv.rng, 2)
// (one shared fold partition for comparability across datasets).  Null
// draws follow stream_layout (substream(cfg.stream, kFirstNull + m)); the
// hrt derives per-half stream roots with ids 10 and 11.

#include "diet/cdf_models.hpp"
#include "diet/crt.hpp"
#include "diet/lasso.hpp"

#include <vector>

namespace diet {

/// Cross-validated lasso on raw columns: standardizes internally, then maps
/// the fit back to the original scale.  An empty spec.lambda_grid means
/// "use lasso_lambda_grid(lasso_lambda_max(...)) of the standardized data".
LassoFit cv_lasso_raw(const Matrix& X, const Vector& y, CvSpec spec,
                      LassoFit* standardized = nullptr);

/// T = ( sum r_y r_x / sum r_x^2 )^2; 0 when the denominator vanishes
/// (<= 1e-12; *degenerate set when provided).  theta and eta are raw-space
/// fits (see cv_lasso_raw / to_raw_space).
double d0_statistic(const LabeledDataset& d, const LassoFit& theta, const LassoFit& eta,
                    bool* degenerate = nullptr);

/// Full d0 randomization test: theta fit on (z, y), eta fit on (z, fresh
/// sampler draws), statistic evaluated with both fits frozen.
CrtResult d0_crt_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                      const CrtConfig& config, const CvSpec& cv);

/// Indices of the k largest |coefficients|, ties broken by the smaller
/// index; returned ascending.
std::vector<Index> select_top_k(const LassoFit& theta, Index k);

struct DiConfig {
  Index k = 0;                      // 0 means ceil(2 ln p), clamped to [1, p]
  Vector interaction_lambda_grid;   // empty means di_default_lambda_grid()
};

/// {1e-3, 1e-2, 1e-1, 1, 1e1, 1e2, 1e3}.
Vector di_default_lambda_grid();

/// Interaction statistic: a cross-validated lasso of the response residual
/// on the standardized features (x - z eta) and (x - z eta) * z_j for
/// j in top_k; coefficients are mapped back to the unstandardized feature
/// scale before T = beta^2 + (1/k) sum_j beta_j^2.
double di_statistic(const LabeledDataset& d, const LassoFit& theta, const LassoFit& eta,
                    const std::vector<Index>& top_k, const CvSpec& interaction_cv);

/// Full dI randomization test: theta, eta, and the top-k set are fitted
/// once; the interaction lasso is refit for the observed dataset and every
/// null dataset.
CrtResult di_crt_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                      const CrtConfig& config, const CvSpec& cv, const DiConfig& di_config);

struct NetRegressorOptions {
  Index hidden_width = 64;
  Index hidden_layers = 6;  // fully-connected, batch norm, ReLU
  nn::TrainConfig train;
};

/// Point-prediction network trained with squared loss; inputs and target
/// are standardized internally, predictions returned on the raw scale.
struct NetRegressor {
  nn::NetworkSpec spec;
  nn::NetworkParams params;
  Standardization input_scaler;
  double target_mean = 0.0;
  double target_stdev = 1.0;

  Vector predict(const Matrix& X) const;
};

NetRegressor fit_net_regressor(const Matrix& X, const Vector& y,
                               const NetRegressorOptions& options, RngStream stream);

enum class HrtLoss {
  kSquared,  // mean squared prediction error (continuous response)
  kLogProb,  // mean negative log density under a fitted mixture network
};

struct HrtConfig {
  SplitSpec split;                  // train_fraction 0.5
  NetRegressorOptions regressor;    // used by kSquared
  MdnOptions density;               // used by kLogProb
  HrtLoss loss = HrtLoss::kSquared;
};

struct HrtResult {
  double p_value = 1.0;  // min(1, 2 min(p1, p2))
  double p_half_one = 1.0;
  double p_half_two = 1.0;
  double statistic_half_one = 0.0;
  double statistic_half_two = 0.0;
  Index model_fits = 0;
};

/// Holdout randomization test.  The statistic is a held-out loss, which is
/// LOW under dependence, so each half's p-value counts nulls whose loss is
/// at or below the observed one: p = (1 + #{T_obs >= T_null}) / (M + 1).
HrtResult hrt_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                   const CrtConfig& config, const HrtConfig& hrt_config);

}  // namespace diet
