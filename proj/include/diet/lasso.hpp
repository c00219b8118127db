#pragma once

// L1-penalized least squares by cyclic coordinate descent.
//
// Objective, fixed repo-wide:
//
//   (1/N) * || y - X beta ||^2  +  lambda * || beta ||_1
//
// The RSS is normalized by N (not 2N, not unnormalized), which makes
// lambda_max = 2 * max_j |<x_j, y>| / N independent of the data size and
// pins the single-column solution to beta = S(<x,y>/N, lambda/2) for a
// standardized column.  Solvers here expect column-standardized X and
// centered y; use to_raw_space to translate a fit back to the original
// data scale.

#include "diet/data.hpp"
#include "diet/rng.hpp"

#include <cstdint>

namespace diet {

struct LassoOptions {
  double tolerance = 1e-7;  // max coefficient change per sweep
  Index max_iter = 10000;   // full coordinate sweeps
};

struct LassoFit {
  Vector coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  bool converged = true;
  Index sweeps = 0;
};

/// S(v, t) = sign(v) * max(|v| - t, 0).
double soft_threshold(double value, double threshold);

/// Cyclic coordinate descent with soft-thresholding.  Converged means a
/// full sweep changed no coefficient by tolerance or more AND the
/// stationarity residuals hold: |(2/N)<x_j, r>| <= lambda + 10*tol for
/// zero coefficients, = lambda*sign(beta_j) within 10*tol for active ones.
/// Columns with vanishing second moment keep coefficient zero.
LassoFit lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda,
                                  const LassoOptions& options = {});

/// Smallest lambda whose solution is the zero vector: 2*max_j|<x_j,y>|/N.
double lasso_lambda_max(const Matrix& X, const Vector& y);

/// Log-spaced grid from lambda_max down to ratio*lambda_max (descending).
Vector lasso_lambda_grid(double lambda_max, Index count = 30, double ratio = 1e-3);

struct CvSpec {
  Index folds = 5;
  Vector lambda_grid;  // positive reals; see lasso_lambda_grid
  RngStream rng;       // drives the fold shuffle only
};

struct LassoCvInfo {
  Vector lambdas;   // grid in the order scored (descending)
  Vector mean_mse;  // mean held-out squared error per lambda
  Index best_index = 0;
};

/// K-fold cross-validation over the grid: picks the lambda with the
/// smallest mean held-out squared error (ties go to the larger lambda),
/// then refits on all rows.  Deterministic given spec.rng.
LassoFit lasso_cv(const Matrix& X, const Vector& y, const CvSpec& spec,
                  LassoCvInfo* info = nullptr);

/// (1/N) * || y - X beta - intercept ||^2 + lambda * ||beta||_1.
double lasso_objective(const Matrix& X, const Vector& y, const LassoFit& fit);

/// X * coefficients + intercept.
Vector lasso_predict(const LassoFit& fit, const Matrix& X);

/// Translate a fit computed on standardized columns and centered response
/// back to the original data scale:
///   beta_raw_j = beta_j / stdev_j,  intercept = y_mean - <means, beta_raw>.
LassoFit to_raw_space(const LassoFit& standardized_fit, const Standardization& scaler,
                      double y_mean);

}  // namespace diet
