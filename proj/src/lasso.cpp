#include "diet/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace diet {
namespace {

constexpr double kDegenerateColumn = 1e-12;  // second-moment threshold

void check_problem(const Matrix& X, const Vector& y, double lambda) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("lasso: X row count and y length differ");
  }
  if (X.rows() < 1 || X.cols() < 1) {
    throw std::invalid_argument("lasso: X must be non-empty");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("lasso: non-finite values in the problem data");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lasso: lambda must be finite and non-negative");
  }
}

/// Stationarity residual of the current solution; the gradient of the
/// smooth part is -(2/N) X^T r.
double kkt_violation(const Matrix& X, const Vector& residual, const Vector& beta, double lambda) {
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  double worst = 0.0;
  for (Index j = 0; j < X.cols(); ++j) {
    const double g = 2.0 * inv_n * X.col(j).dot(residual);
    const double violation =
        beta[j] == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                       : std::abs(g - lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, violation);
  }
  return worst;
}

LassoFit solve_from(const Matrix& X, const Vector& y, double lambda, const LassoOptions& options,
                    Vector beta) {
  const Index n = X.rows();
  const Index p = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector col_sq(p);
  for (Index j = 0; j < p; ++j) {
    col_sq[j] = inv_n * X.col(j).squaredNorm();
    if (col_sq[j] <= kDegenerateColumn) beta[j] = 0.0;
  }
  Vector residual = y - X * beta;

  LassoFit fit;
  fit.lambda = lambda;
  fit.converged = false;
  const double half_lambda = 0.5 * lambda;

  Index sweep = 0;
  while (sweep < options.max_iter) {
    ++sweep;
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (col_sq[j] <= kDegenerateColumn) continue;
      const double old = beta[j];
      const double rho = inv_n * X.col(j).dot(residual) + col_sq[j] * old;
      const double updated = soft_threshold(rho, half_lambda) / col_sq[j];
      const double change = updated - old;
      if (change != 0.0) {
        residual.noalias() -= X.col(j) * change;
        beta[j] = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }
    // A stalled sweep is necessary but not sufficient: certify convergence
    // with the stationarity residual so the documented KKT bound holds.
    if (max_change < options.tolerance &&
        kkt_violation(X, residual, beta, lambda) <= 10.0 * options.tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.coefficients = std::move(beta);
  fit.sweeps = sweep;
  return fit;
}

std::vector<Index> descending_order(const Vector& values) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] > values[b]; });
  return order;
}

}  // namespace

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

LassoFit lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda,
                                  const LassoOptions& options) {
  check_problem(X, y, lambda);
  return solve_from(X, y, lambda, options, Vector::Zero(X.cols()));
}

double lasso_lambda_max(const Matrix& X, const Vector& y) {
  check_problem(X, y, 0.0);
  double worst = 0.0;
  for (Index j = 0; j < X.cols(); ++j) {
    worst = std::max(worst, std::abs(X.col(j).dot(y)));
  }
  return 2.0 * worst / static_cast<double>(X.rows());
}

Vector lasso_lambda_grid(double lambda_max, Index count, double ratio) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    throw std::invalid_argument("lasso_lambda_grid: lambda_max must be positive");
  }
  if (count < 1) throw std::invalid_argument("lasso_lambda_grid: count must be at least 1");
  if (!(ratio > 0.0) || ratio > 1.0) {
    throw std::invalid_argument("lasso_lambda_grid: ratio must be in (0, 1]");
  }
  Vector grid(count);
  if (count == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * ratio);
  for (Index i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = std::exp(log_max + t * (log_min - log_max));
  }
  return grid;
}

LassoFit lasso_cv(const Matrix& X, const Vector& y, const CvSpec& spec, LassoCvInfo* info) {
  check_problem(X, y, 0.0);
  if (spec.folds < 2) throw std::invalid_argument("lasso_cv: need at least two folds");
  if (spec.lambda_grid.size() < 1) throw std::invalid_argument("lasso_cv: empty lambda grid");
  if ((spec.lambda_grid.array() <= 0.0).any()) {
    throw std::invalid_argument("lasso_cv: lambda grid must be positive");
  }
  const Index n = X.rows();
  if (n < spec.folds) throw std::invalid_argument("lasso_cv: fewer rows than folds");

  // Score lambdas from large to small so each fold can warm-start.
  const std::vector<Index> order = descending_order(spec.lambda_grid);
  const Index n_lambda = spec.lambda_grid.size();
  Vector lambdas(n_lambda);
  for (Index i = 0; i < n_lambda; ++i) lambdas[i] = spec.lambda_grid[order[static_cast<std::size_t>(i)]];

  Rng rng(spec.rng);
  const std::vector<Index> shuffled = rng.permutation(n);

  Vector sum_mse = Vector::Zero(n_lambda);
  const LassoOptions options;
  for (Index fold = 0; fold < spec.folds; ++fold) {
    // Contiguous chunk of the shuffled order; sizes differ by at most one.
    const Index lo = fold * n / spec.folds;
    const Index hi = (fold + 1) * n / spec.folds;
    const Index n_test = hi - lo;
    const Index n_train = n - n_test;

    Matrix x_train(n_train, X.cols()), x_test(n_test, X.cols());
    Vector y_train(n_train), y_test(n_test);
    Index it = 0, iv = 0;
    for (Index pos = 0; pos < n; ++pos) {
      const Index row = shuffled[static_cast<std::size_t>(pos)];
      if (pos >= lo && pos < hi) {
        x_test.row(iv) = X.row(row);
        y_test[iv++] = y[row];
      } else {
        x_train.row(it) = X.row(row);
        y_train[it++] = y[row];
      }
    }

    Vector warm = Vector::Zero(X.cols());
    for (Index i = 0; i < n_lambda; ++i) {
      const LassoFit fit = solve_from(x_train, y_train, lambdas[i], options, warm);
      warm = fit.coefficients;
      sum_mse[i] += (y_test - x_test * fit.coefficients).squaredNorm() /
                    static_cast<double>(n_test);
    }
  }

  Vector mean_mse = sum_mse / static_cast<double>(spec.folds);
  Index best = 0;  // scan order is descending lambda, so ties keep the larger
  for (Index i = 1; i < n_lambda; ++i) {
    if (mean_mse[i] < mean_mse[best]) best = i;
  }

  LassoFit fit = lasso_coordinate_descent(X, y, lambdas[best]);
  if (info != nullptr) {
    info->lambdas = lambdas;
    info->mean_mse = mean_mse;
    info->best_index = best;
  }
  return fit;
}

double lasso_objective(const Matrix& X, const Vector& y, const LassoFit& fit) {
  const Vector residual = y - lasso_predict(fit, X);
  return residual.squaredNorm() / static_cast<double>(X.rows()) +
         fit.lambda * fit.coefficients.array().abs().sum();
}

Vector lasso_predict(const LassoFit& fit, const Matrix& X) {
  if (X.cols() != fit.coefficients.size()) {
    throw std::invalid_argument("lasso_predict: column count does not match the fit");
  }
  return (X * fit.coefficients).array() + fit.intercept;
}

LassoFit to_raw_space(const LassoFit& standardized_fit, const Standardization& scaler,
                      double y_mean) {
  const Index p = standardized_fit.coefficients.size();
  if (scaler.stdevs.size() != p) {
    throw std::invalid_argument("to_raw_space: scaler and fit column counts differ");
  }
  LassoFit raw = standardized_fit;
  for (Index j = 0; j < p; ++j) {
    raw.coefficients[j] = scaler.constant[static_cast<std::size_t>(j)]
                              ? 0.0
                              : standardized_fit.coefficients[j] / scaler.stdevs[j];
  }
  raw.intercept = y_mean + standardized_fit.intercept - scaler.means.dot(raw.coefficients);
  return raw;
}

}  // namespace diet
