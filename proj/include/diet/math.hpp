#pragma once

// Scalar special functions and numerically careful helpers shared across the
// library.  Everything here is deterministic, pure arithmetic: no global
// state, no locale, no libm functions whose results differ between platforms
// beyond the usual 1-ulp slack of exp/log/sqrt.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace diet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)
inline constexpr double kSqrtTwo = 1.4142135623730950488;

/// Error function evaluated with the rational Chebyshev approximations of
/// Cody (1969), the same scheme used by SPECFUN.  Absolute error is below
/// 1e-15 everywhere, comfortably inside the 1e-12 budget the normal CDF
/// needs.
double erf_approx(double x);

/// Complementary error function, same approximation family as erf_approx.
double erfc_approx(double x);

/// Standard normal CDF: Phi(v) = erfc(-v / sqrt(2)) / 2.
double normal_cdf(double v);

/// Normal CDF with explicit mean and standard deviation (stdev > 0).
double normal_cdf(double v, double mean, double stdev);

/// Standard normal density.
double normal_pdf(double v);

/// Standard normal log-density.
double normal_log_pdf(double v);

/// Inverse standard normal CDF for p in (0, 1), computed with Wichura's
/// PPND16 rational approximation (relative error around 1e-15).  Throws
/// std::invalid_argument outside (0, 1).
double normal_quantile(double p);

/// log(sum_i exp(v_i)) with the usual max shift.  Returns -infinity for an
/// empty vector or when every entry is -infinity.
double log_sum_exp(const Eigen::Ref<const Vector>& v);

/// log(exp(a) + exp(b)) without overflow; tolerates -infinity inputs.
double log_add_exp(double a, double b);

/// softplus(x) = log(1 + exp(x)), evaluated without overflow.
double softplus(double x);

/// Derivative of softplus: the logistic sigmoid.
double sigmoid(double x);

/// log(Gamma(x)) for x > 0.  Thin wrapper over std::lgamma (single-threaded
/// determinism is all we need; lgamma_r is not required).
double log_gamma(double x);

/// log(n!) via log_gamma.
double log_factorial(std::int64_t n);

}  // namespace diet
