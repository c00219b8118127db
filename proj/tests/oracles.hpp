#pragma once

// Test-only oracles, written independently of the library implementations
// they check: slow-but-simple series, enumerations, and samplers.

#include "diet/math.hpp"

#include <functional>
#include <vector>

namespace oracle {

/// erf via the stable confluent hypergeometric series
///   erf(x) = 2 x exp(-x^2)/sqrt(pi) * sum_k (2x^2)^k / (1*3*...*(2k+1)),
/// accumulated in long double.  All terms are positive, so there is no
/// cancellation; for |x| > 7 the result is +-1 to well below 1e-16.
long double erf_series(long double x);

/// Standard normal CDF from the series oracle.
long double normal_cdf_series(long double v);

/// Central finite-difference gradient of f at x.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double h = 1e-5);

/// Regularized lower incomplete gamma P(a, x) (series + continued fraction).
double gamma_p(double a, double x);

/// Chi-square CDF with k degrees of freedom.
double chi_square_cdf(double x, int k);

/// One-sample Kolmogorov-Smirnov distance against Uniform[0, 1].
double ks_distance_uniform(std::vector<double> samples);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

/// Expected mutual information under the permutation model by exhaustive
/// enumeration of all n! pairings (n <= 8 is practical).  Labels are given
/// as two vectors; returns the average plug-in MI in nats.
double expected_mi_enumeration(const std::vector<int>& a, const std::vector<int>& b);

/// Monte-Carlo version of the same expectation with `permutations` shuffled
/// pairings, using a self-contained linear congruential shuffle (independent
/// of the library RNG).  Also returns the MC standard error via *se.
double expected_mi_permutation_mc(const std::vector<int>& a, const std::vector<int>& b,
                                  int permutations, unsigned long long seed, double* se);

/// Plug-in MI (nats) of two label vectors, written directly from the
/// definition (test-side duplicate kept independent of the library).
double plug_in_mi(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace oracle
