#pragma once

// Synthetic data-generating processes used by the benchmark experiments.
//
// Every generator is a pure function of its RngStream arguments, and each
// exposes whatever exact structure its construction admits:
//
//   * an exact conditional sampler for p(x | z) (every variant),
//   * oracle conditional CDFs F_{x|z} and F_{y|z} where those laws are
//     Gaussian in closed form,
//   * for variable-selection variants, the true non-null coordinate set and
//     exact per-coordinate samplers x_j | x_{-j}.
//
// Variants that draw random coefficients (β, φ) take a dedicated coefficient
// stream, separate from the data stream, so an experiment can hold the
// ground truth fixed while replicating datasets.
//
// Notation convention: N(a, b) is read with b as the VARIANCE everywhere in
// this module (generators below use magnitudes like 0.1 and 0.01 that only
// make sense on the variance scale).

#include "diet/cdf_models.hpp"
#include "diet/crt.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace diet {

// ---------------------------------------------------------------------------
// Joint Gaussian-mixture covariates (mixture of autoregressive Gaussians)
// ---------------------------------------------------------------------------

/// Mixture of AR(1) Gaussians: component k has mean mu[k]·1 and covariance
/// (Sigma_k)_{ij} = rho[k]^|i-j|.
struct GmmJointSpec {
  Vector weights;   // simplex
  Vector means;     // per-component scalar mean, broadcast across coordinates
  Vector rhos;      // per-component AR(1) correlation, |rho| < 1
  Index dimension = 30;

  Index components() const { return weights.size(); }
  void validate() const;  // throws std::invalid_argument
};

/// Benchmark default: weights (0.4, 0.3, 0.2, 0.1), means (0, 20, 40, 60),
/// correlations (0.7, 0.6, 0.5, 0.4).
GmmJointSpec default_gmm_joint_spec(Index dimension = 30);

/// Draw n rows from the joint mixture.  Each row picks a component by weight
/// and runs the stationary AR(1) recursion, which reproduces the banded
/// covariance exactly.
Matrix sample_gmm_joint(Index n, const GmmJointSpec& spec, Rng& rng);

/// Exact law of x_j | x_{-j} under a GmmJointSpec.  Per component the
/// conditional is Gaussian with Schur-complement mean and variance; the
/// component weights are re-weighted by each component's marginal density of
/// x_{-j}.  The result is a K-component mixture, so the generic mixture-backed
/// cdf / sample / pit_column machinery applies unchanged.
class GmmJointConditional final : public ConditionalCdf {
 public:
  GmmJointConditional(GmmJointSpec spec, Index coordinate);

  GmmParams mixture_at(const Eigen::Ref<const Vector>& others) const override;

  Index coordinate() const { return coordinate_; }

 private:
  struct Component {
    Vector slope;         // Sigma_{-j,-j}^{-1} Sigma_{-j,j}
    Matrix inverse;       // Sigma_{-j,-j}^{-1}
    double stdev = 1.0;   // sqrt of the Schur complement
    double log_norm = 0;  // -(log det Sigma_{-j,-j} + (d-1) log 2π) / 2
  };

  GmmJointSpec spec_;
  Index coordinate_;
  std::vector<Component> components_;
};

std::shared_ptr<const GmmJointConditional> gmm_conditional_cdf(const GmmJointSpec& spec,
                                                               Index coordinate);
std::shared_ptr<const ConditionalSampler> gmm_conditional_sampler(const GmmJointSpec& spec,
                                                                  Index coordinate);

// ---------------------------------------------------------------------------
// Single-hypothesis datasets
// ---------------------------------------------------------------------------

/// One synthetic dataset together with the exact structure the generator
/// knows about itself.
struct DgpSample {
  LabeledDataset data;
  std::shared_ptr<const ConditionalSampler> x_sampler;  // exact p(x|z); never null
  std::shared_ptr<const ConditionalCdf> x_cdf;  // null when F_{x|z} is not a Gaussian mixture
  std::shared_ptr<const ConditionalCdf> y_cdf;  // null when F_{y|z} has no closed form
  Vector coefficients;                          // variant coefficients (empty if none)
};

/// z ~ N(0, 0.1), x|z ~ N(z, 0.1), y|x,z ~ N(x_weight·x + z, 0.1).
/// x_weight = 1 is the benchmark setting; x_weight = 0 makes the null true.
/// Exposes both oracle CDFs (y|z is N((x_weight+1)·z, (x_weight²+1)·0.1)).
DgpSample sample_univariate_gaussian(Index n, double x_weight, RngStream data);

/// Coefficients β_j ~ N(0,1) sorted so |β_1| ≥ |β_2| ≥ ..., z ~ N(0, 0.01·I_d),
/// x|z ~ N(Σ_{j≤10} β_j z_j, 0.25), y = (x + ε + Σ_j β_j z_j)³ with
/// ε ~ N(0, 0.01).  The cube makes F_{y|z} non-mixture, so y_cdf is null.
DgpSample sample_non_gaussian(Index n, Index d, RngStream coefficients, RngStream data);

/// Same β and z laws as sample_non_gaussian; x ~ N(0,1) independent of z and
/// y = 4β_1 z_1 x + 4β_2 z_2 + ε with ε ~ N(0, 0.01).  The oracle y|z is
/// N(4β_2 z_2, 16β_1² z_1² + 0.01).
DgpSample sample_multiplicative(Index n, Index d, RngStream coefficients, RngStream data);

/// x ~ N(0, σ_x²) independent of z, z_j ~ N(0,1), and
/// y|x,z ~ N(β_1 x z_1 + Σ_{j≥2} β_j z_j, 1) with β_j ~ N(0,1) for j ≥ 2.
/// Marginalizing x gives the oracle y|z = N(Σ_{j≥2} β_j z_j, 1 + β_1²σ_x²z_1²):
/// x enters y only through the conditional variance, which defeats any test
/// built on conditional-mean distillation.
DgpSample sample_di_counterexample(Index n, Index d, double sigma_x, double beta1,
                                   RngStream coefficients, RngStream data);

/// x, z ~ Uniform(0,1) independent.  Variant "p1": y = (x + z) mod 1;
/// variant "p2": y = x.  Both are alternatives with identical null-data
/// distributions, but the centered product statistic (x-½)(y-½) has power
/// only under p2 — the pair demonstrates that no single marginal statistic
/// works for every alternative.
DgpSample sample_modular(Index n, bool wraparound, RngStream data);

/// Additive structural model x = sin(z_1) + 0.5·z_2² + e,
/// y = tanh(z_2) + 0.5·z_3 + d, with z ~ N(0, I_3) and (e, d) bivariate
/// normal: stdev noise_stdev each, correlation noise_correlation.  Setting
/// the correlation to 0 makes the null true.  Both oracle CDFs are exact.
struct AdditiveGenericSpec {
  double noise_correlation = 0.5;  // in (-1, 1); 0 -> x ⊥ y | z
  double noise_stdev = 0.5;        // > 0
};
DgpSample sample_additive_generic(Index n, const AdditiveGenericSpec& spec, RngStream data);

// ---------------------------------------------------------------------------
// Monotone-noise structural models
// ---------------------------------------------------------------------------

/// x = f(e, z) and y = g(d, z) where (e, d) is noise independent of z and
/// f, g are strictly monotone in their first argument.  Under this family the
/// information residuals equal monotone transforms of the noise alone, so
/// they are independent of z — the structural assumption behind residual
/// distillation.
struct MonotoneNoiseSpec {
  std::function<double(Rng&)> draw_z;
  std::function<std::pair<double, double>(Rng&)> draw_noise;  // (e, d), jointly
  std::function<double(double, double)> f;                    // x = f(e, z)
  std::function<double(double, double)> g;                    // y = g(d, z)
};

struct MonotoneNoiseSample {
  LabeledDataset data;
  std::shared_ptr<const ConditionalSampler> x_sampler;  // fresh e -> f(e, z)
};

MonotoneNoiseSample sample_monotone_noise(Index n, const MonotoneNoiseSpec& spec, RngStream data);

/// Canonical instance: z ~ Uniform(0.5, 1.5), e, d ~ Exp(1) coupled through a
/// Gaussian copula with the given correlation, x = z·e, y = z·d.  The oracle
/// residual is F_e(x / z), free of z.
MonotoneNoiseSpec multiplicative_exponential_noise(double noise_correlation);

// ---------------------------------------------------------------------------
// Variable-selection datasets
// ---------------------------------------------------------------------------

struct GroundTruth {
  std::vector<Index> non_null;  // ascending coordinate indices
  std::vector<std::shared_ptr<const ConditionalSampler>> samplers;  // exact x_j | x_{-j}
};

struct CvsSample {
  Matrix covariates;
  Vector y;
  GroundTruth truth;
  Vector coefficients;
};

/// Covariates from the joint mixture; y | x ~ N(<x, β>, 1) where β has
/// non_null_count entries equal to 3·Rademacher(½) at coordinates chosen
/// uniformly at random, and zeros elsewhere.
CvsSample sample_mixture_ar_cvs(Index n, const GmmJointSpec& spec, Index non_null_count,
                                RngStream coefficients, RngStream data);

/// y = ε + Σ_{k≤m/4} [φ¹_k x_{4k-3} + φ³_k x_{4k-2} + φ⁴_k x_{4k-3}x_{4k-2}
///                    + φ⁵_k tanh(φ²_k x_{4k-1} + φ⁶_k x_{4k})]
/// with φ¹, φ² ~ N(1,1), φ³..φ⁶ ~ N(2,1) and ε ~ N(0,1); the important set is
/// the first m coordinates.  Requires 4 ≤ m ≤ x.cols() and m divisible by 4.
struct ResponseSample {
  Vector y;
  std::vector<Index> non_null;
};
ResponseSample semi_synthetic_response(const Matrix& x, Index m, RngStream coefficients,
                                       RngStream noise);
ResponseSample semi_synthetic_response(const Matrix& x, Index m, RngStream stream);

/// Mixture covariates with the semi-synthetic response on the first
/// important_count coordinates.
CvsSample sample_semi_synthetic(Index n, const GmmJointSpec& spec, Index important_count,
                                RngStream coefficients, RngStream data);

// ---------------------------------------------------------------------------
// Named-variant dispatch (the surface the experiment runner drives)
// ---------------------------------------------------------------------------

struct DgpSpec {
  std::string variant = "univariate_gaussian";
  Index n = 500;
  Index d = 0;                      // 0 -> per-variant default dimension
  double x_weight = 1.0;            // univariate_gaussian
  double sigma_x = 1.0;             // di_counterexample
  double beta1 = 1.0;               // di_counterexample
  double noise_correlation = 0.5;   // additive_generic, monotone_noise
  Index non_null_count = 6;         // variable-selection variants
  std::uint64_t coefficient_seed = 1;

  void validate() const;  // throws std::invalid_argument naming the bad field
};

/// The ten recognized variant tags, in documentation order.
const std::vector<std::string>& dgp_variants();

/// True for the variable-selection variants (mixture_ar_cvs, semi_synthetic).
bool dgp_is_cvs(const std::string& variant);

/// Draw one dataset for a single-hypothesis variant.  Coefficients derive
/// from spec.coefficient_seed only, so replicates with different data streams
/// share their ground truth.  Throws std::invalid_argument for unknown or
/// variable-selection variants.
DgpSample sample_dgp(const DgpSpec& spec, RngStream data);

/// Draw one dataset for a variable-selection variant.
CvsSample sample_dgp_cvs(const DgpSpec& spec, RngStream data);

}  // namespace diet
