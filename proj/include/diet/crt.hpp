#pragma once

// Conditional randomization testing of x independent-of y given z.
//
// The p-value compares the statistic on the observed data against M
// statistics on null datasets in which x is replaced by fresh draws from
// p(x | z):
//
//   p = (1 + #{ m : T(observed) <= T(null_m) }) / (M + 1)
//
// Ties count toward the sum, so p is super-uniform on the grid
// {k / (M+1) : k = 1..M+1} for any statistic when the null draws are
// exchangeable with x.
//
// diet_test runs the residual form: fit one conditional CDF for
// x given z (trained on synthetic draws only, never the observed x column)
// and one for y given z, transform data to information residuals
// eps_i = F(x_i | z_i), delta_i = F(y_i | z_i), and use a marginal
// dependence measure of the residual pairs as the statistic.  Both fitted
// models are frozen and reused for the observed data and all M null
// datasets: after the two fits, each evaluation costs only mixture-CDF
// arithmetic, which is what makes large M cheap.
//
// Stream layout inside diet_test (relative to CrtConfig::stream):
//   substream(s, 0)      synthetic training column for the x-model
//   substream(s, 1)      x-model fit (init, shuffles, validation split)
//   substream(s, 2)      y-model fit
//   substream(s, 3 + m)  null draw m, m = 0..M-1
// generic_crt uses substream(s, 3 + m) for null draw m as well.

#include "diet/cdf_models.hpp"
#include "diet/dependence.hpp"

#include <functional>
#include <memory>

namespace diet {

/// Shared substream layout for every randomization test in the library, so
/// that null draw m is reproducible from the test's stream alone.
namespace stream_layout {
constexpr std::uint64_t kTrainingDraw = 0;  // synthetic column for model fitting
constexpr std::uint64_t kPrimaryFit = 1;    // first fitted model
constexpr std::uint64_t kSecondaryFit = 2;  // second fitted model
constexpr std::uint64_t kFirstNull = 3;     // null draw m uses kFirstNull + m
}  // namespace stream_layout

/// Draws from the conditional law of the tested variable given z.
class ConditionalSampler {
 public:
  virtual ~ConditionalSampler() = default;
  virtual double sample(const Eigen::Ref<const Vector>& z, Rng& rng) const = 0;

  /// One draw per row of Z, in row order.
  Vector sample_column(const Matrix& Z, Rng& rng) const;
};

/// Adapter: any conditional CDF model samples via its mixture law.
class CdfConditionalSampler final : public ConditionalSampler {
 public:
  explicit CdfConditionalSampler(std::shared_ptr<const ConditionalCdf> cdf);
  double sample(const Eigen::Ref<const Vector>& z, Rng& rng) const override;

 private:
  std::shared_ptr<const ConditionalCdf> cdf_;
};

struct NullDataset {
  LabeledDataset data;
  RngStream source;  // the stream that produced the synthetic x column
};

/// Copy of `d` with x replaced by fresh conditional draws.
NullDataset make_null_dataset(const LabeledDataset& d, const ConditionalSampler& sampler,
                              RngStream stream);

/// Randomization p-value with ties counted toward the null side.
double crt_pvalue(double test_statistic, const Eigen::Ref<const Vector>& null_statistics);

struct CrtConfig {
  Index num_nulls = 100;
  RngStream stream;
};

struct CrtResult {
  double p_value = 1.0;
  double test_statistic = 0.0;
  Vector null_statistics;
  Index model_fits = 0;  // network fits performed while running the test
};

struct DietConfig {
  MdnOptions mdn;
  std::string statistic = "ami";
  int bins = 10;  // residual discretization (ami) or grid (lr_mi)
  CrtConfig crt;
};

/// The two conditional-CDF models of the residual test.
struct DietModels {
  std::shared_ptr<const MdnModel> x_given_z;
  std::shared_ptr<const MdnModel> y_given_z;
};

/// Fit the residual models.  The x-model trains on (synthetic draw, z)
/// pairs from the sampler; the observed x column never enters this stage,
/// which the signature makes structural (there is no x argument).
DietModels fit_diet_models(const Matrix& z, const Vector& y, const ConditionalSampler& sampler,
                           const DietConfig& config, RngStream stream);

/// Residual-form randomization test with caller-supplied fitted models
/// (network fits or analytic oracles).  The models are treated as frozen:
/// per-row mixtures are computed once and reused for the observed data and
/// every null draw.
CrtResult diet_test_with_models(const LabeledDataset& d, const ConditionalSampler& sampler,
                                const ConditionalCdf& x_given_z, const ConditionalCdf& y_given_z,
                                const DependenceStatistic& statistic, const CrtConfig& config);

/// Full residual test: fit the two models, then run diet_test_with_models.
CrtResult diet_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                    const DietConfig& config);

/// Arbitrary statistic of a whole dataset; generic_crt re-evaluates it from
/// scratch on every null dataset (the expensive baseline pattern).
class DatasetStatistic {
 public:
  virtual ~DatasetStatistic() = default;
  virtual double evaluate(const LabeledDataset& d) const = 0;
};

/// Wrap a plain function as a DatasetStatistic.
class FunctionStatistic final : public DatasetStatistic {
 public:
  explicit FunctionStatistic(std::function<double(const LabeledDataset&)> fn);
  double evaluate(const LabeledDataset& d) const override;

 private:
  std::function<double(const LabeledDataset&)> fn_;
};

/// Plain conditional randomization test: evaluate the statistic on the
/// observed dataset and on each of M null datasets.
CrtResult generic_crt(const LabeledDataset& d, const ConditionalSampler& sampler,
                      const DatasetStatistic& statistic, const CrtConfig& config);

}  // namespace diet
