#include "diet/crt.hpp"

#include "diet/nn.hpp"

#include <stdexcept>
#include <utility>

namespace diet {
namespace {

using stream_layout::kFirstNull;
using stream_layout::kPrimaryFit;
using stream_layout::kSecondaryFit;
using stream_layout::kTrainingDraw;

void check_config(const CrtConfig& config) {
  if (config.num_nulls < 1) {
    throw std::invalid_argument("crt: num_nulls must be at least 1");
  }
}

/// CDF of each row's observation under that row's cached mixture.
Vector residual_column(const std::vector<GmmParams>& mixtures,
                       const Eigen::Ref<const Vector>& values) {
  const Index n = values.size();
  if (static_cast<Index>(mixtures.size()) != n) {
    throw std::invalid_argument("crt: cached mixture count does not match the column length");
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    out[i] = gmm_cdf(values[i], mixtures[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

Vector ConditionalSampler::sample_column(const Matrix& Z, Rng& rng) const {
  Vector out(Z.rows());
  for (Index i = 0; i < Z.rows(); ++i) {
    out[i] = sample(Z.row(i).transpose(), rng);
  }
  return out;
}

CdfConditionalSampler::CdfConditionalSampler(std::shared_ptr<const ConditionalCdf> cdf)
    : cdf_(std::move(cdf)) {
  if (cdf_ == nullptr) {
    throw std::invalid_argument("CdfConditionalSampler: null model");
  }
}

double CdfConditionalSampler::sample(const Eigen::Ref<const Vector>& z, Rng& rng) const {
  return cdf_->sample(z, rng);
}

NullDataset make_null_dataset(const LabeledDataset& d, const ConditionalSampler& sampler,
                              RngStream stream) {
  d.validate();
  Rng rng(stream);
  NullDataset out{d, stream};
  out.data.x = sampler.sample_column(d.z, rng);
  return out;
}

double crt_pvalue(double test_statistic, const Eigen::Ref<const Vector>& null_statistics) {
  const Index m = null_statistics.size();
  if (m < 1) {
    throw std::invalid_argument("crt_pvalue: needs at least one null statistic");
  }
  Index at_least = 0;
  for (Index i = 0; i < m; ++i) {
    if (test_statistic <= null_statistics[i]) {
      ++at_least;
    }
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(m + 1);
}

DietModels fit_diet_models(const Matrix& z, const Vector& y, const ConditionalSampler& sampler,
                           const DietConfig& config, RngStream stream) {
  if (z.rows() != y.size()) {
    throw std::invalid_argument("fit_diet_models: z and y row counts differ");
  }
  if (z.cols() < 1) {
    throw std::invalid_argument("fit_diet_models: z needs at least one column");
  }

  Rng train_rng(substream(stream, kTrainingDraw));
  const Vector synthetic_x = sampler.sample_column(z, train_rng);

  DietModels models;
  models.x_given_z = std::make_shared<MdnModel>(
      fit_mdn(z, synthetic_x, config.mdn, substream(stream, kPrimaryFit)));
  models.y_given_z = std::make_shared<MdnModel>(
      fit_mdn(z, y, config.mdn, substream(stream, kSecondaryFit)));
  return models;
}

CrtResult diet_test_with_models(const LabeledDataset& d, const ConditionalSampler& sampler,
                                const ConditionalCdf& x_given_z, const ConditionalCdf& y_given_z,
                                const DependenceStatistic& statistic, const CrtConfig& config) {
  d.validate();
  check_config(config);
  const std::uint64_t fits_before = nn::fit_count();

  // One batched mixture evaluation per model; every statistic evaluation
  // below is plain arithmetic on these cached parameters.
  const std::vector<GmmParams> x_mixtures = x_given_z.mixtures_for_rows(d.z);
  const std::vector<GmmParams> y_mixtures = y_given_z.mixtures_for_rows(d.z);

  ResidualPairs pairs;
  pairs.delta = residual_column(y_mixtures, d.y);
  pairs.eps = residual_column(x_mixtures, d.x);

  CrtResult result;
  result.test_statistic = statistic.evaluate(pairs);
  result.null_statistics.resize(config.num_nulls);
  for (Index m = 0; m < config.num_nulls; ++m) {
    Rng null_rng(substream(config.stream, kFirstNull + static_cast<std::uint64_t>(m)));
    const Vector null_x = sampler.sample_column(d.z, null_rng);
    pairs.eps = residual_column(x_mixtures, null_x);
    result.null_statistics[m] = statistic.evaluate(pairs);
  }
  result.p_value = crt_pvalue(result.test_statistic, result.null_statistics);
  result.model_fits = static_cast<Index>(nn::fit_count() - fits_before);
  return result;
}

CrtResult diet_test(const LabeledDataset& d, const ConditionalSampler& sampler,
                    const DietConfig& config) {
  d.validate();
  check_config(config.crt);
  const std::uint64_t fits_before = nn::fit_count();

  const DietModels models = fit_diet_models(d.z, d.y, sampler, config, config.crt.stream);
  const auto statistic = make_dependence_statistic(config.statistic, config.bins);
  CrtResult result =
      diet_test_with_models(d, sampler, *models.x_given_z, *models.y_given_z, *statistic,
                            config.crt);
  result.model_fits = static_cast<Index>(nn::fit_count() - fits_before);
  return result;
}

FunctionStatistic::FunctionStatistic(std::function<double(const LabeledDataset&)> fn)
    : fn_(std::move(fn)) {
  if (!fn_) {
    throw std::invalid_argument("FunctionStatistic: empty function");
  }
}

double FunctionStatistic::evaluate(const LabeledDataset& d) const { return fn_(d); }

CrtResult generic_crt(const LabeledDataset& d, const ConditionalSampler& sampler,
                      const DatasetStatistic& statistic, const CrtConfig& config) {
  d.validate();
  check_config(config);
  const std::uint64_t fits_before = nn::fit_count();

  CrtResult result;
  result.test_statistic = statistic.evaluate(d);
  result.null_statistics.resize(config.num_nulls);
  for (Index m = 0; m < config.num_nulls; ++m) {
    const NullDataset null_data = make_null_dataset(
        d, sampler, substream(config.stream, kFirstNull + static_cast<std::uint64_t>(m)));
    result.null_statistics[m] = statistic.evaluate(null_data.data);
  }
  result.p_value = crt_pvalue(result.test_statistic, result.null_statistics);
  result.model_fits = static_cast<Index>(nn::fit_count() - fits_before);
  return result;
}

}  // namespace diet
