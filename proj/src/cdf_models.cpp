#include "diet/cdf_models.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace diet {

std::vector<GmmParams> ConditionalCdf::mixtures_for_rows(const Matrix& Z) const {
  std::vector<GmmParams> out;
  out.reserve(static_cast<std::size_t>(Z.rows()));
  for (Index i = 0; i < Z.rows(); ++i) out.push_back(mixture_at(Z.row(i)));
  return out;
}

double ConditionalCdf::cdf(double v, const Eigen::Ref<const Vector>& z) const {
  return gmm_cdf(v, mixture_at(z));
}

double ConditionalCdf::log_density(double v, const Eigen::Ref<const Vector>& z) const {
  return gmm_log_density(v, mixture_at(z));
}

double ConditionalCdf::sample(const Eigen::Ref<const Vector>& z, Rng& rng) const {
  return gmm_sample(mixture_at(z), rng);
}

Vector ConditionalCdf::pit_column(const Eigen::Ref<const Vector>& values, const Matrix& Z) const {
  if (values.size() != Z.rows()) {
    throw std::invalid_argument("pit_column: values and conditioning rows differ");
  }
  const std::vector<GmmParams> mixtures = mixtures_for_rows(Z);
  Vector out(values.size());
  for (Index i = 0; i < values.size(); ++i) {
    out[i] = gmm_cdf(values[i], mixtures[static_cast<std::size_t>(i)]);
  }
  return out;
}

OracleGaussianCdf::OracleGaussianCdf(ScalarFn mean_fn, ScalarFn stdev_fn)
    : mean_fn_(std::move(mean_fn)), stdev_fn_(std::move(stdev_fn)) {
  if (!mean_fn_ || !stdev_fn_) {
    throw std::invalid_argument("OracleGaussianCdf: mean and stdev functions required");
  }
}

OracleGaussianCdf::OracleGaussianCdf(ScalarFn mean_fn, double stdev)
    : OracleGaussianCdf(std::move(mean_fn),
                        [stdev](const Eigen::Ref<const Vector>&) { return stdev; }) {
  if (!(stdev > 0.0)) throw std::invalid_argument("OracleGaussianCdf: stdev must be positive");
}

GmmParams OracleGaussianCdf::mixture_at(const Eigen::Ref<const Vector>& z) const {
  GmmParams p;
  p.weights = Vector::Ones(1);
  p.means = Vector::Constant(1, mean_fn_(z));
  p.stdevs = Vector::Constant(1, stdev_fn_(z));
  if (!(p.stdevs[0] > 0.0)) {
    throw std::invalid_argument("OracleGaussianCdf: stdev function returned a non-positive value");
  }
  return p;
}

GmmNllLoss::GmmNllLoss(Index components) : components_(components) {
  if (components < 1) throw std::invalid_argument("GmmNllLoss: components must be positive");
}

// Batch-mean negative log-likelihood of the mixture head.  With logits a,
// means mu, raw scales c (sigma = floor + softplus(c)) and posterior
// responsibilities w_k for a row:
//   dL/da_k  = softmax(a)_k - w_k
//   dL/dmu_k = -w_k (t - mu_k) / sigma_k^2
//   dL/dc_k  = -w_k ((t-mu_k)^2/sigma_k^3 - 1/sigma_k) * sigmoid(c_k)
// all divided by the batch size.
double GmmNllLoss::loss(const Matrix& outputs, const Matrix& targets, Matrix* grad) const {
  const Index k = components_;
  if (outputs.cols() != 3 * k) {
    throw std::invalid_argument("GmmNllLoss: expected " + std::to_string(3 * k) +
                                " output columns");
  }
  if (targets.cols() != 1 || targets.rows() != outputs.rows()) {
    throw std::invalid_argument("GmmNllLoss: targets must be one column matching the batch");
  }
  const Index n = outputs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad) grad->setZero(n, 3 * k);

  double total = 0.0;
  Vector log_terms(k);
  for (Index i = 0; i < n; ++i) {
    const GmmParams mix = gmm_from_raw(outputs.row(i));
    const double t = targets(i, 0);
    for (Index j = 0; j < k; ++j) {
      const double zscore = (t - mix.means[j]) / mix.stdevs[j];
      log_terms[j] = std::log(mix.weights[j]) + normal_log_pdf(zscore) - std::log(mix.stdevs[j]);
    }
    const double log_mix = log_sum_exp(log_terms);
    total -= log_mix;
    if (grad) {
      for (Index j = 0; j < k; ++j) {
        const double w = std::exp(log_terms[j] - log_mix);  // responsibility
        const double diff = t - mix.means[j];
        const double sigma = mix.stdevs[j];
        (*grad)(i, j) = (mix.weights[j] - w) * inv_n;
        (*grad)(i, k + j) = -w * diff / (sigma * sigma) * inv_n;
        const double dsigma = -w * (diff * diff / (sigma * sigma * sigma) - 1.0 / sigma);
        (*grad)(i, 2 * k + j) = dsigma * sigmoid(outputs(i, 2 * k + j)) * inv_n;
      }
    }
  }
  return total * inv_n;
}

MdnModel::MdnModel(nn::NetworkSpec spec, nn::NetworkParams params, Standardization input_scaler,
                   double target_mean, double target_stdev, Index components)
    : spec_(std::move(spec)),
      params_(std::move(params)),
      input_scaler_(std::move(input_scaler)),
      target_mean_(target_mean),
      target_stdev_(target_stdev),
      components_(components) {}

namespace {

GmmParams rescale_mixture(GmmParams mix, double target_mean, double target_stdev) {
  mix.means = (mix.means.array() * target_stdev + target_mean).matrix();
  mix.stdevs *= target_stdev;
  return mix;
}

}  // namespace

GmmParams MdnModel::mixture_at(const Eigen::Ref<const Vector>& z) const {
  Matrix row(1, z.size());
  row.row(0) = z;
  const Matrix scaled = input_scaler_.apply(row);
  const Matrix raw = nn::forward_eval(spec_, params_, scaled);
  return rescale_mixture(gmm_from_raw(raw.row(0)), target_mean_, target_stdev_);
}

std::vector<GmmParams> MdnModel::mixtures_for_rows(const Matrix& Z) const {
  const Matrix scaled = input_scaler_.apply(Z);
  const Matrix raw = nn::forward_eval(spec_, params_, scaled);
  std::vector<GmmParams> out;
  out.reserve(static_cast<std::size_t>(Z.rows()));
  for (Index i = 0; i < Z.rows(); ++i) {
    out.push_back(rescale_mixture(gmm_from_raw(raw.row(i)), target_mean_, target_stdev_));
  }
  return out;
}

namespace {

void hash_doubles(std::uint64_t& h, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof(bits));
    h ^= bits + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h = splitmix64(h);
  }
}

}  // namespace

std::uint64_t MdnModel::parameter_hash() const {
  std::uint64_t h = 0x5DEECE66Dull;
  for (const auto& layer : params_.layers) {
    hash_doubles(h, layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
    hash_doubles(h, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  for (const auto& bn : params_.norms) {
    hash_doubles(h, bn.gamma.data(), static_cast<std::size_t>(bn.gamma.size()));
    hash_doubles(h, bn.beta.data(), static_cast<std::size_t>(bn.beta.size()));
    hash_doubles(h, bn.running_mean.data(), static_cast<std::size_t>(bn.running_mean.size()));
    hash_doubles(h, bn.running_var.data(), static_cast<std::size_t>(bn.running_var.size()));
  }
  hash_doubles(h, &target_mean_, 1);
  hash_doubles(h, &target_stdev_, 1);
  return h;
}

MdnModel fit_mdn(const Matrix& conditioning, const Vector& target, const MdnOptions& options,
                 RngStream stream) {
  if (conditioning.rows() != target.size()) {
    throw std::invalid_argument("fit_mdn: conditioning rows and target length differ");
  }
  if (conditioning.rows() < 2) throw std::invalid_argument("fit_mdn: need at least two rows");

  Standardization input_scaler = standardize_columns(conditioning);

  const double t_mean = target.mean();
  const double t_var =
      (target.array() - t_mean).square().sum() / static_cast<double>(target.size());
  // Keep the transform invertible for (near-)constant targets; the mixture
  // head's stdev floor absorbs the degeneracy.
  const double t_stdev = std::sqrt(t_var) > 1e-12 ? std::sqrt(t_var) : 1.0;
  Matrix scaled_target(target.size(), 1);
  scaled_target.col(0) = (target.array() - t_mean) / t_stdev;

  nn::NetworkSpec spec = nn::make_mlp_spec(conditioning.cols(), options.hidden_width,
                                           options.hidden_layers, 3 * options.components,
                                           nn::Normalization::kBatchNorm);
  nn::TrainConfig train_config = options.train;
  train_config.stream = stream;
  const GmmNllLoss loss(options.components);
  nn::TrainResult fit = nn::train_network(spec, input_scaler.values, scaled_target, loss,
                                          train_config);
  return MdnModel(std::move(spec), std::move(fit.params), std::move(input_scaler), t_mean,
                  t_stdev, options.components);
}

}  // namespace diet
