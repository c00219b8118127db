#include "diet/dgp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace diet {

namespace {

// Coefficient draws come from a stream word reserved for them, so a
// coefficient seed can never collide with a replicate data stream.
constexpr std::uint64_t kCoefficientStreamWord = 0x636f6566;  // "coef"

constexpr std::uint64_t kCovariateDraw = 0;
constexpr std::uint64_t kResponseDraw = 1;

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument(message); }

/// Conditional sampler backed by a plain draw function.
class FunctionSampler final : public ConditionalSampler {
 public:
  using DrawFn = std::function<double(const Eigen::Ref<const Vector>&, Rng&)>;
  explicit FunctionSampler(DrawFn fn) : fn_(std::move(fn)) {}

  double sample(const Eigen::Ref<const Vector>& z, Rng& rng) const override {
    return fn_(z, rng);
  }

 private:
  DrawFn fn_;
};

std::shared_ptr<const ConditionalSampler> sampler_of(std::shared_ptr<const ConditionalCdf> cdf) {
  return std::make_shared<CdfConditionalSampler>(std::move(cdf));
}

/// N(0,1) coefficient draws sorted by descending magnitude (used by the
/// non-Gaussian and multiplicative benchmarks).
Vector sorted_gaussian_coefficients(Index d, RngStream stream) {
  Rng rng(stream);
  Vector beta = rng.normal_vector(d);
  std::sort(beta.data(), beta.data() + beta.size(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  return beta;
}

RngStream coefficient_stream(const DgpSpec& spec) {
  return RngStream{spec.coefficient_seed, kCoefficientStreamWord};
}

}  // namespace

// ---------------------------------------------------------------------------
// Joint Gaussian-mixture covariates
// ---------------------------------------------------------------------------

void GmmJointSpec::validate() const {
  if (dimension < 1) fail("GmmJointSpec: dimension must be at least 1");
  const Index k = weights.size();
  if (k < 1) fail("GmmJointSpec: at least one component required");
  if (means.size() != k || rhos.size() != k) {
    fail("GmmJointSpec: weights, means, and rhos must have equal length");
  }
  if ((weights.array() < 0.0).any()) fail("GmmJointSpec: negative component weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9) fail("GmmJointSpec: weights must sum to 1");
  if ((rhos.array().abs() >= 1.0).any()) fail("GmmJointSpec: correlations must satisfy |rho| < 1");
}

GmmJointSpec default_gmm_joint_spec(Index dimension) {
  GmmJointSpec spec;
  spec.weights = Vector{{0.4, 0.3, 0.2, 0.1}};
  spec.means = Vector{{0.0, 20.0, 40.0, 60.0}};
  spec.rhos = Vector{{0.7, 0.6, 0.5, 0.4}};
  spec.dimension = dimension;
  return spec;
}

Matrix sample_gmm_joint(Index n, const GmmJointSpec& spec, Rng& rng) {
  spec.validate();
  if (n < 1) fail("sample_gmm_joint: n must be at least 1");
  const Index d = spec.dimension;
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) {
    const Index k = rng.categorical(spec.weights);
    const double mu = spec.means[k];
    const double rho = spec.rhos[k];
    const double innovation = std::sqrt(1.0 - rho * rho);
    // Stationary AR(1) recursion: cov(x_a, x_b) = rho^|a-b| exactly.
    out(i, 0) = mu + rng.normal();
    for (Index j = 1; j < d; ++j) {
      out(i, j) = mu + rho * (out(i, j - 1) - mu) + innovation * rng.normal();
    }
  }
  return out;
}

GmmJointConditional::GmmJointConditional(GmmJointSpec spec, Index coordinate)
    : spec_(std::move(spec)), coordinate_(coordinate) {
  spec_.validate();
  const Index d = spec_.dimension;
  if (coordinate < 0 || coordinate >= d) fail("GmmJointConditional: coordinate out of range");

  components_.resize(static_cast<std::size_t>(spec_.components()));
  if (d == 1) return;  // conditioning set empty: conditional equals the marginal

  std::vector<Index> others;
  for (Index j = 0; j < d; ++j) {
    if (j != coordinate) others.push_back(j);
  }
  const Index q = d - 1;

  for (Index k = 0; k < spec_.components(); ++k) {
    const double rho = spec_.rhos[k];
    Matrix sigma_oo(q, q);
    Vector sigma_oj(q);
    for (Index a = 0; a < q; ++a) {
      sigma_oj[a] = std::pow(rho, std::abs(others[static_cast<std::size_t>(a)] - coordinate));
      for (Index b = 0; b < q; ++b) {
        sigma_oo(a, b) = std::pow(rho, std::abs(others[static_cast<std::size_t>(a)] -
                                                others[static_cast<std::size_t>(b)]));
      }
    }
    const Eigen::LDLT<Matrix> solver(sigma_oo);
    if (solver.info() != Eigen::Success || (solver.vectorD().array() <= 0.0).any()) {
      fail("GmmJointConditional: component covariance is not positive definite");
    }
    Component c;
    c.slope = solver.solve(sigma_oj);
    c.inverse = solver.solve(Matrix::Identity(q, q));
    const double schur = 1.0 - sigma_oj.dot(c.slope);
    c.stdev = std::sqrt(std::max(schur, 1e-300));
    const double log_det = solver.vectorD().array().log().sum();
    c.log_norm = -0.5 * (log_det + static_cast<double>(q) * kLogTwoPi);
    components_[static_cast<std::size_t>(k)] = std::move(c);
  }
}

GmmParams GmmJointConditional::mixture_at(const Eigen::Ref<const Vector>& others) const {
  const Index k_count = spec_.components();
  GmmParams params;
  params.weights.resize(k_count);
  params.means.resize(k_count);
  params.stdevs.resize(k_count);

  if (spec_.dimension == 1) {
    if (others.size() != 0) fail("GmmJointConditional: expected an empty conditioning vector");
    params.weights = spec_.weights;
    params.means = spec_.means;
    params.stdevs.setOnes();
    return params;
  }

  if (others.size() != spec_.dimension - 1) {
    fail("GmmJointConditional: conditioning vector has the wrong length");
  }

  Vector log_weights(k_count);
  for (Index k = 0; k < k_count; ++k) {
    const Component& c = components_[static_cast<std::size_t>(k)];
    const Vector diff = others.array() - spec_.means[k];
    const double quadratic = diff.dot(c.inverse * diff);
    log_weights[k] = std::log(spec_.weights[k]) + c.log_norm - 0.5 * quadratic;
    params.means[k] = spec_.means[k] + c.slope.dot(diff);
    params.stdevs[k] = c.stdev;
  }
  const double normalizer = log_sum_exp(log_weights);
  params.weights = (log_weights.array() - normalizer).exp();
  return params;
}

std::shared_ptr<const GmmJointConditional> gmm_conditional_cdf(const GmmJointSpec& spec,
                                                               Index coordinate) {
  return std::make_shared<GmmJointConditional>(spec, coordinate);
}

std::shared_ptr<const ConditionalSampler> gmm_conditional_sampler(const GmmJointSpec& spec,
                                                                  Index coordinate) {
  return sampler_of(gmm_conditional_cdf(spec, coordinate));
}

// ---------------------------------------------------------------------------
// Single-hypothesis datasets
// ---------------------------------------------------------------------------

DgpSample sample_univariate_gaussian(Index n, double x_weight, RngStream data) {
  if (n < 1) fail("sample_univariate_gaussian: n must be at least 1");
  const double sd = std::sqrt(0.1);
  Rng rng(data);

  DgpSample out;
  out.data.z = sd * rng.normal_matrix(n, 1);
  out.data.x = out.data.z.col(0) + sd * rng.normal_vector(n);
  out.data.y = x_weight * out.data.x + out.data.z.col(0) + sd * rng.normal_vector(n);

  auto x_cdf = std::make_shared<OracleGaussianCdf>(
      [](const Eigen::Ref<const Vector>& z) { return z[0]; }, sd);
  const double y_sd = std::sqrt((x_weight * x_weight + 1.0) * 0.1);
  out.x_cdf = x_cdf;
  out.y_cdf = std::make_shared<OracleGaussianCdf>(
      [x_weight](const Eigen::Ref<const Vector>& z) { return (x_weight + 1.0) * z[0]; }, y_sd);
  out.x_sampler = sampler_of(x_cdf);
  return out;
}

DgpSample sample_non_gaussian(Index n, Index d, RngStream coefficients, RngStream data) {
  if (n < 1) fail("sample_non_gaussian: n must be at least 1");
  if (d < 1) fail("sample_non_gaussian: d must be at least 1");
  const Vector beta = sorted_gaussian_coefficients(d, coefficients);
  const Index lead = std::min<Index>(10, d);
  const Vector beta_lead = beta.head(lead);

  Rng rng(data);
  DgpSample out;
  out.data.z = 0.1 * rng.normal_matrix(n, d);
  const Vector x_mean = out.data.z.leftCols(lead) * beta_lead;
  out.data.x = x_mean + 0.5 * rng.normal_vector(n);
  const Vector noise = 0.1 * rng.normal_vector(n);
  out.data.y = (out.data.x + noise + out.data.z * beta).array().cube();

  auto x_cdf = std::make_shared<OracleGaussianCdf>(
      [beta_lead, lead](const Eigen::Ref<const Vector>& z) {
        return z.head(lead).dot(beta_lead);
      },
      0.5);
  out.x_cdf = x_cdf;
  out.x_sampler = sampler_of(x_cdf);
  out.coefficients = beta;
  return out;
}

DgpSample sample_multiplicative(Index n, Index d, RngStream coefficients, RngStream data) {
  if (n < 1) fail("sample_multiplicative: n must be at least 1");
  if (d < 2) fail("sample_multiplicative: d must be at least 2");
  const Vector beta = sorted_gaussian_coefficients(d, coefficients);
  const double b1 = beta[0];
  const double b2 = beta[1];

  Rng rng(data);
  DgpSample out;
  out.data.z = 0.1 * rng.normal_matrix(n, d);
  out.data.x = rng.normal_vector(n);
  const Vector noise = 0.1 * rng.normal_vector(n);
  out.data.y = 4.0 * b1 * out.data.z.col(0).cwiseProduct(out.data.x) +
               4.0 * b2 * out.data.z.col(1) + noise;

  auto x_cdf = std::make_shared<OracleGaussianCdf>(
      [](const Eigen::Ref<const Vector>&) { return 0.0; }, 1.0);
  out.x_cdf = x_cdf;
  out.y_cdf = std::make_shared<OracleGaussianCdf>(
      [b2](const Eigen::Ref<const Vector>& z) { return 4.0 * b2 * z[1]; },
      [b1](const Eigen::Ref<const Vector>& z) {
        return std::sqrt(16.0 * b1 * b1 * z[0] * z[0] + 0.01);
      });
  out.x_sampler = sampler_of(x_cdf);
  out.coefficients = beta;
  return out;
}

DgpSample sample_di_counterexample(Index n, Index d, double sigma_x, double beta1,
                                   RngStream coefficients, RngStream data) {
  if (n < 1) fail("sample_di_counterexample: n must be at least 1");
  if (d < 2) fail("sample_di_counterexample: d must be at least 2");
  if (!(sigma_x > 0.0)) fail("sample_di_counterexample: sigma_x must be positive");

  Vector beta(d);
  beta[0] = beta1;
  beta.tail(d - 1) = Rng(coefficients).normal_vector(d - 1);
  const Vector beta_rest = beta.tail(d - 1);

  Rng rng(data);
  DgpSample out;
  out.data.z = rng.normal_matrix(n, d);
  out.data.x = sigma_x * rng.normal_vector(n);
  out.data.y = beta1 * out.data.x.cwiseProduct(out.data.z.col(0)) +
               out.data.z.rightCols(d - 1) * beta_rest + rng.normal_vector(n);

  auto x_cdf = std::make_shared<OracleGaussianCdf>(
      [](const Eigen::Ref<const Vector>&) { return 0.0; }, sigma_x);
  out.x_cdf = x_cdf;
  // Marginalizing x: y | z is Gaussian with x contributing variance only.
  out.y_cdf = std::make_shared<OracleGaussianCdf>(
      [beta_rest, d](const Eigen::Ref<const Vector>& z) {
        return z.tail(d - 1).dot(beta_rest);
      },
      [beta1, sigma_x](const Eigen::Ref<const Vector>& z) {
        return std::sqrt(1.0 + beta1 * beta1 * sigma_x * sigma_x * z[0] * z[0]);
      });
  out.x_sampler = sampler_of(x_cdf);
  out.coefficients = beta;
  return out;
}

DgpSample sample_modular(Index n, bool wraparound, RngStream data) {
  if (n < 1) fail("sample_modular: n must be at least 1");
  Rng rng(data);
  DgpSample out;
  out.data.z.resize(n, 1);
  out.data.x.resize(n);
  out.data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    out.data.z(i, 0) = rng.uniform();
    out.data.x[i] = rng.uniform();
    out.data.y[i] = wraparound ? std::fmod(out.data.x[i] + out.data.z(i, 0), 1.0)
                               : out.data.x[i];
  }
  out.x_sampler = std::make_shared<FunctionSampler>(
      [](const Eigen::Ref<const Vector>&, Rng& r) { return r.uniform(); });
  return out;
}

DgpSample sample_additive_generic(Index n, const AdditiveGenericSpec& spec, RngStream data) {
  if (n < 1) fail("sample_additive_generic: n must be at least 1");
  if (std::abs(spec.noise_correlation) > 1.0) {
    fail("sample_additive_generic: noise_correlation must lie in [-1, 1]");
  }
  if (!(spec.noise_stdev > 0.0)) fail("sample_additive_generic: noise_stdev must be positive");

  const auto f = [](const Eigen::Ref<const Vector>& z) { return std::sin(z[0]) + 0.5 * z[1] * z[1]; };
  const auto g = [](const Eigen::Ref<const Vector>& z) { return std::tanh(z[1]) + 0.5 * z[2]; };
  const double rho = spec.noise_correlation;
  const double tangent = std::sqrt(1.0 - rho * rho);

  Rng rng(data);
  DgpSample out;
  out.data.z = rng.normal_matrix(n, 3);
  const Vector e = spec.noise_stdev * rng.normal_vector(n);
  const Vector d_noise = rho * e + tangent * spec.noise_stdev * rng.normal_vector(n);
  out.data.x.resize(n);
  out.data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    out.data.x[i] = f(out.data.z.row(i)) + e[i];
    out.data.y[i] = g(out.data.z.row(i)) + d_noise[i];
  }

  auto x_cdf = std::make_shared<OracleGaussianCdf>(f, spec.noise_stdev);
  out.x_cdf = x_cdf;
  out.y_cdf = std::make_shared<OracleGaussianCdf>(g, spec.noise_stdev);
  out.x_sampler = sampler_of(x_cdf);
  return out;
}

// ---------------------------------------------------------------------------
// Monotone-noise structural models
// ---------------------------------------------------------------------------

MonotoneNoiseSample sample_monotone_noise(Index n, const MonotoneNoiseSpec& spec, RngStream data) {
  if (n < 1) fail("sample_monotone_noise: n must be at least 1");
  if (!spec.draw_z || !spec.draw_noise || !spec.f || !spec.g) {
    fail("sample_monotone_noise: every spec function must be set");
  }

  Rng rng(data);
  MonotoneNoiseSample out;
  out.data.z.resize(n, 1);
  out.data.x.resize(n);
  out.data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double z = spec.draw_z(rng);
    const auto [e, d] = spec.draw_noise(rng);
    out.data.z(i, 0) = z;
    out.data.x[i] = spec.f(e, z);
    out.data.y[i] = spec.g(d, z);
  }
  out.x_sampler = std::make_shared<FunctionSampler>(
      [draw_noise = spec.draw_noise, f = spec.f](const Eigen::Ref<const Vector>& z, Rng& r) {
        return f(draw_noise(r).first, z[0]);
      });
  return out;
}

MonotoneNoiseSpec multiplicative_exponential_noise(double noise_correlation) {
  if (std::abs(noise_correlation) > 1.0) {
    fail("multiplicative_exponential_noise: correlation must lie in [-1, 1]");
  }
  const double rho = noise_correlation;
  const double tangent = std::sqrt(1.0 - rho * rho);

  MonotoneNoiseSpec spec;
  spec.draw_z = [](Rng& rng) { return rng.uniform(0.5, 1.5); };
  // Exp(1) marginals coupled through a Gaussian copula.
  spec.draw_noise = [rho, tangent](Rng& rng) {
    const double a = rng.normal();
    const double b = rho * a + tangent * rng.normal();
    const double e = -std::log1p(-normal_cdf(a));
    const double d = -std::log1p(-normal_cdf(b));
    return std::make_pair(e, d);
  };
  spec.f = [](double e, double z) { return z * e; };
  spec.g = [](double d, double z) { return z * d; };
  return spec;
}

// ---------------------------------------------------------------------------
// Variable-selection datasets
// ---------------------------------------------------------------------------

CvsSample sample_mixture_ar_cvs(Index n, const GmmJointSpec& spec, Index non_null_count,
                                RngStream coefficients, RngStream data) {
  spec.validate();
  const Index d = spec.dimension;
  if (non_null_count < 0 || non_null_count > d) {
    fail("sample_mixture_ar_cvs: non_null_count must lie in [0, dimension]");
  }

  Rng coefficient_rng(coefficients);
  const std::vector<Index> order = coefficient_rng.permutation(d);
  std::vector<Index> non_null(order.begin(), order.begin() + non_null_count);
  std::sort(non_null.begin(), non_null.end());
  Vector beta = Vector::Zero(d);
  for (const Index j : non_null) beta[j] = 3.0 * coefficient_rng.rademacher();

  Rng rng(data);
  CvsSample out;
  out.covariates = sample_gmm_joint(n, spec, rng);
  out.y = out.covariates * beta + rng.normal_vector(n);
  out.truth.non_null = std::move(non_null);
  out.truth.samplers.reserve(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) out.truth.samplers.push_back(gmm_conditional_sampler(spec, j));
  out.coefficients = std::move(beta);
  return out;
}

ResponseSample semi_synthetic_response(const Matrix& x, Index m, RngStream coefficients,
                                       RngStream noise) {
  if (m < 4 || m % 4 != 0) fail("semi_synthetic_response: m must be a positive multiple of 4");
  if (m > x.cols()) fail("semi_synthetic_response: m exceeds the number of covariates");

  const Index blocks = m / 4;
  Rng coefficient_rng(coefficients);
  Rng noise_rng(noise);

  ResponseSample out;
  out.y = noise_rng.normal_vector(x.rows());
  for (Index b = 0; b < blocks; ++b) {
    const double phi1 = 1.0 + coefficient_rng.normal();
    const double phi2 = 1.0 + coefficient_rng.normal();
    const double phi3 = 2.0 + coefficient_rng.normal();
    const double phi4 = 2.0 + coefficient_rng.normal();
    const double phi5 = 2.0 + coefficient_rng.normal();
    const double phi6 = 2.0 + coefficient_rng.normal();
    const auto c0 = x.col(4 * b);
    const auto c1 = x.col(4 * b + 1);
    const auto c2 = x.col(4 * b + 2);
    const auto c3 = x.col(4 * b + 3);
    out.y += phi1 * c0 + phi3 * c1 + phi4 * c0.cwiseProduct(c1) +
             phi5 * (phi2 * c2 + phi6 * c3).array().tanh().matrix();
  }
  out.non_null.resize(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) out.non_null[static_cast<std::size_t>(j)] = j;
  return out;
}

ResponseSample semi_synthetic_response(const Matrix& x, Index m, RngStream stream) {
  return semi_synthetic_response(x, m, substream(stream, 0), substream(stream, 1));
}

CvsSample sample_semi_synthetic(Index n, const GmmJointSpec& spec, Index important_count,
                                RngStream coefficients, RngStream data) {
  spec.validate();
  Rng covariate_rng(substream(data, kCovariateDraw));
  CvsSample out;
  out.covariates = sample_gmm_joint(n, spec, covariate_rng);
  ResponseSample response =
      semi_synthetic_response(out.covariates, important_count, coefficients,
                              substream(data, kResponseDraw));
  out.y = std::move(response.y);
  out.truth.non_null = std::move(response.non_null);
  out.truth.samplers.reserve(static_cast<std::size_t>(spec.dimension));
  for (Index j = 0; j < spec.dimension; ++j) {
    out.truth.samplers.push_back(gmm_conditional_sampler(spec, j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Named-variant dispatch
// ---------------------------------------------------------------------------

const std::vector<std::string>& dgp_variants() {
  static const std::vector<std::string> names = {
      "univariate_gaussian", "non_gaussian_cubic", "multiplicative", "mixture_ar_cvs",
      "semi_synthetic",      "di_counterexample",  "modular_p1",     "modular_p2",
      "monotone_noise",      "additive_generic"};
  return names;
}

bool dgp_is_cvs(const std::string& variant) {
  return variant == "mixture_ar_cvs" || variant == "semi_synthetic";
}

namespace {

bool known_variant(const std::string& variant) {
  const auto& names = dgp_variants();
  return std::find(names.begin(), names.end(), variant) != names.end();
}

Index default_dimension(const std::string& variant) {
  if (variant == "non_gaussian_cubic" || variant == "multiplicative") return 100;
  if (variant == "di_counterexample") return 20;
  if (variant == "mixture_ar_cvs" || variant == "semi_synthetic") return 30;
  if (variant == "additive_generic") return 3;
  return 1;  // univariate_gaussian, modular_p1/p2, monotone_noise
}

Index resolved_dimension(const DgpSpec& spec) {
  return spec.d > 0 ? spec.d : default_dimension(spec.variant);
}

}  // namespace

void DgpSpec::validate() const {
  if (!known_variant(variant)) fail("DgpSpec: unknown variant '" + variant + "'");
  if (n < 1) fail("DgpSpec: n must be at least 1");
  if (d < 0) fail("DgpSpec: d must be non-negative");

  const Index dim = resolved_dimension(*this);
  const bool fixed_dimension = variant == "univariate_gaussian" || variant == "modular_p1" ||
                               variant == "modular_p2" || variant == "monotone_noise" ||
                               variant == "additive_generic";
  if (fixed_dimension && d != 0 && d != default_dimension(variant)) {
    fail("DgpSpec: variant '" + variant + "' has a fixed dimension");
  }
  if ((variant == "multiplicative" || variant == "di_counterexample") && dim < 2) {
    fail("DgpSpec: variant '" + variant + "' needs d >= 2");
  }
  if (variant == "di_counterexample" && !(sigma_x > 0.0)) {
    fail("DgpSpec: sigma_x must be positive");
  }
  if (std::abs(noise_correlation) > 1.0) {
    fail("DgpSpec: noise_correlation must lie in [-1, 1]");
  }
  if (dgp_is_cvs(variant)) {
    if (non_null_count < 0 || non_null_count > dim) {
      fail("DgpSpec: non_null_count must lie in [0, d]");
    }
    if (variant == "semi_synthetic" && (non_null_count < 4 || non_null_count % 4 != 0)) {
      fail("DgpSpec: semi_synthetic needs non_null_count to be a positive multiple of 4");
    }
  }
}

DgpSample sample_dgp(const DgpSpec& spec, RngStream data) {
  spec.validate();
  if (dgp_is_cvs(spec.variant)) {
    fail("sample_dgp: variant '" + spec.variant +
         "' is a variable-selection process; use sample_dgp_cvs");
  }
  const Index dim = resolved_dimension(spec);
  const RngStream coeff = coefficient_stream(spec);

  if (spec.variant == "univariate_gaussian") {
    return sample_univariate_gaussian(spec.n, spec.x_weight, data);
  }
  if (spec.variant == "non_gaussian_cubic") {
    return sample_non_gaussian(spec.n, dim, coeff, data);
  }
  if (spec.variant == "multiplicative") {
    return sample_multiplicative(spec.n, dim, coeff, data);
  }
  if (spec.variant == "di_counterexample") {
    return sample_di_counterexample(spec.n, dim, spec.sigma_x, spec.beta1, coeff, data);
  }
  if (spec.variant == "modular_p1" || spec.variant == "modular_p2") {
    return sample_modular(spec.n, spec.variant == "modular_p1", data);
  }
  if (spec.variant == "monotone_noise") {
    MonotoneNoiseSample sample =
        sample_monotone_noise(spec.n, multiplicative_exponential_noise(spec.noise_correlation),
                              data);
    DgpSample out;
    out.data = std::move(sample.data);
    out.x_sampler = std::move(sample.x_sampler);
    return out;
  }
  AdditiveGenericSpec additive;
  additive.noise_correlation = spec.noise_correlation;
  return sample_additive_generic(spec.n, additive, data);
}

CvsSample sample_dgp_cvs(const DgpSpec& spec, RngStream data) {
  spec.validate();
  if (!dgp_is_cvs(spec.variant)) {
    fail("sample_dgp_cvs: variant '" + spec.variant + "' is a single-hypothesis process");
  }
  const GmmJointSpec joint = default_gmm_joint_spec(resolved_dimension(spec));
  const RngStream coeff = coefficient_stream(spec);
  if (spec.variant == "mixture_ar_cvs") {
    return sample_mixture_ar_cvs(spec.n, joint, spec.non_null_count, coeff, data);
  }
  return sample_semi_synthetic(spec.n, joint, spec.non_null_count, coeff, data);
}

}  // namespace diet
