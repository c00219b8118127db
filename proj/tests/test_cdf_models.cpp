#include "doctest.h"

#include "diet/cdf_models.hpp"
#include "oracles.hpp"

#include <cmath>
#include <vector>

using namespace diet;

namespace {

MdnOptions quick_mdn_options(Index width = 32, Index layers = 4) {
  MdnOptions options;
  options.components = 10;
  options.hidden_width = width;
  options.hidden_layers = layers;
  options.train.epochs = 120;
  options.train.batch_size = 100;
  options.train.adam.learning_rate = 1e-3;
  options.train.validation_fraction = 0.1;
  options.train.patience = 12;
  return options;
}

}  // namespace

TEST_SUITE_BEGIN("cdf_models");

TEST_CASE("oracle Gaussian cdf matches the closed form") {
  OracleGaussianCdf oracle_cdf(
      [](const Eigen::Ref<const Vector>& z) { return 2.0 * z[0]; },
      [](const Eigen::Ref<const Vector>& z) { return std::sqrt(1.0 + z[0] * z[0]); });
  Vector z(1);
  z << 0.7;
  const double mean = 1.4;
  const double stdev = std::sqrt(1.49);
  for (double v : {-2.0, 0.0, 1.4, 3.3}) {
    CHECK(oracle_cdf.cdf(v, z) == doctest::Approx(normal_cdf((v - mean) / stdev)).epsilon(1e-13));
  }
  CHECK(oracle_cdf.log_density(1.4, z) ==
        doctest::Approx(normal_log_pdf(0.0) - std::log(stdev)).epsilon(1e-12));
}

TEST_CASE("oracle sampling and PIT are consistent") {
  OracleGaussianCdf oracle_cdf([](const Eigen::Ref<const Vector>& z) { return z[0]; },
                               std::sqrt(0.1));
  Rng rng(RngStream{900, 0});
  const Index n = 2000;
  Matrix z(n, 1);
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    z(i, 0) = rng.normal(0.0, std::sqrt(0.1));
    x[i] = oracle_cdf.sample(z.row(i), rng);
  }
  const Vector pit = oracle_cdf.pit_column(x, z);
  std::vector<double> u(pit.data(), pit.data() + pit.size());
  CHECK(oracle::ks_distance_uniform(u) < 1.36 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gmm head NLL matches a direct computation") {
  const GmmNllLoss loss(2);
  Matrix raw(1, 6);
  raw << 0.3, -0.2, 1.0, -1.0, 0.1, 0.4;
  Matrix target(1, 1);
  target << 0.5;
  const GmmParams mix = gmm_from_raw(raw.row(0));
  double direct = 0.0;
  for (Index k = 0; k < 2; ++k) {
    const double zscore = (0.5 - mix.means[k]) / mix.stdevs[k];
    direct += mix.weights[k] * std::exp(-0.5 * zscore * zscore) /
              (mix.stdevs[k] * std::sqrt(2.0 * kPi));
  }
  CHECK(loss.loss(raw, target, nullptr) == doctest::Approx(-std::log(direct)).epsilon(1e-12));
}

TEST_CASE("gmm head NLL gradient matches finite differences") {
  const Index k = 3;
  const GmmNllLoss loss(k);
  Rng rng(RngStream{901, 0});
  const Index n = 5;
  // Fixed well-conditioned evaluation points: scales bounded away from the
  // stdev floor so the finite-difference stencil itself stays accurate.
  Matrix raw(n, 3 * k);
  Matrix targets(n, 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) {
      raw(i, j) = rng.uniform(-1.0, 1.0);           // logits
      raw(i, k + j) = rng.uniform(-2.0, 2.0);       // means
      raw(i, 2 * k + j) = rng.uniform(-0.5, 1.5);   // scales >= ~0.47
    }
    targets(i, 0) = rng.uniform(-2.0, 2.0);
  }
  Matrix analytic;
  loss.loss(raw, targets, &analytic);
  double worst = 0.0;
  const double h = 1e-6;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3 * k; ++j) {
      Matrix plus = raw;
      Matrix minus = raw;
      plus(i, j) += h;
      minus(i, j) -= h;
      const double numeric =
          (loss.loss(plus, targets, nullptr) - loss.loss(minus, targets, nullptr)) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-8});
      worst = std::max(worst, std::abs(numeric - analytic(i, j)) / denom);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("mdn learns a conditional Gaussian: held-out PIT is uniform") {
  // x | z ~ N(z, 0.1) with z ~ N(0, 0.1)
  Rng rng(RngStream{902, 0});
  const Index n = 2000;
  Matrix z_train(n, 1);
  Vector x_train(n);
  for (Index i = 0; i < n; ++i) {
    z_train(i, 0) = rng.normal(0.0, std::sqrt(0.1));
    x_train[i] = rng.normal(z_train(i, 0), std::sqrt(0.1));
  }
  const MdnModel model = fit_mdn(z_train, x_train, quick_mdn_options(), RngStream{902, 1});

  Matrix z_test(n, 1);
  Vector x_test(n);
  for (Index i = 0; i < n; ++i) {
    z_test(i, 0) = rng.normal(0.0, std::sqrt(0.1));
    x_test[i] = rng.normal(z_test(i, 0), std::sqrt(0.1));
  }
  const Vector pit = model.pit_column(x_test, z_test);
  std::vector<double> u(pit.data(), pit.data() + pit.size());
  CHECK(oracle::ks_distance_uniform(u) < 1.36 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mdn captures a bimodal conditional") {
  // x | z is a two-point mixture whose separation depends on sign(z).
  Rng rng(RngStream{903, 0});
  const Index n = 3000;
  Matrix z(n, 1);
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    z(i, 0) = rng.normal();
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double center = z(i, 0) > 0.0 ? 3.0 : 1.0;
    x[i] = rng.normal(sign * center, 0.3);
  }
  const MdnModel model = fit_mdn(z, x, quick_mdn_options(), RngStream{903, 1});
  Vector zq(1);
  zq << 1.5;  // centers at +-3
  // Mass near zero should be tiny; mass below zero about one half.
  const double below_zero = model.cdf(0.0, zq);
  CHECK(below_zero == doctest::Approx(0.5).epsilon(0.15));
  const double middle_mass = model.cdf(1.5, zq) - model.cdf(-1.5, zq);
  CHECK(middle_mass < 0.15);
  // Compare against the truth via PIT on fresh draws from the true law.
  std::vector<double> pit;
  Rng fresh(RngStream{903, 2});
  for (int i = 0; i < 2000; ++i) {
    const double zz = fresh.normal();
    const double sign = fresh.uniform() < 0.5 ? -1.0 : 1.0;
    const double center = zz > 0.0 ? 3.0 : 1.0;
    const double xx = fresh.normal(sign * center, 0.3);
    Vector zrow(1);
    zrow << zz;
    pit.push_back(model.cdf(xx, zrow));
  }
  CHECK(oracle::ks_distance_uniform(pit) < 2.0 * 1.36 / std::sqrt(2000.0));
}

TEST_CASE("constant targets do not break fitting") {
  Rng rng(RngStream{904, 0});
  const Index n = 200;
  Matrix z = rng.normal_matrix(n, 2);
  Vector x = Vector::Constant(n, 5.0);
  MdnOptions options = quick_mdn_options(16, 2);
  options.train.epochs = 60;
  const MdnModel model = fit_mdn(z, x, options, RngStream{904, 1});
  Vector zq(2);
  zq << 0.0, 0.0;
  const GmmParams mix = model.mixture_at(zq);
  CHECK_NOTHROW(mix.validate());
  CHECK(mix.stdevs.minCoeff() >= kGmmStdevFloor - 1e-12);
  // The law concentrates around 5; full convergence to the stdev floor is
  // not required, just a sane, sharpening fit with no numerical blowup.
  CHECK(model.cdf(5.5, zq) > 0.75);
  CHECK(model.cdf(4.5, zq) < 0.25);
  CHECK(std::isfinite(model.log_density(5.0, zq)));
}

TEST_CASE("mdn fitting is deterministic in the stream and batched rows match single rows") {
  Rng rng(RngStream{905, 0});
  const Index n = 300;
  Matrix z = rng.normal_matrix(n, 2);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = rng.normal(z(i, 0) - z(i, 1), 0.5);
  MdnOptions options = quick_mdn_options(16, 2);
  options.train.epochs = 25;
  const MdnModel a = fit_mdn(z, x, options, RngStream{905, 1});
  const MdnModel b = fit_mdn(z, x, options, RngStream{905, 1});
  const MdnModel c = fit_mdn(z, x, options, RngStream{905, 2});
  CHECK(a.parameter_hash() == b.parameter_hash());
  CHECK(a.parameter_hash() != c.parameter_hash());

  const std::vector<GmmParams> batched = a.mixtures_for_rows(z.topRows(10));
  for (Index i = 0; i < 10; ++i) {
    const GmmParams single = a.mixture_at(z.row(i));
    CHECK((batched[static_cast<std::size_t>(i)].weights - single.weights).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((batched[static_cast<std::size_t>(i)].means - single.means).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((batched[static_cast<std::size_t>(i)].stdevs - single.stdevs).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("fit_mdn validates its inputs") {
  Matrix z(3, 1);
  z << 1.0, 2.0, 3.0;
  Vector x(2);
  x << 1.0, 2.0;
  CHECK_THROWS_AS(fit_mdn(z, x, quick_mdn_options(), RngStream{906, 0}),
                  std::invalid_argument);
}

TEST_SUITE_END();
