#include "diet/math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diet {
namespace {

// Rational coefficients from W. J. Cody, "Rational Chebyshev approximation
// for the error function" (1969).  Three regimes: a direct erf form on
// [0, 0.46875], an erfc form on (0.46875, 4], and an asymptotic erfc form
// beyond 4.  The split exp(-y*y) = exp(-ysq*ysq) * exp(-del) with ysq
// rounded to 1/16 keeps the tail accurate.

constexpr double kErfA[5] = {3.16112374387056560e+00, 1.13864154151050156e+02,
                             3.77485237685302021e+02, 3.20937758913846947e+03,
                             1.85777706184603153e-01};
constexpr double kErfB[4] = {2.36012909523441209e+01, 2.44024637934444173e+02,
                             1.28261652607737228e+03, 2.84423683343917062e+03};

constexpr double kErfC[9] = {5.64188496988670089e-01, 8.88314979438837594e+00,
                             6.61191906371416295e+01, 2.98635138197400131e+02,
                             8.81952221241769090e+02, 1.71204761263407058e+03,
                             2.05107837782607147e+03, 1.23033935479799725e+03,
                             2.15311535474403846e-08};
constexpr double kErfD[8] = {1.57449261107098347e+01, 1.17693950891312499e+02,
                             5.37181101862009858e+02, 1.62138957456669019e+03,
                             3.29079923573345963e+03, 4.36261909014324716e+03,
                             3.43936767414372164e+03, 1.23033935480374942e+03};

constexpr double kErfP[6] = {3.05326634961232344e-01, 3.60344899949804439e-01,
                             1.25781726111229246e-01, 1.60837851487422766e-02,
                             6.58749161529837803e-04, 1.63153871373020978e-02};
constexpr double kErfQ[5] = {2.56852019228982242e+00, 1.87295284992346047e+00,
                             5.27905102951428412e-01, 6.05183413124413191e-02,
                             2.33520497626869185e-03};

constexpr double kOneOverSqrtPi = 5.6418958354775628695e-01;

// erfc(y) for y in (0.46875, 4].
double erfc_mid(double y) {
  double num = kErfC[8] * y;
  double den = y;
  for (int i = 0; i < 7; ++i) {
    num = (num + kErfC[i]) * y;
    den = (den + kErfD[i]) * y;
  }
  const double ratio = (num + kErfC[7]) / (den + kErfD[7]);
  const double ysq = std::floor(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del) * ratio;
}

// erfc(y) for y > 4.
double erfc_tail(double y) {
  if (y >= 26.6) return 0.0;  // below the smallest positive double after scaling
  const double inv = 1.0 / (y * y);
  double num = kErfP[5] * inv;
  double den = inv;
  for (int i = 0; i < 4; ++i) {
    num = (num + kErfP[i]) * inv;
    den = (den + kErfQ[i]) * inv;
  }
  double ratio = inv * (num + kErfP[4]) / (den + kErfQ[4]);
  ratio = (kOneOverSqrtPi - ratio) / y;
  const double ysq = std::floor(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del) * ratio;
}

}  // namespace

double erf_approx(double x) {
  const double y = std::abs(x);
  if (y <= 0.46875) {
    const double z = y > 1e-300 ? y * y : 0.0;
    double num = kErfA[4] * z;
    double den = z;
    for (int i = 0; i < 3; ++i) {
      num = (num + kErfA[i]) * z;
      den = (den + kErfB[i]) * z;
    }
    return x * (num + kErfA[3]) / (den + kErfB[3]);
  }
  const double ec = y <= 4.0 ? erfc_mid(y) : erfc_tail(y);
  return x > 0.0 ? 1.0 - ec : ec - 1.0;
}

double erfc_approx(double x) {
  const double y = std::abs(x);
  double result;
  if (y <= 0.46875) {
    return 1.0 - erf_approx(x);
  } else if (y <= 4.0) {
    result = erfc_mid(y);
  } else {
    result = erfc_tail(y);
  }
  return x > 0.0 ? result : 2.0 - result;
}

double normal_cdf(double v) { return 0.5 * erfc_approx(-v / kSqrtTwo); }

double normal_cdf(double v, double mean, double stdev) {
  if (!(stdev > 0.0)) throw std::invalid_argument("normal_cdf: stdev must be positive");
  return normal_cdf((v - mean) / stdev);
}

double normal_pdf(double v) { return std::exp(-0.5 * v * v) / std::sqrt(2.0 * kPi); }

double normal_log_pdf(double v) { return -0.5 * v * v - 0.5 * kLogTwoPi; }

// Wichura's algorithm AS 241, PPND16 variant: a rational approximation for
// the standard normal quantile with relative error around 1e-15.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie strictly inside (0, 1)");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf/NaN propagates)
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double softplus(double x) {
  // log(1 + exp(x)) = max(x, 0) + log1p(exp(-|x|))
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_gamma: argument must be positive");
  return std::lgamma(x);
}

double log_factorial(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("log_factorial: negative argument");
  return log_gamma(static_cast<double>(n) + 1.0);
}

}  // namespace diet
