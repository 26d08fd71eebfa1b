#include "oprisk/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oprisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

void GpdParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("GPD scale must be finite and > 0");
  }
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw std::invalid_argument("GPD shape must be finite and > 0");
  }
}

double gpd_logpdf(double y, const GpdParams& p) {
  const double t = p.xi * y / p.sigma;
  if (!(1.0 + t > 0.0)) return -kInf;
  return -std::log(p.sigma) - (1.0 + 1.0 / p.xi) * std::log1p(t);
}

double gpd_cdf(double y, const GpdParams& p) {
  if (y <= 0.0) return 0.0;
  return -std::expm1(-std::log1p(p.xi * y / p.sigma) / p.xi);
}

double gpd_quantile(double p, const GpdParams& p_gpd) {
  p_gpd.validate();
  if (!(p >= 0.0) || p >= 1.0) {
    throw std::invalid_argument("GPD quantile needs 0 <= p < 1");
  }
  return p_gpd.sigma / p_gpd.xi * std::expm1(-p_gpd.xi * std::log1p(-p));
}

double gpd_sample(const GpdParams& p, Rng& rng) {
  return gpd_quantile(rng.uniform(), p);
}

double positive_stable_sample(double a, Rng& rng) {
  if (!(a > 0.0) || !(a < 1.0)) {
    throw std::invalid_argument("positive stable index must lie in (0, 1)");
  }
  const double v = (rng.uniform_open() - 0.5) * kPi;  // Uniform(-pi/2, pi/2)
  const double w = exp_sample(rng);
  const double t = a * (v + 0.5 * kPi);
  return std::sin(t) / std::pow(std::cos(v), 1.0 / a) *
         std::pow(std::cos(v - t) / w, (1.0 - a) / a);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double std_normal_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

namespace {

// Acklam's rational approximation to the probit function (|err| < 1.2e-9).
double probit_initial(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::invalid_argument("normal quantile needs p in [0, 1]");
  }
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;
  double x = probit_initial(p);
  // Halley refinement against the erfc CDF.
  for (int i = 0; i < 2; ++i) {
    const double e = std_normal_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double normal_sample(Rng& rng) { return std_normal_quantile(rng.uniform_open()); }

double exp_sample(Rng& rng) { return -std::log(rng.uniform_open()); }

namespace {

std::uint64_t poisson_inversion(double lambda, Rng& rng) {
  const double u = rng.uniform();
  double p = std::exp(-lambda);
  double cum = p;
  std::uint64_t k = 0;
  while (u > cum) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cum += p;
    if (p == 0.0) break;  // exhausted double precision far in the tail
  }
  return k;
}

// Hormann's PTRS transformed-rejection sampler, valid for lambda >= 10.
std::uint64_t poisson_ptrs(double lambda, Rng& rng) {
  const double log_lambda = std::log(lambda);
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform_open();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_lambda - lambda - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t poisson_sample(double lambda, Rng& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("Poisson rate must be finite and >= 0");
  }
  if (lambda == 0.0) return 0;
  if (lambda < kPoissonInversionCutoff) return poisson_inversion(lambda, rng);
  return poisson_ptrs(lambda, rng);
}

double poisson_logpmf(std::uint64_t k, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) return -kInf;
  if (lambda == 0.0) return k == 0 ? 0.0 : -kInf;
  const double kd = static_cast<double>(k);
  return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

}  // namespace oprisk
