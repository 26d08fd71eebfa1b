#ifndef OPRISK_DISTRIBUTIONS_HPP
#define OPRISK_DISTRIBUTIONS_HPP

#include <cstdint>

#include "oprisk/rng.hpp"

namespace oprisk {

// Generalized Pareto exceedance distribution with heavy tail (xi > 0).
// Model-facing code keeps xi inside the truncation interval [0.01, 2]; the
// kernels below only require xi > 0, so the xi -> 0 exponential limit is
// never taken.
struct GpdParams {
  double sigma;  // scale, monetary units
  double xi;     // shape, dimensionless

  // Throws std::invalid_argument unless sigma > 0 and xi > 0, both finite.
  void validate() const;
};

// log f(y | sigma, xi) = -log(sigma) - (1 + 1/xi) log(1 + xi y / sigma).
// Support violations (1 + xi y / sigma <= 0, e.g. y < 0) return -infinity so
// that an MCMC proposal is rejected rather than aborted.
double gpd_logpdf(double y, const GpdParams& p);

// F(y) = 1 - (1 + xi y / sigma)^(-1/xi); 0 for y < 0.
double gpd_cdf(double y, const GpdParams& p);

// Inverse CDF, (sigma/xi)((1-p)^(-xi) - 1). Requires 0 <= p < 1; the
// quantile is unbounded as p -> 1 for xi > 0.
double gpd_quantile(double p, const GpdParams& p_gpd);

// Inverse-CDF sampling: one uniform per draw, exact.
double gpd_sample(const GpdParams& p, Rng& rng);

// Positive stable variate with Laplace transform E[exp(-t M)] = exp(-t^a),
// 0 < a < 1, by the Chambers-Mallows-Stuck construction. The boundary a = 1
// (degenerate point mass) is the caller's independence branch and is rejected
// here.
double positive_stable_sample(double a, Rng& rng);

// Standard normal CDF via erfc; absolute error at double rounding level.
double std_normal_cdf(double x);

// Inverse standard normal CDF. Rational initial guess refined by two Halley
// steps against the erfc-based CDF; absolute error well below 1e-9 on
// [1e-12, 1 - 1e-12]. p = 0 and p = 1 return -/+ infinity.
double std_normal_quantile(double p);

double std_normal_pdf(double x);
double std_normal_logpdf(double x);

// N(0,1) draw by inversion of one uniform on (0,1).
double normal_sample(Rng& rng);

// Exp(1) draw, strictly positive.
double exp_sample(Rng& rng);

// Poisson count. Sequential inversion below kPoissonInversionCutoff,
// transformed rejection with squeeze (PTRS) above it. Throws on negative or
// non-finite lambda.
inline constexpr double kPoissonInversionCutoff = 30.0;
std::uint64_t poisson_sample(double lambda, Rng& rng);

// log P(N = k) = k log(lambda) - lambda - lgamma(k + 1); lambda = 0 handled
// exactly (0 for k = 0, -infinity otherwise).
double poisson_logpmf(std::uint64_t k, double lambda);

}  // namespace oprisk

#endif
