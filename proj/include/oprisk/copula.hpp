#ifndef OPRISK_COPULA_HPP
#define OPRISK_COPULA_HPP

#include <utility>

#include "oprisk/rng.hpp"

namespace oprisk {

// Bivariate Gumbel copula parameter; theta = 1 is exact independence.
struct GumbelTheta {
  double theta;

  // Throws std::invalid_argument unless theta >= 1 and finite.
  void validate() const;
};

// Arguments to the log-density are clamped into [eps, 1 - eps] so that the
// copula correction stays finite when a normal CDF underflows (|w| > ~7).
// Inside the clamped region the density is treated as flat: the gradient
// contribution of a clamped argument is zero.
inline constexpr double kCopulaClampEps = 1e-12;

// C(u, v) = exp(-[(-ln u)^theta + (-ln v)^theta]^(1/theta)).
// u = 0 or v = 0 return the limit 0; arguments outside [0, 1] throw.
double gumbel_cdf(double u, double v, GumbelTheta t);

// Log-density of the Gumbel copula, with theta = 1 returning exactly 0.
// A = lu^theta + lv^theta is assembled by log-sum-exp on theta*log(lu) so the
// evaluation stays finite for large theta.
double gumbel_logpdf(double u, double v, GumbelTheta t);

struct GumbelLogpdfGrad {
  double value;
  double du;
  double dv;
  double dtheta;
};

// Log-density together with its partial derivatives in u, v and theta.
// The closed forms are smooth through theta = 1. Clamped arguments report a
// zero derivative in that argument.
GumbelLogpdfGrad gumbel_logpdf_grad(double u, double v, GumbelTheta t);

// Upper-tail dependence coefficient, lambda_U = 2 - 2^(1/theta).
double upper_tail_dep(GumbelTheta t);

// Exact sampling: Marshall-Olkin frailty construction on top of a positive
// stable variate with index 1/theta; theta = 1 falls back to two independent
// uniforms. Both coordinates land strictly inside (0, 1).
std::pair<double, double> gumbel_sample(GumbelTheta t, Rng& rng);

}  // namespace oprisk

#endif
