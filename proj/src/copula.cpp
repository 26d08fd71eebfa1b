#include "oprisk/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "oprisk/distributions.hpp"

namespace oprisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double clamp_unit(double x) {
  return std::clamp(x, kCopulaClampEps, 1.0 - kCopulaClampEps);
}

}  // namespace

void GumbelTheta::validate() const {
  if (!(theta >= 1.0) || !std::isfinite(theta)) {
    throw std::invalid_argument("Gumbel theta must be finite and >= 1");
  }
}

double gumbel_cdf(double u, double v, GumbelTheta t) {
  t.validate();
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("Gumbel CDF arguments must lie in [0, 1]");
  }
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  const double su = std::log(-std::log(u));
  const double sv = std::log(-std::log(v));
  const double log_a = log_sum_exp(t.theta * su, t.theta * sv);
  return std::exp(-std::exp(log_a / t.theta));
}

double gumbel_logpdf(double u, double v, GumbelTheta t) {
  return gumbel_logpdf_grad(u, v, t).value;
}

// log c = -A^(1/theta) - log u - log v + (theta-1)(log lu + log lv)
//         - (2 - 1/theta) log A + log(A^(1/theta) + theta - 1),
// with lu = -log u, lv = -log v, A = lu^theta + lv^theta. All expressions
// below are smooth at theta = 1, where the density is identically 1.
GumbelLogpdfGrad gumbel_logpdf_grad(double u, double v, GumbelTheta t) {
  t.validate();
  if (!std::isfinite(u) || !std::isfinite(v)) {
    throw std::invalid_argument("Gumbel density arguments must be finite");
  }
  const double uc = clamp_unit(u);
  const double vc = clamp_unit(v);
  const double theta = t.theta;

  const double lu = -std::log(uc);
  const double lv = -std::log(vc);
  const double su = std::log(lu);
  const double sv = std::log(lv);
  const double log_a = log_sum_exp(theta * su, theta * sv);
  const double wu = std::exp(theta * su - log_a);  // lu^theta / A
  const double wv = std::exp(theta * sv - log_a);
  const double big_b = std::exp(log_a / theta);    // A^(1/theta)
  const double d = big_b + theta - 1.0;

  const double dlog_a_dtheta = wu * su + wv * sv;
  const double db_dtheta = big_b * (dlog_a_dtheta / theta - log_a / (theta * theta));
  const double dtheta = -db_dtheta + (su + sv) - log_a / (theta * theta) -
                        (2.0 - 1.0 / theta) * dlog_a_dtheta + (db_dtheta + 1.0) / d;

  if (theta == 1.0) return {0.0, 0.0, 0.0, dtheta};  // independence boundary

  const double value = -big_b + lu + lv + (theta - 1.0) * (su + sv) -
                       (2.0 - 1.0 / theta) * log_a + std::log(d);
  const double scale = big_b + 2.0 * theta - 1.0 - big_b / d;
  const double du = (wu * scale - (theta - 1.0)) / (uc * lu) - 1.0 / uc;
  const double dv = (wv * scale - (theta - 1.0)) / (vc * lv) - 1.0 / vc;

  return {value, (u == uc) ? du : 0.0, (v == vc) ? dv : 0.0, dtheta};
}

double upper_tail_dep(GumbelTheta t) {
  t.validate();
  if (t.theta == 1.0) return 0.0;
  return 2.0 - std::pow(2.0, 1.0 / t.theta);
}

std::pair<double, double> gumbel_sample(GumbelTheta t, Rng& rng) {
  t.validate();
  if (t.theta == 1.0) return {rng.uniform_open(), rng.uniform_open()};
  const double a = 1.0 / t.theta;
  const double m = positive_stable_sample(a, rng);
  const double e1 = exp_sample(rng);
  const double e2 = exp_sample(rng);
  return {std::exp(-std::pow(e1 / m, a)), std::exp(-std::pow(e2 / m, a))};
}

}  // namespace oprisk
