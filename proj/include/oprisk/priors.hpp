#ifndef OPRISK_PRIORS_HPP
#define OPRISK_PRIORS_HPP

#include <cmath>
#include <limits>

#include "oprisk/distributions.hpp"

namespace oprisk {

// Scalar prior families used by the model tables. logpdf returns -infinity
// outside the support (rejection, never abort); dlogpdf is only consumed at
// points the transforms keep inside the support.
enum class PriorFamily { kNormal, kHalfNormal, kBeta, kTruncNormal, kShiftedHalfNormal };

struct PriorSpec {
  PriorFamily family = PriorFamily::kNormal;
  double a = 0.0;   // mean (normal/trunc-normal) or first Beta shape
  double b = 1.0;   // sd or second Beta shape
  double lo = 0.0;  // trunc-normal bounds
  double hi = 0.0;

  double logpdf(double x) const {
    constexpr double k_log_sqrt_2pi = 0.91893853320467274178;
    switch (family) {
      case PriorFamily::kNormal: {
        const double z = (x - a) / b;
        return -0.5 * z * z - std::log(b) - k_log_sqrt_2pi;
      }
      case PriorFamily::kHalfNormal: {
        if (x < 0.0) return -inf();
        const double z = x / b;
        return std::log(2.0) - 0.5 * z * z - std::log(b) - k_log_sqrt_2pi;
      }
      case PriorFamily::kBeta: {
        if (!(x > 0.0) || !(x < 1.0)) return -inf();
        return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) +
               std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
      }
      case PriorFamily::kTruncNormal: {
        if (x < lo || x > hi) return -inf();
        const double z = (x - a) / b;
        const double mass = std_normal_cdf((hi - a) / b) - std_normal_cdf((lo - a) / b);
        return -0.5 * z * z - std::log(b) - k_log_sqrt_2pi - std::log(mass);
      }
      case PriorFamily::kShiftedHalfNormal: {
        if (x < 1.0) return -inf();
        const double z = (x - 1.0) / b;
        return std::log(2.0) - 0.5 * z * z - std::log(b) - k_log_sqrt_2pi;
      }
    }
    return -inf();
  }

  double dlogpdf(double x) const {
    switch (family) {
      case PriorFamily::kNormal: return -(x - a) / (b * b);
      case PriorFamily::kHalfNormal: return -x / (b * b);
      case PriorFamily::kBeta: return (a - 1.0) / x - (b - 1.0) / (1.0 - x);
      case PriorFamily::kTruncNormal: return -(x - a) / (b * b);
      case PriorFamily::kShiftedHalfNormal: return -(x - 1.0) / (b * b);
    }
    return 0.0;
  }

  // Used only to seed chain initialization; the Beta median is the standard
  // (a - 1/3)/(a + b - 2/3) approximation, ample for a jittered start point.
  double median() const {
    switch (family) {
      case PriorFamily::kNormal: return a;
      case PriorFamily::kHalfNormal: return b * std_normal_quantile(0.75);
      case PriorFamily::kBeta: return (a - 1.0 / 3.0) / (a + b - 2.0 / 3.0);
      case PriorFamily::kTruncNormal: {
        const double plo = std_normal_cdf((lo - a) / b);
        const double phi = std_normal_cdf((hi - a) / b);
        return a + b * std_normal_quantile(0.5 * (plo + phi));
      }
      case PriorFamily::kShiftedHalfNormal: return 1.0 + b * std_normal_quantile(0.75);
    }
    return a;
  }

 private:
  static double inf() { return std::numeric_limits<double>::infinity(); }
};

inline PriorSpec normal_prior(double mean, double sd) {
  return {PriorFamily::kNormal, mean, sd, 0.0, 0.0};
}
inline PriorSpec half_normal_prior(double sd) {
  return {PriorFamily::kHalfNormal, 0.0, sd, 0.0, 0.0};
}
inline PriorSpec beta_prior(double a, double b) {
  return {PriorFamily::kBeta, a, b, 0.0, 0.0};
}
inline PriorSpec trunc_normal_prior(double mean, double sd, double lo, double hi) {
  return {PriorFamily::kTruncNormal, mean, sd, lo, hi};
}
inline PriorSpec shifted_half_normal_prior(double sd) {
  return {PriorFamily::kShiftedHalfNormal, 0.0, sd, 0.0, 0.0};
}

}  // namespace oprisk

#endif
