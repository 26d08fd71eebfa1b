#ifndef OPRISK_TRANSFORMS_HPP
#define OPRISK_TRANSFORMS_HPP

#include <cmath>

namespace oprisk {

// Smooth bijections from the unconstrained sampling scale v to a parameter's
// natural support, with the log-Jacobian terms the log-posterior needs:
//   log_jacobian(v) = log |d natural / d v|
//   dnat_dv(v)      = d natural / d v
//   dlogj_dv(v)     = d log_jacobian / d v
enum class TransformKind { kIdentity, kLog, kLogit01, kScaledLogit, kLogShift1 };

struct Transform {
  TransformKind kind = TransformKind::kIdentity;
  double lo = 0.0;  // kScaledLogit bounds
  double hi = 1.0;

  double to_natural(double v) const {
    switch (kind) {
      case TransformKind::kIdentity: return v;
      case TransformKind::kLog: return std::exp(v);
      case TransformKind::kLogit01: return sigmoid(v);
      case TransformKind::kScaledLogit: return lo + (hi - lo) * sigmoid(v);
      case TransformKind::kLogShift1: return 1.0 + std::exp(v);
    }
    return v;
  }

  double to_unconstrained(double x) const {
    switch (kind) {
      case TransformKind::kIdentity: return x;
      case TransformKind::kLog: return std::log(x);
      case TransformKind::kLogit01: return std::log(x) - std::log1p(-x);
      case TransformKind::kScaledLogit: return std::log(x - lo) - std::log(hi - x);
      case TransformKind::kLogShift1: return std::log(x - 1.0);
    }
    return x;
  }

  double log_jacobian(double v) const {
    switch (kind) {
      case TransformKind::kIdentity: return 0.0;
      case TransformKind::kLog: return v;
      case TransformKind::kLogit01: return log_sigmoid(v) + log_sigmoid(-v);
      case TransformKind::kScaledLogit:
        return std::log(hi - lo) + log_sigmoid(v) + log_sigmoid(-v);
      case TransformKind::kLogShift1: return v;
    }
    return 0.0;
  }

  double dnat_dv(double v) const {
    switch (kind) {
      case TransformKind::kIdentity: return 1.0;
      case TransformKind::kLog: return std::exp(v);
      case TransformKind::kLogit01: {
        const double s = sigmoid(v);
        return s * (1.0 - s);
      }
      case TransformKind::kScaledLogit: {
        const double s = sigmoid(v);
        return (hi - lo) * s * (1.0 - s);
      }
      case TransformKind::kLogShift1: return std::exp(v);
    }
    return 1.0;
  }

  double dlogj_dv(double v) const {
    switch (kind) {
      case TransformKind::kIdentity: return 0.0;
      case TransformKind::kLog: return 1.0;
      case TransformKind::kLogit01: return 1.0 - 2.0 * sigmoid(v);
      case TransformKind::kScaledLogit: return 1.0 - 2.0 * sigmoid(v);
      case TransformKind::kLogShift1: return 1.0;
    }
    return 0.0;
  }

 private:
  static double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  }
  // log(sigmoid(v)) = -log1p(exp(-v)), evaluated without overflow.
  static double log_sigmoid(double v) {
    return v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
  }
};

inline Transform identity_transform() { return {TransformKind::kIdentity, 0.0, 1.0}; }
inline Transform log_transform() { return {TransformKind::kLog, 0.0, 1.0}; }
inline Transform logit01_transform() { return {TransformKind::kLogit01, 0.0, 1.0}; }
inline Transform scaled_logit_transform(double lo, double hi) {
  return {TransformKind::kScaledLogit, lo, hi};
}
inline Transform log_shift1_transform() { return {TransformKind::kLogShift1, 0.0, 1.0}; }

}  // namespace oprisk

#endif
