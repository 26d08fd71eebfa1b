#ifndef OPRISK_TARGET_HPP
#define OPRISK_TARGET_HPP

#include <cstddef>
#include <vector>

namespace oprisk {

// Differentiable log-density over an unconstrained vector, the contract the
// sampler integrates against. A -infinity return means "reject this point";
// implementations must never throw for out-of-support arguments.
struct LogDensity {
  virtual ~LogDensity() = default;

  virtual std::size_t dim() const = 0;

  virtual double value(const std::vector<double>& v) const = 0;

  // Fills grad (resized to dim()) and returns the log-density. When the
  // returned value is -infinity the gradient field is still finite (zero or
  // a restoring direction) so a leapfrog integrator can keep its state
  // representable while the enclosing transition rejects the point.
  virtual double value_and_grad(const std::vector<double>& v,
                                std::vector<double>& grad) const = 0;
};

}  // namespace oprisk

#endif
