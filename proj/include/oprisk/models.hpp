#ifndef OPRISK_MODELS_HPP
#define OPRISK_MODELS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "oprisk/panel.hpp"
#include "oprisk/priors.hpp"
#include "oprisk/rng.hpp"
#include "oprisk/target.hpp"
#include "oprisk/transforms.hpp"

namespace oprisk {

// The three nested annual-loss models, ordered by increasing structure:
// independent frequency/severity, shared latent stress factor, and the full
// Hawkes-feedback + AR(1)-stress + Gumbel-copula model.
enum class ModelTag { kIndep, kShared, kHag };

std::string to_string(ModelTag tag);
ModelTag model_from_string(const std::string& name);  // throws std::invalid_argument

// Hard stationarity margin on the Hawkes feedback.
inline constexpr double kMaxBranchingRatio = 0.95;

// Rejection guard on the frequency log-intensity. exp(80) events/year is
// astronomically beyond any usable posterior region; rejecting there keeps
// every gradient of a finite-valued point itself finite.
inline constexpr double kMaxLogIntensity = 80.0;

struct IndepParams {
  double mu_lambda;  // log mean events/year
  double mu_sigma;   // log GPD scale
  double xi;         // GPD shape
};

struct SharedParams {
  double mu_lambda;
  double alpha;  // stress loading on frequency, >= 0
  double mu_sigma;
  double beta;  // stress loading on severity scale, >= 0
  double xi;
};

struct HagParams {
  double phi;        // AR(1) persistence, |phi| < 1
  double mu_lambda;
  double alpha;      // >= 0
  double eta;        // excitation jump size, >= 0
  double kappa;      // excitation decay rate, > 0
  double mu_sigma;
  double beta_s;     // severity loading, >= 0
  double xi;         // in [0.01, 2]
  double theta;      // Gumbel dependence, >= 1

  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

// Per-year latent innovations; z is the AR(1) stress path implied by
// (phi, w_f): z[0] = w_f[0], z[t] = phi z[t-1] + w_f[t].
struct LatentState {
  std::vector<double> w_f;
  std::vector<double> w_s;
  std::vector<double> z;
};

std::vector<double> ar1_scan(double phi, const std::vector<double>& w_f);

// lambda_t = exp(mu_lambda + alpha z_t) + sum_{s<t} eta N_s exp(-kappa(t-s)),
// with prior_counts holding N_1..N_{t-1} (empty for the first year).
// Throws std::runtime_error if the result is not finite.
double hawkes_intensity(const HagParams& p, double z_t,
                        const std::vector<std::uint64_t>& prior_counts);

// r = eta exp(-kappa) / (1 - exp(-kappa)); requires kappa > 0.
double branching_ratio(double eta, double kappa);

// Log-likelihoods on the natural scale. All return -infinity (never throw)
// on support violations: xi <= 0, theta < 1, |phi| >= 1, negative loadings,
// or branching ratio >= 0.95 for the Hawkes model.
double loglik_indep(const IndepParams& p, const PanelDataset& data);
double loglik_shared(const SharedParams& p, const std::vector<double>& z,
                     const PanelDataset& data);
double loglik_hag(const HagParams& p, const LatentState& lat, const PanelDataset& data);

// Structural prior log-densities plus independent standard-normal terms for
// every latent innovation; -infinity outside any prior's support.
double logprior_indep(const IndepParams& p);
double logprior_shared(const SharedParams& p, const std::vector<double>& z);
double logprior_hag(const HagParams& p, const LatentState& lat);

// One structural parameter: name, unconstrained transform, and prior.
struct ParamInfo {
  const char* name;
  Transform transform;
  PriorSpec prior;
};

const std::vector<ParamInfo>& structural_params(ModelTag tag);
std::size_t latent_count(ModelTag tag, int years);
std::vector<std::string> param_names(ModelTag tag, int years);

// Log-posterior over the unconstrained vector [structural..., latents...],
// including the transform log-Jacobians. Gradients are hand-coded
// reverse-mode accumulations (closed forms exist for every term); finite
// differences are the test oracle only.
//
// Subcriticality: value() is -infinity whenever the branching ratio reaches
// 0.95 (such points are never accepted), while value_and_grad() additionally
// reports a smooth restoring gradient -1e6 (r - 0.95)^2 style barrier there
// so trajectories that overshoot the wall stay numerically well-behaved.
class Posterior final : public LogDensity {
 public:
  Posterior(ModelTag tag, PanelDataset data);

  std::size_t dim() const override { return dim_; }
  double value(const std::vector<double>& v) const override;
  double value_and_grad(const std::vector<double>& v,
                        std::vector<double>& grad) const override;

  // Natural-scale view of an unconstrained point (latents pass through).
  std::vector<double> to_natural(const std::vector<double>& v) const;
  std::vector<double> to_unconstrained(const std::vector<double>& natural) const;

  // Structural parameters at prior medians, latents at zero, all jittered by
  // Uniform(-0.5, 0.5) on the unconstrained scale.
  std::vector<double> init_unconstrained(Rng& rng) const;

  ModelTag tag() const { return tag_; }
  const PanelDataset& data() const { return data_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t structural_count() const { return structural_params(tag_).size(); }

 private:
  double eval_indep(const std::vector<double>& v, std::vector<double>* grad) const;
  double eval_shared(const std::vector<double>& v, std::vector<double>* grad) const;
  double eval_hag(const std::vector<double>& v, std::vector<double>* grad) const;
  double eval(const std::vector<double>& v, std::vector<double>* grad) const;

  ModelTag tag_;
  PanelDataset data_;
  std::size_t dim_;
  std::vector<std::string> names_;
};

}  // namespace oprisk

#endif
