#include "oprisk/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "oprisk/copula.hpp"
#include "oprisk/distributions.hpp"

namespace oprisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.9189385332046727417803297;

double reject(std::vector<double>* grad) {
  if (grad != nullptr) std::fill(grad->begin(), grad->end(), 0.0);
  return -kInf;
}

// A finite log-posterior must come with a finite gradient; anything else
// means a reparameterization bug rather than a point worth rejecting.
void check_grad_finite(const std::vector<double>& grad) {
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::runtime_error("Posterior: non-finite gradient at a finite-valued point");
}

}  // namespace

std::string to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::kIndep: return "indep";
    case ModelTag::kShared: return "shared";
    case ModelTag::kHag: return "hag";
  }
  throw std::invalid_argument("to_string: unknown model tag");
}

ModelTag model_from_string(const std::string& name) {
  if (name == "indep") return ModelTag::kIndep;
  if (name == "shared") return ModelTag::kShared;
  if (name == "hag") return ModelTag::kHag;
  throw std::invalid_argument("unknown model '" + name + "' (expected indep, shared, or hag)");
}

void HagParams::validate() const {
  if (!std::isfinite(phi) || phi <= -1.0 || phi >= 1.0)
    throw std::invalid_argument("HagParams: phi must lie in (-1, 1)");
  if (!std::isfinite(mu_lambda)) throw std::invalid_argument("HagParams: mu_lambda must be finite");
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw std::invalid_argument("HagParams: alpha must be >= 0");
  if (!std::isfinite(eta) || eta < 0.0) throw std::invalid_argument("HagParams: eta must be >= 0");
  if (!std::isfinite(kappa) || kappa <= 0.0)
    throw std::invalid_argument("HagParams: kappa must be > 0");
  if (!std::isfinite(mu_sigma)) throw std::invalid_argument("HagParams: mu_sigma must be finite");
  if (!std::isfinite(beta_s) || beta_s < 0.0)
    throw std::invalid_argument("HagParams: beta_s must be >= 0");
  if (!std::isfinite(xi) || xi < 0.01 || xi > 2.0)
    throw std::invalid_argument("HagParams: xi must lie in [0.01, 2]");
  if (!std::isfinite(theta) || theta < 1.0)
    throw std::invalid_argument("HagParams: theta must be >= 1");
  if (branching_ratio(eta, kappa) >= kMaxBranchingRatio)
    throw std::invalid_argument("HagParams: branching ratio eta/(exp(kappa)-1) must be < 0.95");
}

std::vector<double> ar1_scan(double phi, const std::vector<double>& w_f) {
  std::vector<double> z(w_f.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < w_f.size(); ++t) {
    prev = phi * prev + w_f[t];
    z[t] = prev;
  }
  return z;
}

double hawkes_intensity(const HagParams& p, double z_t,
                        const std::vector<std::uint64_t>& prior_counts) {
  // Horner form of sum_s N_s e^{-kappa (t-s)}; the same accumulation order is
  // used by the likelihood and the simulator, so intensities agree bitwise.
  const double decay = std::exp(-p.kappa);
  double excitation = 0.0;
  for (const std::uint64_t n : prior_counts)
    excitation = decay * (excitation + static_cast<double>(n));
  const double lambda = std::exp(p.mu_lambda + p.alpha * z_t) + p.eta * excitation;
  if (!std::isfinite(lambda))
    throw std::runtime_error("hawkes_intensity: intensity overflowed to a non-finite value");
  return lambda;
}

double branching_ratio(double eta, double kappa) {
  // sum_{k>=1} eta exp(-kappa k) = eta exp(-kappa) / (1 - exp(-kappa))
  return eta / std::expm1(kappa);
}

// --- natural-scale log-likelihoods -----------------------------------------

namespace {

// Sum of GPD log-densities for one year's exceedances with scale sigma.
double gpd_year_loglik(const std::vector<double>& exc, double sigma, double xi) {
  const double log_sigma = std::log(sigma);
  double lp = 0.0;
  for (double y : exc) {
    if (!(y >= 0.0)) return -kInf;
    lp += -log_sigma - (1.0 + 1.0 / xi) * std::log1p(xi * y / sigma);
  }
  return lp;
}

}  // namespace

double loglik_indep(const IndepParams& p, const PanelDataset& data) {
  if (!std::isfinite(p.mu_lambda) || !std::isfinite(p.mu_sigma)) return -kInf;
  if (!(p.xi > 0.0) || !std::isfinite(p.xi)) return -kInf;
  if (p.mu_lambda > kMaxLogIntensity) return -kInf;
  const double lambda = std::exp(p.mu_lambda);
  const double sigma = std::exp(p.mu_sigma);
  if (!std::isfinite(sigma) || sigma <= 0.0) return -kInf;
  double lp = 0.0;
  for (int t = 0; t < data.years(); ++t) {
    lp += poisson_logpmf(data.counts[static_cast<std::size_t>(t)], lambda);
    lp += gpd_year_loglik(data.exceedances[static_cast<std::size_t>(t)], sigma, p.xi);
  }
  return lp;
}

double loglik_shared(const SharedParams& p, const std::vector<double>& z,
                     const PanelDataset& data) {
  if (!std::isfinite(p.mu_lambda) || !std::isfinite(p.mu_sigma)) return -kInf;
  if (!std::isfinite(p.alpha) || p.alpha < 0.0) return -kInf;
  if (!std::isfinite(p.beta) || p.beta < 0.0) return -kInf;
  if (!(p.xi > 0.0) || !std::isfinite(p.xi)) return -kInf;
  if (z.size() != static_cast<std::size_t>(data.years()))
    throw std::invalid_argument("loglik_shared: latent path length must equal panel years");
  double lp = 0.0;
  for (int t = 0; t < data.years(); ++t) {
    const auto ti = static_cast<std::size_t>(t);
    if (!std::isfinite(z[ti])) return -kInf;
    const double e_freq = p.mu_lambda + p.alpha * z[ti];
    if (e_freq > kMaxLogIntensity) return -kInf;
    lp += poisson_logpmf(data.counts[ti], std::exp(e_freq));
    const double sigma = std::exp(p.mu_sigma + p.beta * z[ti]);
    if (!std::isfinite(sigma) || sigma <= 0.0) return -kInf;
    lp += gpd_year_loglik(data.exceedances[ti], sigma, p.xi);
  }
  return lp;
}

double loglik_hag(const HagParams& p, const LatentState& lat, const PanelDataset& data) {
  const auto T = static_cast<std::size_t>(data.years());
  if (lat.w_f.size() != T || lat.w_s.size() != T)
    throw std::invalid_argument("loglik_hag: latent path lengths must equal panel years");
  if (!std::isfinite(p.mu_lambda) || !std::isfinite(p.mu_sigma)) return -kInf;
  if (!std::isfinite(p.phi) || p.phi <= -1.0 || p.phi >= 1.0) return -kInf;
  if (!std::isfinite(p.alpha) || p.alpha < 0.0) return -kInf;
  if (!std::isfinite(p.eta) || p.eta < 0.0) return -kInf;
  if (!std::isfinite(p.kappa) || p.kappa <= 0.0) return -kInf;
  if (!std::isfinite(p.beta_s) || p.beta_s < 0.0) return -kInf;
  if (!(p.xi > 0.0) || !std::isfinite(p.xi)) return -kInf;
  if (!std::isfinite(p.theta) || p.theta < 1.0) return -kInf;
  if (!(branching_ratio(p.eta, p.kappa) < kMaxBranchingRatio)) return -kInf;

  const std::vector<double> z = ar1_scan(p.phi, lat.w_f);
  const double decay = std::exp(-p.kappa);
  double excitation = 0.0;  // sum_{s<t} N_s exp(-kappa (t-s))
  double lp = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!std::isfinite(lat.w_f[t]) || !std::isfinite(lat.w_s[t])) return -kInf;
    if (t > 0)
      excitation = decay * (excitation + static_cast<double>(data.counts[t - 1]));
    const double e_freq = p.mu_lambda + p.alpha * z[t];
    if (e_freq > kMaxLogIntensity) return -kInf;
    const double lambda = std::exp(e_freq) + p.eta * excitation;
    lp += poisson_logpmf(data.counts[t], lambda);
    const double sigma = std::exp(p.mu_sigma + p.beta_s * lat.w_s[t]);
    if (!std::isfinite(sigma) || sigma <= 0.0) return -kInf;
    lp += gpd_year_loglik(data.exceedances[t], sigma, p.xi);
    const GumbelLogpdfGrad cg = gumbel_logpdf_grad(std_normal_cdf(lat.w_f[t]),
                                                   std_normal_cdf(lat.w_s[t]), {p.theta});
    lp += cg.value;
  }
  return std::isfinite(lp) ? lp : -kInf;
}

// --- log-priors --------------------------------------------------------------

namespace {

double structural_logprior(ModelTag tag, const double* vals) {
  const auto& tab = structural_params(tag);
  double lp = 0.0;
  for (std::size_t i = 0; i < tab.size(); ++i) {
    const double term = tab[i].prior.logpdf(vals[i]);
    if (term == -kInf) return -kInf;
    lp += term;
  }
  return lp;
}

double latent_logprior(const std::vector<double>& w) {
  double lp = 0.0;
  for (double x : w) lp += -kHalfLog2Pi - 0.5 * x * x;
  return lp;
}

}  // namespace

double logprior_indep(const IndepParams& p) {
  const double vals[] = {p.mu_lambda, p.mu_sigma, p.xi};
  return structural_logprior(ModelTag::kIndep, vals);
}

double logprior_shared(const SharedParams& p, const std::vector<double>& z) {
  const double vals[] = {p.mu_lambda, p.alpha, p.mu_sigma, p.beta, p.xi};
  const double lp = structural_logprior(ModelTag::kShared, vals);
  return lp == -kInf ? -kInf : lp + latent_logprior(z);
}

double logprior_hag(const HagParams& p, const LatentState& lat) {
  const double vals[] = {p.phi,   p.mu_lambda, p.alpha, p.eta, p.kappa,
                         p.mu_sigma, p.beta_s, p.xi,    p.theta};
  double lp = structural_logprior(ModelTag::kHag, vals);
  if (lp == -kInf) return -kInf;
  if (!(p.kappa > 0.0) || !(branching_ratio(p.eta, p.kappa) < kMaxBranchingRatio)) return -kInf;
  return lp + latent_logprior(lat.w_f) + latent_logprior(lat.w_s);
}

// --- parameter tables ---------------------------------------------------------

const std::vector<ParamInfo>& structural_params(ModelTag tag) {
  static const std::vector<ParamInfo> indep = {
      {"mu_lambda", identity_transform(), normal_prior(3.0, 1.5)},
      {"mu_sigma", identity_transform(), normal_prior(14.0, 2.0)},
      {"xi", scaled_logit_transform(0.01, 2.0), trunc_normal_prior(0.5, 0.5, 0.01, 2.0)},
  };
  static const std::vector<ParamInfo> shared = {
      {"mu_lambda", identity_transform(), normal_prior(3.0, 1.5)},
      {"alpha", log_transform(), half_normal_prior(1.0)},
      {"mu_sigma", identity_transform(), normal_prior(14.0, 2.0)},
      {"beta", log_transform(), half_normal_prior(1.0)},
      {"xi", scaled_logit_transform(0.01, 2.0), trunc_normal_prior(0.5, 0.5, 0.01, 2.0)},
  };
  static const std::vector<ParamInfo> hag = {
      {"phi", logit01_transform(), beta_prior(5.0, 2.0)},
      {"mu_lambda", identity_transform(), normal_prior(3.0, 1.5)},
      {"alpha", log_transform(), half_normal_prior(1.0)},
      {"eta", log_transform(), half_normal_prior(0.3)},
      {"kappa", log_transform(), half_normal_prior(1.0)},
      {"mu_sigma", identity_transform(), normal_prior(14.0, 2.0)},
      {"beta_s", log_transform(), half_normal_prior(1.0)},
      {"xi", scaled_logit_transform(0.01, 2.0), trunc_normal_prior(0.5, 0.5, 0.01, 2.0)},
      {"theta", log_shift1_transform(), shifted_half_normal_prior(1.5)},
  };
  switch (tag) {
    case ModelTag::kIndep: return indep;
    case ModelTag::kShared: return shared;
    case ModelTag::kHag: return hag;
  }
  throw std::invalid_argument("structural_params: unknown model tag");
}

std::size_t latent_count(ModelTag tag, int years) {
  if (years < 0) throw std::invalid_argument("latent_count: years must be >= 0");
  const auto T = static_cast<std::size_t>(years);
  switch (tag) {
    case ModelTag::kIndep: return 0;
    case ModelTag::kShared: return T;
    case ModelTag::kHag: return 2 * T;
  }
  throw std::invalid_argument("latent_count: unknown model tag");
}

std::vector<std::string> param_names(ModelTag tag, int years) {
  std::vector<std::string> names;
  for (const ParamInfo& info : structural_params(tag)) names.emplace_back(info.name);
  const auto T = static_cast<std::size_t>(years);
  if (tag == ModelTag::kShared) {
    for (std::size_t t = 0; t < T; ++t) names.push_back("z[" + std::to_string(t) + "]");
  } else if (tag == ModelTag::kHag) {
    for (std::size_t t = 0; t < T; ++t) names.push_back("w_f[" + std::to_string(t) + "]");
    for (std::size_t t = 0; t < T; ++t) names.push_back("w_s[" + std::to_string(t) + "]");
  }
  return names;
}

// --- posterior ----------------------------------------------------------------

Posterior::Posterior(ModelTag tag, PanelDataset data)
    : tag_(tag), data_(std::move(data)) {
  data_.validate();
  dim_ = structural_params(tag_).size() + latent_count(tag_, data_.years());
  names_ = param_names(tag_, data_.years());
}

double Posterior::value(const std::vector<double>& v) const { return eval(v, nullptr); }

double Posterior::value_and_grad(const std::vector<double>& v,
                                 std::vector<double>& grad) const {
  grad.assign(dim_, 0.0);
  return eval(v, &grad);
}

double Posterior::eval(const std::vector<double>& v, std::vector<double>* grad) const {
  if (v.size() != dim_)
    throw std::invalid_argument("Posterior: point has wrong dimension");
  switch (tag_) {
    case ModelTag::kIndep: return eval_indep(v, grad);
    case ModelTag::kShared: return eval_shared(v, grad);
    case ModelTag::kHag: return eval_hag(v, grad);
  }
  throw std::invalid_argument("Posterior: unknown model tag");
}

namespace {

// Transform the structural block to the natural scale, accumulating the
// log-Jacobian and prior terms; returns false if anything lands outside
// support (caller rejects).
bool structural_block(const std::vector<ParamInfo>& tab, const std::vector<double>& v,
                      double* nat, double* dlogp, double* lp) {
  for (std::size_t i = 0; i < tab.size(); ++i) {
    nat[i] = tab[i].transform.to_natural(v[i]);
    if (!std::isfinite(nat[i])) return false;
    const double prior = tab[i].prior.logpdf(nat[i]);
    if (!std::isfinite(prior)) return false;
    *lp += tab[i].transform.log_jacobian(v[i]) + prior;
    dlogp[i] = tab[i].prior.dlogpdf(nat[i]);
  }
  return true;
}

// Map natural-scale structural gradients back to the unconstrained scale,
// adding the Jacobian derivative.
void chain_structural(const std::vector<ParamInfo>& tab, const std::vector<double>& v,
                      const double* dnat, std::vector<double>& grad) {
  for (std::size_t i = 0; i < tab.size(); ++i)
    grad[i] = dnat[i] * tab[i].transform.dnat_dv(v[i]) + tab[i].transform.dlogj_dv(v[i]);
}

// Per-exceedance GPD terms for one year:
//   d/dmu_sigma = -1 + (1+xi) y / (sigma + xi y)   (accumulated in *dscale)
//   d/dxi       = log1p(xi y/sigma)/xi^2 - (1+1/xi) y/(sigma + xi y)
double gpd_year_terms(const std::vector<double>& exc, double sigma, double xi,
                      double log_sigma, double* dscale, double* dxi) {
  double lp = 0.0;
  for (double y : exc) {
    const double ratio = xi * y / sigma;
    const double denom = sigma + xi * y;
    lp += -log_sigma - (1.0 + 1.0 / xi) * std::log1p(ratio);
    *dscale += -1.0 + (1.0 + xi) * y / denom;
    *dxi += std::log1p(ratio) / (xi * xi) - (1.0 + 1.0 / xi) * y / denom;
  }
  return lp;
}

}  // namespace

double Posterior::eval_indep(const std::vector<double>& v, std::vector<double>* grad) const {
  const auto& tab = structural_params(ModelTag::kIndep);
  double nat[3], dprior[3];
  double lp = 0.0;
  if (!structural_block(tab, v, nat, dprior, &lp)) return reject(grad);
  const double mu_lambda = nat[0], mu_sigma = nat[1], xi = nat[2];
  if (mu_lambda > kMaxLogIntensity) return reject(grad);

  const double lambda = std::exp(mu_lambda);
  const double sigma = std::exp(mu_sigma);
  if (!std::isfinite(sigma) || sigma <= 0.0) return reject(grad);
  const double log_sigma = mu_sigma;

  double dmu_lambda = 0.0, dmu_sigma = 0.0, dxi = 0.0;
  for (int t = 0; t < data_.years(); ++t) {
    const auto ti = static_cast<std::size_t>(t);
    lp += poisson_logpmf(data_.counts[ti], lambda);
    dmu_lambda += static_cast<double>(data_.counts[ti]) - lambda;
    lp += gpd_year_terms(data_.exceedances[ti], sigma, xi, log_sigma, &dmu_sigma, &dxi);
  }
  if (!std::isfinite(lp)) return reject(grad);
  if (grad != nullptr) {
    const double dnat[] = {dmu_lambda + dprior[0], dmu_sigma + dprior[1], dxi + dprior[2]};
    chain_structural(tab, v, dnat, *grad);
    check_grad_finite(*grad);
  }
  return lp;
}

double Posterior::eval_shared(const std::vector<double>& v, std::vector<double>* grad) const {
  const auto& tab = structural_params(ModelTag::kShared);
  const auto T = static_cast<std::size_t>(data_.years());
  double nat[5], dprior[5];
  double lp = 0.0;
  if (!structural_block(tab, v, nat, dprior, &lp)) return reject(grad);
  const double mu_lambda = nat[0], alpha = nat[1], mu_sigma = nat[2], beta = nat[3],
               xi = nat[4];
  const double* z = v.data() + 5;

  double dmu_lambda = 0.0, dalpha = 0.0, dmu_sigma = 0.0, dbeta = 0.0, dxi = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double e_freq = mu_lambda + alpha * z[t];
    if (e_freq > kMaxLogIntensity) return reject(grad);
    const double lambda = std::exp(e_freq);
    lp += poisson_logpmf(data_.counts[t], lambda);
    const double pois = static_cast<double>(data_.counts[t]) - lambda;
    dmu_lambda += pois;
    dalpha += pois * z[t];
    double gz = alpha * pois;

    const double log_sigma = mu_sigma + beta * z[t];
    const double sigma = std::exp(log_sigma);
    if (!std::isfinite(sigma) || sigma <= 0.0) return reject(grad);
    double gscale = 0.0;
    lp += gpd_year_terms(data_.exceedances[t], sigma, xi, log_sigma, &gscale, &dxi);
    dmu_sigma += gscale;
    dbeta += gscale * z[t];
    gz += beta * gscale;

    lp += -kHalfLog2Pi - 0.5 * z[t] * z[t];
    if (grad != nullptr) (*grad)[5 + t] = gz - z[t];
  }
  if (!std::isfinite(lp)) return reject(grad);
  if (grad != nullptr) {
    const double dnat[] = {dmu_lambda + dprior[0], dalpha + dprior[1], dmu_sigma + dprior[2],
                           dbeta + dprior[3], dxi + dprior[4]};
    chain_structural(tab, v, dnat, *grad);
    check_grad_finite(*grad);
  }
  return lp;
}

double Posterior::eval_hag(const std::vector<double>& v, std::vector<double>* grad) const {
  const auto& tab = structural_params(ModelTag::kHag);
  const auto T = static_cast<std::size_t>(data_.years());
  double nat[9], dprior[9];
  double lp = 0.0;
  if (!structural_block(tab, v, nat, dprior, &lp)) return reject(grad);
  const double phi = nat[0], mu_lambda = nat[1], alpha = nat[2], eta = nat[3],
               kappa = nat[4], mu_sigma = nat[5], beta_s = nat[6], xi = nat[7],
               theta = nat[8];
  const double* w_f = v.data() + 9;
  const double* w_s = v.data() + 9 + T;

  // Points past the stationarity wall keep a hard -infinity value (so they
  // are never selected) but still get a smooth gradient plus a quadratic
  // restoring barrier, so that leapfrog states beyond the wall stay finite.
  const double r = branching_ratio(eta, kappa);
  const bool subcritical = r < kMaxBranchingRatio;
  // Far past the wall (or at a degenerate ratio) the barrier gradient itself
  // would be enormous; a plain zero-gradient rejection is safer there.
  if (!subcritical && !(r <= 10.0)) return reject(grad);

  // z_t = phi z_{t-1} + w_f_t; excitation recursions share the decay factor:
  //   E_t = sum_{s<t} N_s e^{-kappa(t-s)},  D_t = dE_t/dkappa * (-1)
  std::vector<double> z(T), excite(T), dexcite(T);
  const double decay = std::exp(-kappa);
  {
    double prev = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      prev = phi * prev + w_f[t];
      z[t] = prev;
    }
    excite[0] = 0.0;
    dexcite[0] = 0.0;
    for (std::size_t t = 1; t < T; ++t) {
      const double n_prev = static_cast<double>(data_.counts[t - 1]);
      excite[t] = decay * (excite[t - 1] + n_prev);
      dexcite[t] = decay * (dexcite[t - 1] + excite[t - 1] + n_prev);
    }
  }

  double dmu_lambda = 0.0, dalpha = 0.0, deta = 0.0, dkappa = 0.0, dmu_sigma = 0.0,
         dbeta_s = 0.0, dxi = 0.0, dtheta = 0.0;
  std::vector<double> gz(T), gwf(T), gws(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double e_freq = mu_lambda + alpha * z[t];
    if (e_freq > kMaxLogIntensity) return reject(grad);
    const double base = std::exp(e_freq);
    const double lambda = base + eta * excite[t];
    lp += poisson_logpmf(data_.counts[t], lambda);
    // d logpmf / d lambda = N/lambda - 1, then chain into each component.
    const double pois = static_cast<double>(data_.counts[t]) / lambda - 1.0;
    dmu_lambda += pois * base;
    dalpha += pois * base * z[t];
    gz[t] = alpha * pois * base;
    deta += pois * excite[t];
    dkappa += -pois * eta * dexcite[t];

    const double log_sigma = mu_sigma + beta_s * w_s[t];
    const double sigma = std::exp(log_sigma);
    if (!std::isfinite(sigma) || sigma <= 0.0) return reject(grad);
    double gscale = 0.0;
    lp += gpd_year_terms(data_.exceedances[t], sigma, xi, log_sigma, &gscale, &dxi);
    dmu_sigma += gscale;
    dbeta_s += gscale * w_s[t];
    gws[t] = beta_s * gscale;

    const GumbelLogpdfGrad cg =
        gumbel_logpdf_grad(std_normal_cdf(w_f[t]), std_normal_cdf(w_s[t]), {theta});
    lp += cg.value;
    dtheta += cg.dtheta;
    gwf[t] = cg.du * std_normal_pdf(w_f[t]);
    gws[t] += cg.dv * std_normal_pdf(w_s[t]);

    lp += -2.0 * kHalfLog2Pi - 0.5 * (w_f[t] * w_f[t] + w_s[t] * w_s[t]);
    gws[t] -= w_s[t];
  }

  // Reverse AR(1) sweep: zbar_t = gz_t + phi zbar_{t+1};
  // dphi += zbar_t z_{t-1}; the innovation gradient is zbar_t itself.
  double dphi = 0.0;
  {
    double carry = 0.0;
    for (std::size_t t = T; t-- > 1;) {
      const double zbar = gz[t] + phi * carry;
      dphi += zbar * z[t - 1];
      gwf[t] += zbar - w_f[t];
      carry = zbar;
    }
    gwf[0] += gz[0] + phi * carry - w_f[0];
  }

  if (!std::isfinite(lp)) return reject(grad);
  if (grad != nullptr) {
    if (!subcritical) {
      // Quadratic barrier gradient: d/dr [-1e6 (r - rmax)^2] chained through
      // dr/deta = r/eta and dr/dkappa = -r/(1 - e^{-kappa}).
      const double db_dr = -2.0e6 * (r - kMaxBranchingRatio);
      if (eta > 0.0) deta += db_dr * (r / eta);
      dkappa += db_dr * (-r / (1.0 - decay));
    }
    const double dnat[] = {dphi + dprior[0],      dmu_lambda + dprior[1],
                           dalpha + dprior[2],    deta + dprior[3],
                           dkappa + dprior[4],    dmu_sigma + dprior[5],
                           dbeta_s + dprior[6],   dxi + dprior[7],
                           dtheta + dprior[8]};
    chain_structural(tab, v, dnat, *grad);
    for (std::size_t t = 0; t < T; ++t) {
      (*grad)[9 + t] = gwf[t];
      (*grad)[9 + T + t] = gws[t];
    }
    if (subcritical) check_grad_finite(*grad);
  }
  return subcritical ? lp : -kInf;
}

std::vector<double> Posterior::to_natural(const std::vector<double>& v) const {
  if (v.size() != dim_)
    throw std::invalid_argument("to_natural: point has wrong dimension");
  const auto& tab = structural_params(tag_);
  std::vector<double> out(v);
  for (std::size_t i = 0; i < tab.size(); ++i) out[i] = tab[i].transform.to_natural(v[i]);
  return out;
}

std::vector<double> Posterior::to_unconstrained(const std::vector<double>& natural) const {
  if (natural.size() != dim_)
    throw std::invalid_argument("to_unconstrained: point has wrong dimension");
  const auto& tab = structural_params(tag_);
  std::vector<double> out(natural);
  for (std::size_t i = 0; i < tab.size(); ++i)
    out[i] = tab[i].transform.to_unconstrained(natural[i]);
  return out;
}

std::vector<double> Posterior::init_unconstrained(Rng& rng) const {
  const auto& tab = structural_params(tag_);
  std::vector<double> v(dim_, 0.0);
  for (std::size_t i = 0; i < tab.size(); ++i)
    v[i] = tab[i].transform.to_unconstrained(tab[i].prior.median());
  for (std::size_t i = 0; i < dim_; ++i) v[i] += rng.uniform() - 0.5;
  return v;
}

}  // namespace oprisk
