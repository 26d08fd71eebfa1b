#include "oprisk/simulator.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "oprisk/copula.hpp"
#include "oprisk/distributions.hpp"
#include "oprisk/io.hpp"
#include "oprisk/rng.hpp"

namespace oprisk {

SimulatedPanel simulate_panel(const HagParams& p, int years, double threshold_u,
                              std::uint64_t seed) {
  p.validate();
  if (years < 1) throw std::invalid_argument("simulate_panel: years must be >= 1");
  if (!std::isfinite(threshold_u) || threshold_u <= 0.0)
    throw std::invalid_argument("simulate_panel: threshold must be positive");

  Rng rng(seed);
  const auto T = static_cast<std::size_t>(years);

  // Copula innovations first, then the derived stress path.
  LatentState lat;
  lat.w_f.resize(T);
  lat.w_s.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto [u, v] = gumbel_sample({p.theta}, rng);
    lat.w_f[t] = std_normal_quantile(u);
    lat.w_s[t] = std_normal_quantile(v);
  }
  lat.z = ar1_scan(p.phi, lat.w_f);

  PanelDataset data;
  data.threshold_u = threshold_u;
  data.counts.resize(T);
  data.exceedances.resize(T);
  std::vector<double> intensities(T);
  const double decay = std::exp(-p.kappa);
  double excitation = 0.0;  // sum_{s<t} N_s exp(-kappa (t-s))
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0)
      excitation = decay * (excitation + static_cast<double>(data.counts[t - 1]));
    const double lambda = std::exp(p.mu_lambda + p.alpha * lat.z[t]) + p.eta * excitation;
    if (!std::isfinite(lambda))
      throw std::runtime_error("simulate_panel: intensity overflowed at year " +
                               std::to_string(t + 1));
    intensities[t] = lambda;
    const std::uint64_t n = poisson_sample(lambda, rng);
    data.counts[t] = n;
    const GpdParams gp{std::exp(p.mu_sigma + p.beta_s * lat.w_s[t]), p.xi};
    auto& exc = data.exceedances[t];
    exc.resize(n);
    for (std::uint64_t k = 0; k < n; ++k) exc[k] = gpd_sample(gp, rng);
  }
  return {std::move(data), DgpTruth{p, std::move(lat), std::move(intensities)}};
}

void export_truth(const DgpTruth& truth, const std::string& path) {
  nlohmann::json j;
  j["params"] = {{"phi", truth.params.phi},
                 {"mu_lambda", truth.params.mu_lambda},
                 {"alpha", truth.params.alpha},
                 {"eta", truth.params.eta},
                 {"kappa", truth.params.kappa},
                 {"mu_sigma", truth.params.mu_sigma},
                 {"beta_s", truth.params.beta_s},
                 {"xi", truth.params.xi},
                 {"theta", truth.params.theta}};
  j["latents"] = {{"w_f", truth.latents.w_f},
                  {"w_s", truth.latents.w_s},
                  {"z", truth.latents.z}};
  j["intensities"] = truth.intensities;
  write_text_atomic(path, j.dump(2) + "\n");
}

DgpTruth import_truth(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  DgpTruth truth;
  try {
    const auto& p = j.at("params");
    truth.params.phi = p.at("phi").get<double>();
    truth.params.mu_lambda = p.at("mu_lambda").get<double>();
    truth.params.alpha = p.at("alpha").get<double>();
    truth.params.eta = p.at("eta").get<double>();
    truth.params.kappa = p.at("kappa").get<double>();
    truth.params.mu_sigma = p.at("mu_sigma").get<double>();
    truth.params.beta_s = p.at("beta_s").get<double>();
    truth.params.xi = p.at("xi").get<double>();
    truth.params.theta = p.at("theta").get<double>();
    const auto& l = j.at("latents");
    truth.latents.w_f = l.at("w_f").get<std::vector<double>>();
    truth.latents.w_s = l.at("w_s").get<std::vector<double>>();
    truth.latents.z = l.at("z").get<std::vector<double>>();
    truth.intensities = j.at("intensities").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": bad truth file: " + e.what());
  }
  truth.params.validate();
  const std::size_t T = truth.latents.w_f.size();
  if (truth.latents.w_s.size() != T || truth.latents.z.size() != T ||
      truth.intensities.size() != T)
    throw std::runtime_error(path + ": bad truth file: latent/intensity lengths disagree");
  for (double lam : truth.intensities)
    if (!std::isfinite(lam) || lam <= 0.0)
      throw std::runtime_error(path + ": bad truth file: intensities must be positive");
  return truth;
}

}  // namespace oprisk
