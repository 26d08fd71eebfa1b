#include "oprisk/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oprisk/copula.hpp"
#include "oprisk/distributions.hpp"
#include "oprisk/io.hpp"

namespace oprisk {

namespace {

constexpr double kRateCap = 500.0;

// Structural prefix layouts of a natural-scale draws row.
struct IndepView {
  double mu_lambda, mu_sigma, xi;
};
struct SharedView {
  double mu_lambda, alpha, mu_sigma, beta, xi;
};
struct HagView {
  double phi, mu_lambda, alpha, eta, kappa, mu_sigma, beta_s, xi, theta;
};

double annual_loss(ModelTag model, const double* s, double u, Rng& rng) {
  switch (model) {
    case ModelTag::kIndep: {
      const IndepView v{s[0], s[1], s[2]};
      const std::uint64_t n = poisson_sample(std::exp(v.mu_lambda), rng);
      return severity_sum(n, u, std::exp(v.mu_sigma), v.xi, rng);
    }
    case ModelTag::kShared: {
      const SharedView v{s[0], s[1], s[2], s[3], s[4]};
      const double z = normal_sample(rng);
      const double lambda = std::min(std::exp(v.mu_lambda + v.alpha * z), kRateCap);
      const std::uint64_t n = poisson_sample(lambda, rng);
      return severity_sum(n, u, std::exp(v.mu_sigma + v.beta * z), v.xi, rng);
    }
    case ModelTag::kHag: {
      const HagView v{s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7], s[8]};
      const auto [cu, cv] = gumbel_sample(GumbelTheta{v.theta}, rng);
      const double w_f = std_normal_quantile(cu);
      const double w_s = std_normal_quantile(cv);
      const double z_past =
          normal_sample(rng) * (v.phi / std::sqrt(1.0 - v.phi * v.phi));
      const double z = z_past + w_f;
      const double r = branching_ratio(v.eta, v.kappa);
      const double lambda = std::min(std::exp(v.mu_lambda + v.alpha * z) / (1.0 - r), kRateCap);
      const std::uint64_t n = poisson_sample(lambda, rng);
      return severity_sum(n, u, std::exp(v.mu_sigma + v.beta_s * w_s), v.xi, rng);
    }
  }
  throw std::invalid_argument("simulate_annual_loss: unknown model");
}

void check_threshold(double u) {
  if (!(u > 0.0) || !std::isfinite(u))
    throw std::invalid_argument("threshold u must be finite and positive");
}

void check_levels(const std::vector<double>& levels) {
  if (levels.empty()) throw std::invalid_argument("levels must be non-empty");
  double prev = 0.0;
  for (const double q : levels) {
    if (!(q > 0.0) || !(q < 1.0))
      throw std::invalid_argument("levels must lie strictly inside (0, 1)");
    if (!(q > prev)) throw std::invalid_argument("levels must be strictly increasing");
    prev = q;
  }
}

// The predictive recipe requires a subcritical feedback at every draw; a
// hand-edited draws file can violate that, so fail loudly up front.
void check_draws(const PosteriorDraws& draws) {
  if (draws.chains < 1 || draws.draws_per_chain < 1 || draws.values.empty())
    throw std::invalid_argument("estimate_cvar: draws are empty");
  const std::size_t d = draws.dim();
  const std::size_t structural = structural_params(draws.model).size();
  if (d < structural) throw std::invalid_argument("estimate_cvar: draws row shorter than the model");
  for (const auto& chain : draws.values)
    if (chain.size() != static_cast<std::size_t>(draws.draws_per_chain) * d)
      throw std::invalid_argument("estimate_cvar: draws storage does not match its header");
  if (draws.model == ModelTag::kHag) {
    for (const auto& chain : draws.values)
      for (std::size_t k = 0; k + d <= chain.size(); k += d)
        if (!(branching_ratio(chain[k + 3], chain[k + 4]) < kMaxBranchingRatio))
          throw std::invalid_argument("estimate_cvar: a draw has branching ratio >= 0.95");
  }
}

}  // namespace

double severity_sum(std::uint64_t n, double u, double sigma, double xi, Rng& rng) {
  check_threshold(u);
  double total = 0.0;
  const GpdParams p{sigma, xi};
  for (std::uint64_t k = 0; k < n; ++k) total += u + gpd_sample(p, rng);
  return total;
}

double simulate_annual_loss(ModelTag model, const std::vector<double>& draw, double u, Rng& rng) {
  check_threshold(u);
  const std::size_t structural = structural_params(model).size();
  if (draw.size() < structural)
    throw std::invalid_argument("simulate_annual_loss: draw has too few parameters");
  return annual_loss(model, draw.data(), u, rng);
}

std::vector<double> simulate_losses(const PosteriorDraws& draws, double u, std::int64_t m,
                                    std::uint64_t seed, int workers) {
  check_threshold(u);
  check_draws(draws);
  if (m < 1) throw std::invalid_argument("simulate_losses: m must be positive");
  if (workers < 1) throw std::invalid_argument("simulate_losses: workers must be positive");

  const std::size_t d = draws.dim();
  const std::uint64_t per_chain = static_cast<std::uint64_t>(draws.draws_per_chain);
  const std::uint64_t total_draws = static_cast<std::uint64_t>(draws.values.size()) * per_chain;
  const ModelTag model = draws.model;

  std::vector<double> losses(static_cast<std::size_t>(m));
  auto run_block = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      Rng rng(seed, static_cast<std::uint64_t>(i));
      const std::uint64_t j = rng.below(total_draws);
      const double* row =
          draws.values[static_cast<std::size_t>(j / per_chain)].data() + (j % per_chain) * d;
      losses[static_cast<std::size_t>(i)] = annual_loss(model, row, u, rng);
    }
  };

  const int n_workers = static_cast<int>(std::min<std::int64_t>(workers, m));
  if (n_workers == 1) {
    run_block(0, m);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      const std::int64_t begin = m * w / n_workers;
      const std::int64_t end = m * (w + 1) / n_workers;
      pool.emplace_back(run_block, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return losses;
}

CvarReport cvar_from_losses(std::vector<double> losses, const std::vector<double>& levels) {
  check_levels(levels);
  if (losses.empty()) throw std::invalid_argument("cvar_from_losses: no losses");
  const double m = static_cast<double>(losses.size());
  if (m < 10.0 / (1.0 - levels.back()))
    throw std::invalid_argument("cvar_from_losses: fewer than 10 expected tail samples at level " +
                                fmt_g17(levels.back()) + "; increase the simulation count");
  std::sort(losses.begin(), losses.end());

  CvarReport report;
  report.m_draws = static_cast<std::int64_t>(losses.size());
  report.levels = levels;
  for (const double q : levels) {
    const auto rank = static_cast<std::size_t>(std::ceil(q * m));
    const double var = losses[std::max<std::size_t>(rank, 1) - 1];
    const auto tail_begin = std::lower_bound(losses.begin(), losses.end(), var);
    const auto count = static_cast<double>(losses.end() - tail_begin);
    double mean = 0.0;
    for (auto it = tail_begin; it != losses.end(); ++it) mean += *it;
    mean /= count;
    double sq = 0.0;
    for (auto it = tail_begin; it != losses.end(); ++it) sq += (*it - mean) * (*it - mean);
    const double se = count > 1.0 ? std::sqrt(sq / (count - 1.0) / count) : 0.0;

    report.var.push_back(var);
    report.cvar.push_back(mean);
    report.mc_standard_error.push_back(se);
    report.low_tail.push_back(count < 10.0 ? 1 : 0);
  }
  return report;
}

CvarReport estimate_cvar(const PosteriorDraws& draws, double u, const std::vector<double>& levels,
                         std::int64_t m, std::uint64_t seed, int workers) {
  check_levels(levels);
  if (m < 1 || static_cast<double>(m) < 10.0 / (1.0 - levels.back()))
    throw std::invalid_argument("estimate_cvar: m leaves fewer than 10 expected tail samples at level " +
                                fmt_g17(levels.back()));
  CvarReport report = cvar_from_losses(simulate_losses(draws, u, m, seed, workers), levels);
  report.model = draws.model;
  report.seed = seed;
  report.threshold_u = u;
  return report;
}

void write_report_json(const CvarReport& report, const std::string& path) {
  nlohmann::json j;
  j["model"] = to_string(report.model);
  j["seed"] = report.seed;
  j["m_draws"] = report.m_draws;
  j["threshold"] = report.threshold_u;
  j["levels"] = report.levels;
  j["var"] = report.var;
  j["cvar"] = report.cvar;
  j["mc_standard_error"] = report.mc_standard_error;
  nlohmann::json warn = nlohmann::json::array();
  for (const auto f : report.low_tail) warn.push_back(f != 0);
  j["low_tail_warning"] = warn;
  write_text_atomic(path, j.dump(2) + "\n");
}

CvarReport read_report_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  try {
    CvarReport r;
    r.model = model_from_string(j.at("model").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.m_draws = j.at("m_draws").get<std::int64_t>();
    r.threshold_u = j.at("threshold").get<double>();
    r.levels = j.at("levels").get<std::vector<double>>();
    r.var = j.at("var").get<std::vector<double>>();
    r.cvar = j.at("cvar").get<std::vector<double>>();
    r.mc_standard_error = j.at("mc_standard_error").get<std::vector<double>>();
    for (const auto& f : j.at("low_tail_warning")) r.low_tail.push_back(f.get<bool>() ? 1 : 0);
    const std::size_t k = r.levels.size();
    if (r.var.size() != k || r.cvar.size() != k || r.mc_standard_error.size() != k ||
        r.low_tail.size() != k)
      throw std::runtime_error(path + ": bad report file: array lengths differ");
    check_levels(r.levels);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": bad report file: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": bad report file: " + e.what());
  }
}

std::string format_report_table(const std::vector<CvarReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("format_report_table: no reports");
  const std::vector<double>& levels = reports.front().levels;
  for (const auto& r : reports)
    if (r.levels != levels)
      throw std::invalid_argument("format_report_table: reports use different levels");

  const CvarReport* indep = nullptr;
  const CvarReport* hag = nullptr;
  for (const auto& r : reports) {
    if (r.model == ModelTag::kIndep && indep == nullptr) indep = &r;
    if (r.model == ModelTag::kHag && hag == nullptr) hag = &r;
  }
  const bool ratio = indep != nullptr && hag != nullptr;

  char buf[64];
  std::string out = "VaR / CVaR in millions, M = " + std::to_string(reports.front().m_draws) + "\n";
  out += "level     ";
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, " %10s-VaR %10s-CVaR", to_string(r.model).c_str(),
                  to_string(r.model).c_str());
    out += buf;
  }
  if (ratio) out += "   HAG/Indep-CVaR";
  out += '\n';
  for (std::size_t k = 0; k < levels.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%8.3f%%", 100.0 * levels[k]);
    out += buf;
    out += ' ';
    for (const auto& r : reports) {
      std::snprintf(buf, sizeof buf, " %14.1f %15.1f", r.var[k] / 1e6, r.cvar[k] / 1e6);
      out += buf;
    }
    if (ratio) {
      std::snprintf(buf, sizeof buf, "   %.2fx", hag->cvar[k] / indep->cvar[k]);
      out += buf;
    }
    for (const auto& r : reports)
      if (r.low_tail[k]) {
        out += "   [low tail]";
        break;
      }
    out += '\n';
  }
  return out;
}

}  // namespace oprisk
