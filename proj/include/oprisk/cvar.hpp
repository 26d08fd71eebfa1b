#ifndef OPRISK_CVAR_HPP
#define OPRISK_CVAR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "oprisk/inference.hpp"
#include "oprisk/models.hpp"
#include "oprisk/rng.hpp"

namespace oprisk {

// VaR/CVaR estimates per confidence level with Monte Carlo metadata.
// Invariants: cvar[k] >= var[k]; var and cvar nondecreasing in the level.
struct CvarReport {
  ModelTag model = ModelTag::kIndep;
  std::uint64_t seed = 0;
  std::int64_t m_draws = 0;
  double threshold_u = 0.0;
  std::vector<double> levels;
  std::vector<double> var;
  std::vector<double> cvar;
  std::vector<double> mc_standard_error;   // tail sd / sqrt(tail count)
  std::vector<std::uint8_t> low_tail;      // fewer than 10 tail samples at this level
};

// S = sum_{k<=n} (u + Y_k) with Y_k ~ GPD(sigma, xi); 0 for n = 0.
double severity_sum(std::uint64_t n, double u, double sigma, double xi, Rng& rng);

// One posterior-predictive annual loss. `draw` is a natural-scale parameter
// row (a full draws row is accepted; only the structural prefix is read).
// The Hawkes model draws the stationary stress Z = Z_past + W^f with
// Z_past ~ N(0, phi^2/(1-phi^2)), amplifies the base rate by 1/(1-r), and
// caps the Poisson rate at 500; the shared model reuses one standard-normal
// stress for rate and scale (same cap); the independent model is a plain
// compound Poisson at the draw's constant rate and scale.
double simulate_annual_loss(ModelTag model, const std::vector<double>& draw, double u, Rng& rng);

// M annual losses, parameter index resampled uniformly per simulation.
// Simulation i derives its whole random stream from (seed, i), so the result
// is byte-identical for any worker count.
std::vector<double> simulate_losses(const PosteriorDraws& draws, double u, std::int64_t m,
                                    std::uint64_t seed, int workers = 1);

// Estimator core over an arbitrary loss sample: VaR = order statistic at
// ceil(level * M) (lower interpolation, no averaging), CVaR = mean of all
// samples >= VaR. Requires levels in (0, 1) strictly increasing and
// M >= 10/(1 - max level). Model/seed/threshold metadata are left default.
CvarReport cvar_from_losses(std::vector<double> losses, const std::vector<double>& levels);

// Full Algorithm: simulate M losses from the posterior and estimate the tail.
CvarReport estimate_cvar(const PosteriorDraws& draws, double u, const std::vector<double>& levels,
                         std::int64_t m, std::uint64_t seed, int workers = 1);

void write_report_json(const CvarReport& report, const std::string& path);
CvarReport read_report_json(const std::string& path);

// Aligned comparison table (values in millions). One column pair per report;
// when both a hag and an indep report are present a CVaR ratio column is
// appended. Throws std::invalid_argument when levels differ across reports.
std::string format_report_table(const std::vector<CvarReport>& reports);

}  // namespace oprisk

#endif
