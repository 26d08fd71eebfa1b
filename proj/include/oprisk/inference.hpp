#ifndef OPRISK_INFERENCE_HPP
#define OPRISK_INFERENCE_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oprisk/models.hpp"
#include "oprisk/panel.hpp"
#include "oprisk/target.hpp"

namespace oprisk {

struct SamplerConfig {
  int chains = 2;
  int warmup = 2000;
  int draws = 2000;
  double target_accept = 0.90;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Per-chain adaptation outcome, kept for reporting and reuse.
struct AdaptationRecord {
  double step_size = 0.0;
  std::vector<double> inv_metric;  // diagonal of the inverse mass matrix
};

// Posterior draws on the natural (constrained) scale, stored per chain in
// iteration order, one row of dim() values per draw.
struct PosteriorDraws {
  ModelTag model = ModelTag::kIndep;
  int years = 0;
  double threshold_u = 0.0;
  std::uint64_t seed = 0;
  int chains = 0;
  int draws_per_chain = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;            // per chain, row-major
  std::vector<std::vector<std::uint8_t>> divergent;   // per chain, per draw
  std::vector<AdaptationRecord> adaptation;           // per chain
  std::vector<int> depth_saturations;                 // per chain, post-warmup

  std::size_t dim() const { return names.size(); }

  // One parameter's draws as per-chain vectors (the diagnostics input shape).
  std::vector<std::vector<double>> chains_for(std::size_t param_index) const;
};

// Outcome of one chain on an arbitrary target, on the unconstrained scale.
struct ChainResult {
  std::vector<double> values;  // draws * dim, row-major
  std::vector<std::uint8_t> divergent;
  double step_size = 0.0;
  std::vector<double> inv_metric;
  int depth_saturations = 0;
};

// One adaptive Hamiltonian chain: multinomial tree doubling with the
// momentum-sum U-turn criterion, dual-averaged step size, and a diagonal
// inverse metric learned over expanding warmup windows. `init` is the
// starting point (must have finite density). Deterministic in
// (target, init, cfg, chain_seed). Throws std::runtime_error if every
// warmup iteration diverges.
ChainResult nuts_chain(const LogDensity& target, const std::vector<double>& init,
                       const SamplerConfig& cfg, std::uint64_t chain_seed);

// Fits the requested model to the panel: chain c draws its starting point and
// its sampling stream from derive_seed(cfg.seed, c), retrying the jittered
// initialization up to 100 times for a finite density, then maps draws back
// to the natural scale.
PosteriorDraws sample_posterior(ModelTag tag, const PanelDataset& data, const SamplerConfig& cfg);

// |H(end) - H(start)| over one leapfrog trajectory, for checking integrator
// order (halving the step size should shrink this roughly fourfold).
double hamiltonian_error(const LogDensity& target, const std::vector<double>& q0,
                         const std::vector<double>& p0, const std::vector<double>& inv_metric,
                         double step_size, int steps);

struct ParamSummary {
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double rhat = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
};

// Pooled mean/sd, 94% HDI, and convergence diagnostics per parameter.
std::map<std::string, ParamSummary> summarize(const PosteriorDraws& draws);

// Columnar text round-trip for draws (full precision; adaptation records are
// not persisted).
void write_draws(const PosteriorDraws& draws, const std::string& path);
PosteriorDraws read_draws(const std::string& path);

// Sampler health plus per-parameter summaries as a JSON file.
void write_diagnostics_json(const PosteriorDraws& draws, const std::string& path);

}  // namespace oprisk

#endif
