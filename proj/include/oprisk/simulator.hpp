#ifndef OPRISK_SIMULATOR_HPP
#define OPRISK_SIMULATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "oprisk/models.hpp"
#include "oprisk/panel.hpp"

namespace oprisk {

// Ground truth behind a simulated panel: the generating parameters, the
// latent innovation/stress paths, and the per-year intensities.
struct DgpTruth {
  HagParams params;
  LatentState latents;
  std::vector<double> intensities;
};

struct SimulatedPanel {
  PanelDataset data;
  DgpTruth truth;
};

// Draws one synthetic panel: Gumbel copula innovation pairs, normal-score
// transform, AR(1) stress, Hawkes-augmented Poisson counts, and GPD
// exceedances with per-year scale exp(mu_sigma + beta_s w_s). Deterministic
// given the seed. Throws std::runtime_error (naming the year) if an
// intensity overflows, std::invalid_argument on bad arguments.
SimulatedPanel simulate_panel(const HagParams& p, int years, double threshold_u,
                              std::uint64_t seed);

// JSON round-trip of the ground truth (schema documented in the README).
void export_truth(const DgpTruth& truth, const std::string& path);
DgpTruth import_truth(const std::string& path);

}  // namespace oprisk

#endif
