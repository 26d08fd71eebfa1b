#ifndef OPRISK_DIAGNOSTICS_HPP
#define OPRISK_DIAGNOSTICS_HPP

#include <utility>
#include <vector>

namespace oprisk {

// Convergence diagnostics over per-chain draws of a single quantity.
// All functions require >= 2 chains with >= 4 draws each and split every
// chain in half internally. Chains that are constant (zero variance after
// rank normalization) make the statistics undefined; NaN is returned as the
// documented not-a-value sentinel.

// Rank-normalized split R-hat: draws are replaced by normal scores of their
// pooled ranks, then the classic sqrt(var_plus / W) statistic is computed
// over the split chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Bulk effective sample size: rank-normalized split chains, combined
// autocorrelations truncated by Geyer's initial-monotone rule.
double ess_bulk(const std::vector<std::vector<double>>& chains);

// Tail effective sample size: minimum ESS of the exceedance indicators for
// the pooled 5% and 95% quantiles.
double ess_tail(const std::vector<std::vector<double>>& chains);

// Shortest interval containing `mass` of the pooled draws; ties resolved
// toward the lower bound. Throws std::invalid_argument on empty input or
// mass outside (0, 1].
std::pair<double, double> hdi(std::vector<double> values, double mass = 0.94);

}  // namespace oprisk

#endif
