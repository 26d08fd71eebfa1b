#include "oprisk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "oprisk/distributions.hpp"

namespace oprisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Each chain contributes its first and second half as separate sequences;
// an odd middle draw is dropped.
std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("diagnostics: need at least 2 chains");
  const std::size_t len = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != len)
      throw std::invalid_argument("diagnostics: chains must have equal length");
    if (c.size() < 4)
      throw std::invalid_argument("diagnostics: need at least 4 draws per chain");
  }
  const std::size_t half = len / 2;
  std::vector<std::vector<double>> seqs;
  seqs.reserve(2 * chains.size());
  for (const auto& c : chains) {
    seqs.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    seqs.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return seqs;
}

// Normal scores of pooled ranks, (rank - 3/8) / (S + 1/4), with average
// ranks on ties.
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& seqs) {
  struct Entry {
    double value;
    std::size_t seq, pos;
  };
  std::vector<Entry> pool;
  for (std::size_t j = 0; j < seqs.size(); ++j)
    for (std::size_t i = 0; i < seqs[j].size(); ++i) pool.push_back({seqs[j][i], j, i});
  std::sort(pool.begin(), pool.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  std::vector<std::vector<double>> out(seqs.size());
  for (std::size_t j = 0; j < seqs.size(); ++j) out[j].resize(seqs[j].size());
  const double total = static_cast<double>(pool.size());
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t k = i;
    while (k + 1 < pool.size() && pool[k + 1].value == pool[i].value) ++k;
    const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(k)) + 1.0;
    const double z = std_normal_quantile((avg_rank - 0.375) / (total + 0.25));
    for (std::size_t r = i; r <= k; ++r) out[pool[r].seq][pool[r].pos] = z;
    i = k + 1;
  }
  return out;
}

double sequence_mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sequence_var(const std::vector<double>& x, double mean) {
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(x.size() - 1);
}

// Classic potential-scale-reduction pieces over already-prepared sequences.
struct VarDecomposition {
  double w = 0.0;         // mean within-sequence variance
  double var_means = 0.0; // variance of sequence means (= B/n)
  double var_plus = 0.0;
  std::vector<double> means;
};

VarDecomposition decompose(const std::vector<std::vector<double>>& seqs) {
  VarDecomposition d;
  const double n = static_cast<double>(seqs.front().size());
  for (const auto& s : seqs) {
    const double m = sequence_mean(s);
    d.means.push_back(m);
    d.w += sequence_var(s, m);
  }
  d.w /= static_cast<double>(seqs.size());
  const double grand = sequence_mean(d.means);
  d.var_means = sequence_var(d.means, grand);
  d.var_plus = (n - 1.0) / n * d.w + d.var_means;
  return d;
}

// Mean over sequences of the lag-t autocovariance (biased, normalized by n).
double mean_autocov(const std::vector<std::vector<double>>& seqs,
                    const std::vector<double>& means, std::size_t t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < seqs.size(); ++j) {
    const auto& x = seqs[j];
    const double mu = means[j];
    double c = 0.0;
    for (std::size_t i = 0; i + t < x.size(); ++i) c += (x[i] - mu) * (x[i + t] - mu);
    acc += c / static_cast<double>(x.size());
  }
  return acc / static_cast<double>(seqs.size());
}

// Effective sample size with Geyer initial-positive / initial-monotone
// truncation of the combined autocorrelation sequence.
double ess_core(const std::vector<std::vector<double>>& seqs) {
  const VarDecomposition d = decompose(seqs);
  if (!(d.var_plus > 0.0) || !std::isfinite(d.var_plus)) return kNaN;
  const std::size_t n = seqs.front().size();
  const double total = static_cast<double>(seqs.size() * n);

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0 - (d.w - mean_autocov(seqs, d.means, 0)) / d.var_plus;
  rho[1] = 1.0 - (d.w - mean_autocov(seqs, d.means, 1)) / d.var_plus;
  double rho_even = rho[0];
  double rho_odd = rho[1];
  std::size_t s = 1;
  while (s + 4 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (d.w - mean_autocov(seqs, d.means, s + 1)) / d.var_plus;
    rho_odd = 1.0 - (d.w - mean_autocov(seqs, d.means, s + 2)) / d.var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const std::size_t max_s = s;
  if (rho_even > 0.0 && max_s + 1 < n) rho[max_s + 1] = rho_even;

  // Enforce monotone nonincreasing paired sums.
  for (std::size_t k = 1; k + 3 <= max_s; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
      rho[k + 2] = rho[k + 1];
    }
  }

  double tau = -1.0;
  for (std::size_t k = 0; k < max_s; ++k) tau += 2.0 * rho[k];
  if (max_s + 1 < n) tau += rho[max_s + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return std::min(total / tau, total);
}

double pooled_quantile(const std::vector<std::vector<double>>& chains, double p) {
  std::vector<double> pool;
  for (const auto& c : chains) pool.insert(pool.end(), c.begin(), c.end());
  std::sort(pool.begin(), pool.end());
  const double idx = p * static_cast<double>(pool.size() - 1);
  const auto lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, pool.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return pool[lo] + frac * (pool[hi] - pool[lo]);
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const auto seqs = rank_normalize(split_chains(chains));
  const VarDecomposition d = decompose(seqs);
  if (!(d.w > 0.0) || !std::isfinite(d.w)) return kNaN;
  return std::sqrt(d.var_plus / d.w);
}

double ess_bulk(const std::vector<std::vector<double>>& chains) {
  return ess_core(rank_normalize(split_chains(chains)));
}

double ess_tail(const std::vector<std::vector<double>>& chains) {
  double worst = std::numeric_limits<double>::infinity();
  for (const double p : {0.05, 0.95}) {
    const double q = pooled_quantile(chains, p);
    std::vector<std::vector<double>> indicator(chains.size());
    for (std::size_t j = 0; j < chains.size(); ++j) {
      indicator[j].reserve(chains[j].size());
      for (double v : chains[j]) indicator[j].push_back(v <= q ? 1.0 : 0.0);
    }
    const double e = ess_core(split_chains(indicator));
    if (std::isnan(e)) return kNaN;
    worst = std::min(worst, e);
  }
  return worst;
}

std::pair<double, double> hdi(std::vector<double> values, double mass) {
  if (values.empty()) throw std::invalid_argument("hdi: no draws");
  if (!(mass > 0.0) || mass > 1.0) throw std::invalid_argument("hdi: mass must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n)));
  k = std::max<std::size_t>(1, std::min(k, n));
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= n; ++i) {
    const double width = values[i + k - 1] - values[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {values[best], values[best + k - 1]};
}

}  // namespace oprisk
