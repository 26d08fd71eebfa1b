#include "oprisk/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oprisk/diagnostics.hpp"
#include "oprisk/distributions.hpp"
#include "oprisk/io.hpp"
#include "oprisk/rng.hpp"

namespace oprisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Divergence threshold on the energy error of a single trajectory state.
constexpr double kMaxEnergyError = 1000.0;

// A point in phase space together with the cached density and gradient.
struct Phase {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;
  double logp = -kInf;
};

double kinetic(const std::vector<double>& p, const std::vector<double>& inv_metric) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += inv_metric[i] * p[i] * p[i];
  return 0.5 * k;
}

double hamiltonian(const Phase& z, const std::vector<double>& inv_metric) {
  const double h = -z.logp + kinetic(z.p, inv_metric);
  return std::isnan(h) ? kInf : h;
}

// One leapfrog step of signed size eps. A non-finite position is treated as a
// zero-density point with zero gradient so the momentum stays representable.
void leapfrog(const LogDensity& target, Phase& z, double eps,
              const std::vector<double>& inv_metric) {
  const std::size_t d = z.q.size();
  for (std::size_t i = 0; i < d; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  bool in_range = true;
  for (std::size_t i = 0; i < d; ++i) {
    z.q[i] += eps * inv_metric[i] * z.p[i];
    if (!std::isfinite(z.q[i])) in_range = false;
  }
  if (in_range) {
    z.logp = target.value_and_grad(z.q, z.grad);
  } else {
    z.logp = -kInf;
    std::fill(z.grad.begin(), z.grad.end(), 0.0);
  }
  for (std::size_t i = 0; i < d; ++i) z.p[i] += 0.5 * eps * z.grad[i];
}

void sample_momentum(Phase& z, const std::vector<double>& inv_metric, Rng& rng) {
  for (std::size_t i = 0; i < z.p.size(); ++i)
    z.p[i] = normal_sample(rng) / std::sqrt(inv_metric[i]);
}

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Trajectory extension continues while the momentum sum points away from both
// ends of the subtree (velocities im*p projected onto rho).
bool no_uturn(const std::vector<double>& rho, const std::vector<double>& p_left,
              const std::vector<double>& p_right, const std::vector<double>& inv_metric) {
  double fwd = 0.0;
  double bwd = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    fwd += rho[i] * inv_metric[i] * p_right[i];
    bwd += rho[i] * inv_metric[i] * p_left[i];
  }
  return fwd > 0.0 && bwd > 0.0;
}

struct Tree {
  Phase left, right, prop;
  std::vector<double> rho;
  double log_weight = -kInf;
  double sum_accept = 0.0;
  long n_leaves = 0;
  bool divergent = false;
  bool ok = true;
};

// Builds a balanced subtree of 2^depth leapfrog states extending from `seed`
// in the direction of dir_eps. Draw weights are relative to the energy h0 at
// the trajectory start; the returned proposal is a multinomial draw from the
// subtree. sum_accept / n_leaves accumulates over every computed state even
// when the subtree is abandoned.
Tree build_tree(const LogDensity& target, int depth, double dir_eps, const Phase& seed,
                double h0, const std::vector<double>& inv_metric, Rng& rng) {
  if (depth == 0) {
    Tree t;
    Phase z = seed;
    leapfrog(target, z, dir_eps, inv_metric);
    const double h = hamiltonian(z, inv_metric);
    t.divergent = h - h0 > kMaxEnergyError;
    t.ok = !t.divergent;
    t.log_weight = h0 - h;
    t.sum_accept = std::min(1.0, std::exp(h0 - h));
    t.n_leaves = 1;
    t.rho = z.p;
    t.left = z;
    t.right = std::move(z);
    t.prop = t.right;
    return t;
  }

  Tree first = build_tree(target, depth - 1, dir_eps, seed, h0, inv_metric, rng);
  if (!first.ok) return first;
  const Phase& edge = dir_eps > 0.0 ? first.right : first.left;
  Tree second = build_tree(target, depth - 1, dir_eps, edge, h0, inv_metric, rng);

  Tree t;
  t.n_leaves = first.n_leaves + second.n_leaves;
  t.sum_accept = first.sum_accept + second.sum_accept;
  t.divergent = second.divergent;
  if (!second.ok) {
    t.ok = false;
    return t;
  }
  t.log_weight = log_sum_exp(first.log_weight, second.log_weight);
  t.prop = std::log(rng.uniform_open()) < second.log_weight - t.log_weight
               ? std::move(second.prop)
               : std::move(first.prop);
  t.rho = first.rho;
  for (std::size_t i = 0; i < t.rho.size(); ++i) t.rho[i] += second.rho[i];
  if (dir_eps > 0.0) {
    t.left = std::move(first.left);
    t.right = std::move(second.right);
  } else {
    t.left = std::move(second.left);
    t.right = std::move(first.right);
  }
  t.ok = no_uturn(t.rho, t.left.p, t.right.p, inv_metric);
  return t;
}

struct TransitionStats {
  double accept_stat = 0.0;
  bool divergent = false;
  bool saturated = false;
};

// One draw: fresh momentum, then tree doubling in random directions until a
// U-turn, a divergence, or the depth cap. Proposals from successive subtrees
// are merged with probability proportional to their total weight, biased
// toward the newer subtree.
TransitionStats transition(const LogDensity& target, Phase& cur, double eps,
                           const std::vector<double>& inv_metric, int max_depth, Rng& rng) {
  sample_momentum(cur, inv_metric, rng);
  const double h0 = hamiltonian(cur, inv_metric);

  Phase left = cur;
  Phase right = cur;
  Phase prop = cur;
  std::vector<double> rho = cur.p;
  double log_weight = 0.0;
  double sum_accept = 0.0;
  long n_leaves = 0;

  TransitionStats st;
  bool stopped = false;
  for (int depth = 0; depth < max_depth; ++depth) {
    const double dir_eps = rng.uniform() < 0.5 ? -eps : eps;
    const Phase& edge = dir_eps > 0.0 ? right : left;
    Tree sub = build_tree(target, depth, dir_eps, edge, h0, inv_metric, rng);
    sum_accept += sub.sum_accept;
    n_leaves += sub.n_leaves;
    if (sub.divergent) {
      st.divergent = true;
      stopped = true;
      break;
    }
    if (!sub.ok) {
      stopped = true;
      break;
    }
    if (std::log(rng.uniform_open()) < sub.log_weight - log_weight)
      prop = std::move(sub.prop);
    log_weight = log_sum_exp(log_weight, sub.log_weight);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += sub.rho[i];
    if (dir_eps > 0.0)
      right = std::move(sub.right);
    else
      left = std::move(sub.left);
    if (!no_uturn(rho, left.p, right.p, inv_metric)) {
      stopped = true;
      break;
    }
  }
  st.saturated = !stopped;
  st.accept_stat = n_leaves > 0 ? sum_accept / static_cast<double>(n_leaves) : 0.0;
  cur = std::move(prop);
  return st;
}

// Doubles or halves the step size until a single leapfrog step first crosses
// an acceptance ratio of 0.8, restarting the probe momentum each try.
double find_reasonable_step(const LogDensity& target, const Phase& start,
                            const std::vector<double>& inv_metric, double eps, Rng& rng) {
  const double log_target = std::log(0.8);
  int direction = 0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Phase z = start;
    sample_momentum(z, inv_metric, rng);
    const double h0 = hamiltonian(z, inv_metric);
    leapfrog(target, z, eps, inv_metric);
    const double log_ratio = h0 - hamiltonian(z, inv_metric);
    if (direction == 0) direction = log_ratio > log_target ? 1 : -1;
    if (direction == 1 && !(log_ratio > log_target)) break;
    if (direction == -1 && !(log_ratio < log_target)) break;
    eps *= direction == 1 ? 2.0 : 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
  }
  return std::min(std::max(eps, 1e-10), 1e7);
}

// Nesterov dual averaging of log(step size) toward a target acceptance rate.
class DualAverage {
 public:
  DualAverage(double eps0, double target)
      : mu_(std::log(10.0 * eps0)), target_(target), log_eps_(std::log(eps0)) {}

  void update(double accept) {
    ++counter_;
    const double eta = 1.0 / (counter_ + kOffset);
    err_bar_ = (1.0 - eta) * err_bar_ + eta * (target_ - std::min(accept, 1.0));
    log_eps_ = mu_ - err_bar_ * std::sqrt(static_cast<double>(counter_)) / kShrink;
    const double w = std::pow(static_cast<double>(counter_), -kDecay);
    log_eps_bar_ = (1.0 - w) * log_eps_bar_ + w * log_eps_;
  }

  double current() const { return std::exp(log_eps_); }
  double averaged() const { return std::exp(counter_ > 0 ? log_eps_bar_ : log_eps_); }

 private:
  static constexpr double kShrink = 0.05;
  static constexpr double kOffset = 10.0;
  static constexpr double kDecay = 0.75;
  double mu_;
  double target_;
  double log_eps_;
  double log_eps_bar_ = 0.0;
  double err_bar_ = 0.0;
  int counter_ = 0;
};

// Streaming mean/variance for the metric windows.
class Welford {
 public:
  explicit Welford(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(const std::vector<double>& x) {
    ++n_;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double delta = x[i] - mean_[i];
      mean_[i] += delta / static_cast<double>(n_);
      m2_[i] += delta * (x[i] - mean_[i]);
    }
  }

  void reset() {
    n_ = 0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(m2_.begin(), m2_.end(), 0.0);
  }

  long count() const { return n_; }
  double variance(std::size_t i) const { return m2_[i] / static_cast<double>(n_ - 1); }

 private:
  std::vector<double> mean_, m2_;
  long n_ = 0;
};

// Warmup layout: a fast start buffer (step size only), doubling slow windows
// that feed the metric, and a fast terminal buffer. Falls back to 15%/10%
// proportions when the defaults do not fit.
struct AdaptSchedule {
  int init_buffer = 0;
  int term_buffer = 0;
  std::vector<int> window_ends;  // cumulative warmup iterations at each close
};

AdaptSchedule make_schedule(int warmup) {
  AdaptSchedule s;
  if (warmup <= 0) return s;
  int init = 75;
  int term = 50;
  int base = 25;
  if (init + term + base > warmup) {
    init = static_cast<int>(0.15 * warmup);
    term = static_cast<int>(0.10 * warmup);
    base = warmup - init - term;
  }
  s.init_buffer = init;
  s.term_buffer = term;
  const int limit = warmup - term;
  int start = init;
  int size = base;
  while (start < limit) {
    int end = start + size;
    if (end + 2 * size >= limit) end = limit;
    s.window_ends.push_back(end);
    start = end;
    size *= 2;
  }
  return s;
}

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("SamplerConfig: chains must be at least 1");
  if (warmup < 0) throw std::invalid_argument("SamplerConfig: warmup must be non-negative");
  if (draws < 1) throw std::invalid_argument("SamplerConfig: draws must be at least 1");
  if (!(target_accept > 0.0) || !(target_accept < 1.0))
    throw std::invalid_argument("SamplerConfig: target_accept must be in (0, 1)");
  if (max_tree_depth < 1 || max_tree_depth > 20)
    throw std::invalid_argument("SamplerConfig: max_tree_depth must be in [1, 20]");
}

ChainResult nuts_chain(const LogDensity& target, const std::vector<double>& init,
                       const SamplerConfig& cfg, std::uint64_t chain_seed) {
  cfg.validate();
  const std::size_t d = target.dim();
  if (init.size() != d) throw std::invalid_argument("nuts_chain: init has wrong dimension");

  Rng rng(chain_seed);
  Phase cur;
  cur.q = init;
  cur.p.assign(d, 0.0);
  cur.grad.assign(d, 0.0);
  cur.logp = target.value_and_grad(cur.q, cur.grad);
  if (!std::isfinite(cur.logp))
    throw std::invalid_argument("nuts_chain: initial point has non-finite log density");

  std::vector<double> inv_metric(d, 1.0);
  double eps = find_reasonable_step(target, cur, inv_metric, 1.0, rng);
  DualAverage da(eps, cfg.target_accept);
  const AdaptSchedule sched = make_schedule(cfg.warmup);
  Welford wel(d);
  std::size_t window = 0;
  long warmup_divergences = 0;

  for (int w = 0; w < cfg.warmup; ++w) {
    const TransitionStats st = transition(target, cur, eps, inv_metric, cfg.max_tree_depth, rng);
    if (st.divergent) ++warmup_divergences;
    da.update(st.accept_stat);
    eps = da.current();
    if (w >= sched.init_buffer && w < cfg.warmup - sched.term_buffer) wel.add(cur.q);
    if (window < sched.window_ends.size() && w + 1 == sched.window_ends[window]) {
      if (wel.count() >= 2) {
        const double n = static_cast<double>(wel.count());
        for (std::size_t i = 0; i < d; ++i)
          inv_metric[i] = n / (n + 5.0) * wel.variance(i) + 1e-3 * (5.0 / (n + 5.0));
      }
      wel.reset();
      eps = find_reasonable_step(target, cur, inv_metric, eps, rng);
      da = DualAverage(eps, cfg.target_accept);
      ++window;
    }
  }
  if (cfg.warmup > 0) {
    if (warmup_divergences == cfg.warmup)
      throw std::runtime_error(
          "nuts_chain: every warmup iteration diverged; the target may be degenerate "
          "or the starting point pathological");
    eps = da.averaged();
  }

  ChainResult out;
  out.step_size = eps;
  out.inv_metric = inv_metric;
  out.values.reserve(static_cast<std::size_t>(cfg.draws) * d);
  out.divergent.reserve(static_cast<std::size_t>(cfg.draws));
  for (int i = 0; i < cfg.draws; ++i) {
    const TransitionStats st = transition(target, cur, eps, inv_metric, cfg.max_tree_depth, rng);
    out.divergent.push_back(st.divergent ? 1 : 0);
    if (st.saturated) ++out.depth_saturations;
    out.values.insert(out.values.end(), cur.q.begin(), cur.q.end());
  }
  return out;
}

PosteriorDraws sample_posterior(ModelTag tag, const PanelDataset& data, const SamplerConfig& cfg) {
  cfg.validate();
  data.validate();
  const Posterior post(tag, data);
  const std::size_t d = post.dim();

  PosteriorDraws out;
  out.model = tag;
  out.years = data.years();
  out.threshold_u = data.threshold_u;
  out.seed = cfg.seed;
  out.chains = cfg.chains;
  out.draws_per_chain = cfg.draws;
  out.names = post.names();

  for (int c = 0; c < cfg.chains; ++c) {
    const std::uint64_t chain_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c));
    Rng init_rng(chain_seed, 1);
    std::vector<double> start;
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
      start = post.init_unconstrained(init_rng);
      found = std::isfinite(post.value(start));
    }
    if (!found)
      throw std::runtime_error("sample_posterior: no finite starting point in 100 attempts (chain " +
                               std::to_string(c + 1) + ")");

    ChainResult cr = nuts_chain(post, start, cfg, derive_seed(chain_seed, 2));

    std::vector<double> natural;
    natural.reserve(cr.values.size());
    std::vector<double> row(d);
    for (int i = 0; i < cfg.draws; ++i) {
      std::copy(cr.values.begin() + static_cast<std::ptrdiff_t>(i * d),
                cr.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * d), row.begin());
      const std::vector<double> nat = post.to_natural(row);
      natural.insert(natural.end(), nat.begin(), nat.end());
    }
    out.values.push_back(std::move(natural));
    out.divergent.push_back(std::move(cr.divergent));
    out.adaptation.push_back({cr.step_size, std::move(cr.inv_metric)});
    out.depth_saturations.push_back(cr.depth_saturations);
  }
  return out;
}

double hamiltonian_error(const LogDensity& target, const std::vector<double>& q0,
                         const std::vector<double>& p0, const std::vector<double>& inv_metric,
                         double step_size, int steps) {
  const std::size_t d = target.dim();
  if (q0.size() != d || p0.size() != d || inv_metric.size() != d)
    throw std::invalid_argument("hamiltonian_error: dimension mismatch");
  if (!(step_size > 0.0)) throw std::invalid_argument("hamiltonian_error: step_size must be positive");
  if (steps < 1) throw std::invalid_argument("hamiltonian_error: steps must be at least 1");

  Phase z;
  z.q = q0;
  z.p = p0;
  z.grad.assign(d, 0.0);
  z.logp = target.value_and_grad(z.q, z.grad);
  if (!std::isfinite(z.logp))
    throw std::invalid_argument("hamiltonian_error: start point has non-finite log density");
  const double h0 = hamiltonian(z, inv_metric);
  for (int k = 0; k < steps; ++k) leapfrog(target, z, step_size, inv_metric);
  return std::abs(hamiltonian(z, inv_metric) - h0);
}

std::vector<std::vector<double>> PosteriorDraws::chains_for(std::size_t param_index) const {
  if (param_index >= names.size())
    throw std::invalid_argument("PosteriorDraws: parameter index out of range");
  const std::size_t d = names.size();
  std::vector<std::vector<double>> out(values.size());
  for (std::size_t c = 0; c < values.size(); ++c) {
    out[c].reserve(static_cast<std::size_t>(draws_per_chain));
    for (int i = 0; i < draws_per_chain; ++i)
      out[c].push_back(values[c][static_cast<std::size_t>(i) * d + param_index]);
  }
  return out;
}

std::map<std::string, ParamSummary> summarize(const PosteriorDraws& draws) {
  std::map<std::string, ParamSummary> out;
  const bool splittable = draws.chains >= 2 && draws.draws_per_chain >= 4;
  for (std::size_t j = 0; j < draws.names.size(); ++j) {
    const std::vector<std::vector<double>> per_chain = draws.chains_for(j);
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(draws.chains) * draws.draws_per_chain);
    for (const auto& c : per_chain) pooled.insert(pooled.end(), c.begin(), c.end());

    ParamSummary s;
    const double n = static_cast<double>(pooled.size());
    s.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / n;
    double m2 = 0.0;
    for (const double v : pooled) m2 += (v - s.mean) * (v - s.mean);
    s.sd = pooled.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
    const auto interval = hdi(pooled, 0.94);
    s.hdi_low = interval.first;
    s.hdi_high = interval.second;
    s.rhat = splittable ? split_rhat(per_chain) : kNaN;
    s.ess_bulk = splittable ? oprisk::ess_bulk(per_chain) : kNaN;
    s.ess_tail = splittable ? oprisk::ess_tail(per_chain) : kNaN;
    out.emplace(draws.names[j], s);
  }
  return out;
}

void write_draws(const PosteriorDraws& draws, const std::string& path) {
  std::string s;
  s.reserve(static_cast<std::size_t>(draws.chains) * draws.draws_per_chain *
                (draws.dim() + 3) * 20 +
            256);
  s += "# model=" + to_string(draws.model);
  s += " years=" + std::to_string(draws.years);
  s += " chains=" + std::to_string(draws.chains);
  s += " draws=" + std::to_string(draws.draws_per_chain);
  s += " seed=" + std::to_string(draws.seed);
  s += " threshold=" + fmt_g17(draws.threshold_u);
  s += "\nchain iter divergent";
  for (const auto& name : draws.names) {
    s += ' ';
    s += name;
  }
  s += '\n';
  const std::size_t d = draws.dim();
  for (int c = 0; c < draws.chains; ++c) {
    for (int i = 0; i < draws.draws_per_chain; ++i) {
      s += std::to_string(c + 1);
      s += ' ';
      s += std::to_string(i + 1);
      s += ' ';
      s += draws.divergent[c][static_cast<std::size_t>(i)] ? '1' : '0';
      const double* row = draws.values[c].data() + static_cast<std::size_t>(i) * d;
      for (std::size_t j = 0; j < d; ++j) {
        s += ' ';
        s += fmt_g17(row[j]);
      }
      s += '\n';
    }
  }
  write_text_atomic(path, s);
}

namespace {

[[noreturn]] void draws_fail(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

double parse_double_field(const std::string& token, const std::string& path, int line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') draws_fail(path, line, "expected a number, got '" + token + "'");
  return v;
}

long parse_long_field(const std::string& token, const std::string& path, int line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0') draws_fail(path, line, "expected an integer, got '" + token + "'");
  return v;
}

}  // namespace

PosteriorDraws read_draws(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) draws_fail(path, 1, "empty draws file");
  ++line_no;
  if (line.rfind("# ", 0) != 0) draws_fail(path, line_no, "missing '# model=...' header");

  PosteriorDraws out;
  bool have_model = false, have_years = false, have_chains = false, have_draws = false,
       have_seed = false, have_threshold = false;
  std::istringstream header(line.substr(2));
  std::string field;
  while (header >> field) {
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos) draws_fail(path, line_no, "malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "model") {
      out.model = model_from_string(val);
      have_model = true;
    } else if (key == "years") {
      out.years = static_cast<int>(parse_long_field(val, path, line_no));
      have_years = true;
    } else if (key == "chains") {
      out.chains = static_cast<int>(parse_long_field(val, path, line_no));
      have_chains = true;
    } else if (key == "draws") {
      out.draws_per_chain = static_cast<int>(parse_long_field(val, path, line_no));
      have_draws = true;
    } else if (key == "seed") {
      out.seed = static_cast<std::uint64_t>(parse_long_field(val, path, line_no));
      have_seed = true;
    } else if (key == "threshold") {
      out.threshold_u = parse_double_field(val, path, line_no);
      have_threshold = true;
    } else {
      draws_fail(path, line_no, "unknown header field '" + key + "'");
    }
  }
  if (!have_model || !have_years || !have_chains || !have_draws || !have_seed || !have_threshold)
    draws_fail(path, line_no, "header promises model, years, chains, draws, seed, threshold");
  if (out.chains < 1 || out.draws_per_chain < 1 || out.years < 0)
    draws_fail(path, line_no, "header counts must be positive");

  if (!std::getline(in, line)) draws_fail(path, line_no, "missing column header");
  ++line_no;
  {
    std::istringstream cols(line);
    std::string tok;
    for (const char* expected : {"chain", "iter", "divergent"}) {
      if (!(cols >> tok) || tok != expected)
        draws_fail(path, line_no, std::string("column header must start with 'chain iter divergent'"));
    }
    while (cols >> tok) out.names.push_back(tok);
  }
  if (out.names.empty()) draws_fail(path, line_no, "no parameter columns");
  const std::vector<std::string> expected_names = param_names(out.model, out.years);
  if (out.names != expected_names)
    draws_fail(path, line_no, "parameter columns do not match model '" + to_string(out.model) + "'");

  const std::size_t d = out.names.size();
  out.values.assign(static_cast<std::size_t>(out.chains), {});
  out.divergent.assign(static_cast<std::size_t>(out.chains), {});
  for (auto& v : out.values) v.reserve(static_cast<std::size_t>(out.draws_per_chain) * d);
  for (auto& v : out.divergent) v.reserve(static_cast<std::size_t>(out.draws_per_chain));

  long rows = 0;
  const long expected_rows = static_cast<long>(out.chains) * out.draws_per_chain;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    if (!(row >> tok)) continue;
    const long chain = parse_long_field(tok, path, line_no);
    if (chain < 1 || chain > out.chains) draws_fail(path, line_no, "chain index out of range");
    if (!(row >> tok)) draws_fail(path, line_no, "missing iteration index");
    const long iter = parse_long_field(tok, path, line_no);
    const long want = static_cast<long>(out.divergent[static_cast<std::size_t>(chain - 1)].size()) + 1;
    if (iter != want) draws_fail(path, line_no, "iterations out of order for chain " + std::to_string(chain));
    if (iter > out.draws_per_chain) draws_fail(path, line_no, "more rows than the header promises");
    if (!(row >> tok)) draws_fail(path, line_no, "missing divergent flag");
    const long flag = parse_long_field(tok, path, line_no);
    if (flag != 0 && flag != 1) draws_fail(path, line_no, "divergent flag must be 0 or 1");
    auto& vals = out.values[static_cast<std::size_t>(chain - 1)];
    for (std::size_t j = 0; j < d; ++j) {
      if (!(row >> tok)) draws_fail(path, line_no, "row has too few values");
      vals.push_back(parse_double_field(tok, path, line_no));
    }
    if (row >> tok) draws_fail(path, line_no, "row has too many values");
    out.divergent[static_cast<std::size_t>(chain - 1)].push_back(static_cast<std::uint8_t>(flag));
    ++rows;
  }
  if (rows != expected_rows)
    draws_fail(path, line_no, "expected " + std::to_string(expected_rows) + " rows, found " +
                                  std::to_string(rows));
  return out;
}

void write_diagnostics_json(const PosteriorDraws& draws, const std::string& path) {
  nlohmann::json j;
  j["model"] = to_string(draws.model);
  j["years"] = draws.years;
  j["chains"] = draws.chains;
  j["draws_per_chain"] = draws.draws_per_chain;
  j["seed"] = draws.seed;
  long divergent = 0;
  for (const auto& chain : draws.divergent)
    for (const auto flag : chain) divergent += flag;
  j["divergent_draws"] = divergent;
  j["depth_saturations"] =
      std::accumulate(draws.depth_saturations.begin(), draws.depth_saturations.end(), 0);
  nlohmann::json step_sizes = nlohmann::json::array();
  for (const auto& a : draws.adaptation) step_sizes.push_back(a.step_size);
  j["step_sizes"] = step_sizes;

  const std::map<std::string, ParamSummary> sums = summarize(draws);
  nlohmann::json params = nlohmann::json::object();
  for (const auto& name : draws.names) {
    const ParamSummary& s = sums.at(name);
    params[name] = {{"mean", s.mean},         {"sd", s.sd},
                    {"hdi94", {s.hdi_low, s.hdi_high}}, {"rhat", s.rhat},
                    {"ess_bulk", s.ess_bulk}, {"ess_tail", s.ess_tail}};
  }
  j["parameters"] = params;
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace oprisk
