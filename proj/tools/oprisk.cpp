// Command-line front end for the annual-loss models: simulate panels, fit
// posteriors, estimate predictive VaR/CVaR, and join reports into a
// comparison table. One master seed per command deterministically derives
// every sub-stream (stage tag, then chain or simulation index), so a fixed
// seed reproduces every output byte for byte regardless of worker count.
//
// Exit codes: 0 success, 2 usage/config error, 3 input parse error,
// 4 sampler/stage failure, 5 convergence failure.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oprisk/cvar.hpp"
#include "oprisk/inference.hpp"
#include "oprisk/io.hpp"
#include "oprisk/models.hpp"
#include "oprisk/panel.hpp"
#include "oprisk/rng.hpp"
#include "oprisk/simulator.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitSampler = 4;
constexpr int kExitConvergence = 5;

// Seed stage tags: one master seed per command, hash-split per stage.
constexpr std::uint64_t kStageSimulate = 1;
constexpr std::uint64_t kStageFit = 2;
constexpr std::uint64_t kStagePredictive = 3;

int fail(int code, const std::string& msg) {
  std::fprintf(stderr, "oprisk: %s\n", msg.c_str());
  return code;
}

// Flat key=value defaults, CLI flags win. Keys are the long option names.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::string text;
  try {
    text = oprisk::read_text_file(path);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());  // config problems are usage errors
  }
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq <= first)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected key=value, got '" + line + "'");
    const auto key_end = line.find_last_not_of(" \t", eq - 1);
    std::string key = line.substr(first, key_end - first + 1);
    const auto val_begin = line.find_first_not_of(" \t", eq + 1);
    const auto val_end = line.find_last_not_of(" \t\r");
    std::string val = val_begin == std::string::npos || val_begin > val_end
                          ? std::string()
                          : line.substr(val_begin, val_end - val_begin + 1);
    if (!kv.emplace(std::move(key), std::move(val)).second)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": duplicate key");
  }
  return kv;
}

// Installs config values as defaults on the active subcommand before the
// real parse; anything also given as a flag is overridden by the flag.
void apply_config_defaults(CLI::App& cmd, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "config") continue;
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw std::invalid_argument("unknown config key '" + key + "' for command " +
                                  cmd.get_name());
    opt->default_val(value);
  }
}

// The --config pre-pass: the file must be loaded before CLI11 parses the
// flags so that flags win over file values.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

struct SimulateArgs {
  oprisk::HagParams params{0.70, 3.00, 0.50, 0.30, 0.50, 13.82, 0.40, 0.70, 2.00};
  int years = 15;
  double threshold = 5e5;
  std::uint64_t seed = 1;
  std::string panel_path = "panel.txt";
  std::string panel_json_path;
  std::string truth_path = "truth.json";
};

struct FitArgs {
  std::string model = "hag";
  std::string panel_path;
  oprisk::SamplerConfig sampler;  // seed field unused; master seed below
  std::uint64_t seed = 1;
  double target_accept = -1.0;  // sentinel: pick per model
  std::string draws_path = "draws.txt";
  std::string diagnostics_path = "diagnostics.json";
};

struct CvarArgs {
  std::string draws_path;
  std::vector<double> levels{0.999, 0.9995, 0.99995};
  std::int64_t m = 1000000;
  std::uint64_t seed = 1;
  int workers = 1;
  double threshold = 0.0;  // 0: take the fit's threshold
  std::string report_path = "report.json";
};

struct ReportArgs {
  std::vector<std::string> paths;
  std::string out_path;
};

int run_simulate(const SimulateArgs& a) {
  try {
    a.params.validate();
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  }
  try {
    const auto sim = oprisk::simulate_panel(a.params, a.years, a.threshold,
                                            oprisk::derive_seed(a.seed, kStageSimulate));
    oprisk::export_panel(sim.data, a.panel_path);
    if (!a.panel_json_path.empty()) oprisk::export_panel_json(sim.data, a.panel_json_path);
    oprisk::export_truth(sim.truth, a.truth_path);
    std::printf("wrote %s (%d years, %llu events) and %s\n", a.panel_path.c_str(), a.years,
                static_cast<unsigned long long>(sim.data.total_events()), a.truth_path.c_str());
    return 0;
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitSampler, e.what());
  }
}

int run_fit(const FitArgs& a) {
  oprisk::ModelTag tag;
  oprisk::SamplerConfig cfg = a.sampler;
  try {
    tag = oprisk::model_from_string(a.model);
    // Stiff posterior geometry wants the cautious default; the simpler
    // models mix fine at the standard one.
    cfg.target_accept =
        a.target_accept > 0.0 ? a.target_accept : (tag == oprisk::ModelTag::kHag ? 0.98 : 0.90);
    cfg.seed = oprisk::derive_seed(a.seed, kStageFit);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  }

  oprisk::PanelDataset data;
  try {
    data = oprisk::import_panel(a.panel_path);
  } catch (const std::exception& e) {
    return fail(kExitParse, e.what());
  }

  oprisk::PosteriorDraws draws;
  try {
    draws = oprisk::sample_posterior(tag, data, cfg);
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitSampler, e.what());
  }

  try {
    oprisk::write_draws(draws, a.draws_path);
    oprisk::write_diagnostics_json(draws, a.diagnostics_path);
  } catch (const std::exception& e) {
    return fail(kExitSampler, e.what());
  }

  const auto sums = oprisk::summarize(draws);
  const std::size_t structural = oprisk::structural_params(tag).size();
  std::string bad;
  for (std::size_t j = 0; j < structural; ++j) {
    const auto& s = sums.at(draws.names[j]);
    // NaN (single chain, constant draws) cannot demonstrate convergence.
    if (!(s.rhat < 1.01) || !(s.ess_bulk > 400.0)) bad += " " + draws.names[j];
  }
  long divergent = 0;
  for (const auto& chain : draws.divergent)
    for (const auto f : chain) divergent += f;
  std::printf("wrote %s and %s (model=%s, %d chains x %d draws, %ld divergent)\n",
              a.draws_path.c_str(), a.diagnostics_path.c_str(), oprisk::to_string(tag).c_str(),
              draws.chains, draws.draws_per_chain, divergent);
  if (!bad.empty())
    return fail(kExitConvergence,
                "convergence failure (rhat >= 1.01 or bulk ESS <= 400):" + bad);
  return 0;
}

int run_cvar(const CvarArgs& a) {
  oprisk::PosteriorDraws draws;
  try {
    draws = oprisk::read_draws(a.draws_path);
  } catch (const std::exception& e) {
    return fail(kExitParse, e.what());
  }
  try {
    const double u = a.threshold > 0.0 ? a.threshold : draws.threshold_u;
    const auto report = oprisk::estimate_cvar(draws, u, a.levels, a.m,
                                              oprisk::derive_seed(a.seed, kStagePredictive),
                                              a.workers);
    oprisk::write_report_json(report, a.report_path);
    std::printf("%s", oprisk::format_report_table({report}).c_str());
    std::printf("wrote %s\n", a.report_path.c_str());
    return 0;
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitSampler, e.what());
  }
}

int run_report(const ReportArgs& a) {
  std::vector<oprisk::CvarReport> reports;
  for (const auto& path : a.paths) {
    try {
      reports.push_back(oprisk::read_report_json(path));
    } catch (const std::exception& e) {
      return fail(kExitParse, e.what());
    }
  }
  try {
    const std::string table = oprisk::format_report_table(reports);
    std::printf("%s", table.c_str());
    if (!a.out_path.empty()) oprisk::write_text_atomic(a.out_path, table);
    return 0;
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitSampler, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Annual operational-loss models: simulate, fit, cvar, report"};
  app.require_subcommand(1);

  SimulateArgs sim;
  FitArgs fit;
  CvarArgs cvar;
  ReportArgs rep;
  std::string config_dummy;

  CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic loss panel");
  c_sim->add_option("--config", config_dummy, "key=value defaults file (flags win)");
  c_sim->add_option("--phi", sim.params.phi, "AR(1) stress persistence")->capture_default_str();
  c_sim->add_option("--mu_lambda", sim.params.mu_lambda, "log base event rate")->capture_default_str();
  c_sim->add_option("--alpha", sim.params.alpha, "stress loading on frequency")->capture_default_str();
  c_sim->add_option("--eta", sim.params.eta, "self-excitation jump size")->capture_default_str();
  c_sim->add_option("--kappa", sim.params.kappa, "excitation decay rate")->capture_default_str();
  c_sim->add_option("--mu_sigma", sim.params.mu_sigma, "log severity scale")->capture_default_str();
  c_sim->add_option("--beta_s", sim.params.beta_s, "stress loading on severity")->capture_default_str();
  c_sim->add_option("--xi", sim.params.xi, "tail shape")->capture_default_str();
  c_sim->add_option("--theta", sim.params.theta, "copula dependence")->capture_default_str();
  c_sim->add_option("--years,--T", sim.years, "panel length")->capture_default_str();
  c_sim->add_option("--threshold", sim.threshold, "reporting threshold u")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  c_sim->add_option("--panel", sim.panel_path, "output panel path")->capture_default_str();
  c_sim->add_option("--panel_json", sim.panel_json_path, "optional JSON panel copy");
  c_sim->add_option("--truth", sim.truth_path, "output ground-truth path")->capture_default_str();

  CLI::App* c_fit = app.add_subcommand("fit", "Sample a model posterior from a panel");
  c_fit->add_option("--config", config_dummy, "key=value defaults file (flags win)");
  c_fit->add_option("--model", fit.model, "indep | shared | hag")->capture_default_str()
      ->check(CLI::IsMember({"indep", "shared", "hag"}));
  c_fit->add_option("--panel", fit.panel_path, "input panel path")->required();
  c_fit->add_option("--chains", fit.sampler.chains, "number of chains")->capture_default_str();
  c_fit->add_option("--warmup", fit.sampler.warmup, "adaptation iterations per chain")->capture_default_str();
  c_fit->add_option("--draws", fit.sampler.draws, "kept iterations per chain")->capture_default_str();
  c_fit->add_option("--target_accept", fit.target_accept,
                    "step-size target (default 0.98 for hag, 0.90 otherwise)");
  c_fit->add_option("--max_depth", fit.sampler.max_tree_depth, "tree doubling cap")->capture_default_str();
  c_fit->add_option("--seed", fit.seed, "master seed")->capture_default_str();
  c_fit->add_option("--out", fit.draws_path, "output draws path")->capture_default_str();
  c_fit->add_option("--diagnostics", fit.diagnostics_path, "output diagnostics path")->capture_default_str();

  CLI::App* c_cvar = app.add_subcommand("cvar", "Posterior-predictive tail risk from draws");
  c_cvar->add_option("--config", config_dummy, "key=value defaults file (flags win)");
  c_cvar->add_option("--draws", cvar.draws_path, "input draws path")->required();
  c_cvar->add_option("--levels", cvar.levels, "confidence levels, ascending")
      ->delimiter(',');
  c_cvar->add_option("--m", cvar.m, "number of simulations")->capture_default_str();
  c_cvar->add_option("--seed", cvar.seed, "master seed")->capture_default_str();
  c_cvar->add_option("--workers", cvar.workers, "parallel workers (output-invariant)")->capture_default_str();
  c_cvar->add_option("--threshold", cvar.threshold,
                     "override threshold u (default: the fitted panel's)");
  c_cvar->add_option("--out", cvar.report_path, "output report path")->capture_default_str();

  CLI::App* c_rep = app.add_subcommand("report", "Join report files into a comparison table");
  c_rep->add_option("paths", rep.paths, "report JSON files")->required();
  c_rep->add_option("--out", rep.out_path, "also write the table to this path");

  try {
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty() && argc > 1) {
      CLI::App* active = app.get_subcommand_no_throw(argv[1]);
      if (active != nullptr) apply_config_defaults(*active, read_config_file(config_path));
    }
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitParse, e.what());
  }

  if (c_sim->parsed()) return run_simulate(sim);
  if (c_fit->parsed()) return run_fit(fit);
  if (c_cvar->parsed()) return run_cvar(cvar);
  if (c_rep->parsed()) return run_report(rep);
  return fail(kExitUsage, "no command given");
}
