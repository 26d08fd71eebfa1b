#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oprisk/distributions.hpp"
#include "oprisk/models.hpp"
#include "oprisk/panel.hpp"
#include "oprisk/simulator.hpp"

namespace {

oprisk::HagParams table_defaults() {
  oprisk::HagParams p;
  p.phi = 0.70;
  p.mu_lambda = 3.00;
  p.alpha = 0.50;
  p.eta = 0.30;
  p.kappa = 0.50;
  p.mu_sigma = 13.82;
  p.beta_s = 0.40;
  p.xi = 0.70;
  p.theta = 2.00;
  return p;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

double lag_autocorr(const std::vector<double>& x, std::size_t lag) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    if (i + lag < x.size()) num += (x[i] - mean) * (x[i + lag] - mean);
  }
  return num / den;
}

}  // namespace

TEST_CASE("simulate_panel is deterministic in the seed") {
  const auto a = oprisk::simulate_panel(table_defaults(), 15, 5.0e5, 7);
  const auto b = oprisk::simulate_panel(table_defaults(), 15, 5.0e5, 7);
  CHECK(a.data.counts == b.data.counts);
  CHECK(a.data.exceedances == b.data.exceedances);
  CHECK(a.truth.latents.w_f == b.truth.latents.w_f);
  CHECK(a.truth.latents.w_s == b.truth.latents.w_s);
  CHECK(a.truth.latents.z == b.truth.latents.z);
  CHECK(a.truth.intensities == b.truth.intensities);

  const auto c = oprisk::simulate_panel(table_defaults(), 15, 5.0e5, 8);
  CHECK(a.data.counts != c.data.counts);
}

TEST_CASE("simulated outputs are internally consistent") {
  const auto sim = oprisk::simulate_panel(table_defaults(), 15, 5.0e5, 42);
  CHECK_NOTHROW(sim.data.validate());
  REQUIRE(sim.data.years() == 15);
  REQUIRE(sim.truth.intensities.size() == 15);

  // Stored intensities reproduce the public intensity function bit-for-bit,
  // and the stress path is exactly the AR(1) scan of the innovations.
  const auto z = oprisk::ar1_scan(sim.truth.params.phi, sim.truth.latents.w_f);
  CHECK(sim.truth.latents.z == z);
  for (int t = 0; t < 15; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const std::vector<std::uint64_t> prefix(sim.data.counts.begin(),
                                            sim.data.counts.begin() + t);
    CHECK(sim.truth.intensities[ti] ==
          oprisk::hawkes_intensity(sim.truth.params, z[ti], prefix));
    for (double y : sim.data.exceedances[ti]) CHECK(y > 0.0);
  }

  // The likelihood of the generated panel at the truth is finite.
  CHECK(std::isfinite(oprisk::loglik_hag(sim.truth.params, sim.truth.latents, sim.data)));
}

TEST_CASE("degenerate DGP reduces to i.i.d. Poisson counts") {
  oprisk::HagParams p = table_defaults();
  p.alpha = 0.0;
  p.eta = 0.0;
  p.beta_s = 0.0;
  const auto sim = oprisk::simulate_panel(p, 10000, 5.0e5, 99);
  double mean = 0.0;
  for (const auto n : sim.data.counts) mean += static_cast<double>(n);
  mean /= 10000.0;
  CHECK(std::fabs(mean - std::exp(3.0)) < 0.01 * std::exp(3.0));

  // Every intensity equals the constant baseline.
  for (double lam : sim.truth.intensities)
    CHECK(lam == doctest::Approx(std::exp(3.0)).epsilon(1e-13));
}

TEST_CASE("stress path has AR(1) autocorrelation phi^h") {
  const auto sim = oprisk::simulate_panel(table_defaults(), 100000, 5.0e5, 5);
  const auto& z = sim.truth.latents.z;
  CHECK(std::fabs(lag_autocorr(z, 1) - 0.7) < 0.01);
  for (std::size_t h = 2; h <= 5; ++h) {
    CAPTURE(h);
    CHECK(std::fabs(lag_autocorr(z, h) - std::pow(0.7, static_cast<double>(h))) < 0.015);
  }
}

TEST_CASE("counts are overdispersed relative to Poisson at Table-2 parameters") {
  const auto sim = oprisk::simulate_panel(table_defaults(), 10000, 5.0e5, 13);
  double mean = 0.0;
  for (const auto n : sim.data.counts) mean += static_cast<double>(n);
  mean /= 10000.0;
  double var = 0.0;
  for (const auto n : sim.data.counts) {
    const double d = static_cast<double>(n) - mean;
    var += d * d;
  }
  var /= 9999.0;
  CHECK(var / mean > 1.5);
}

TEST_CASE("pooled scaled exceedances follow GPD(1, xi)") {
  // sigma_t varies year to year; dividing by the true sigma_t makes every
  // draw GPD(1, xi), so the pool is one i.i.d. sample.
  const oprisk::HagParams p = table_defaults();
  const auto sim = oprisk::simulate_panel(p, 30, 5.0e5, 11);
  std::vector<double> scaled;
  for (int t = 0; t < sim.data.years(); ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const double sigma = std::exp(p.mu_sigma + p.beta_s * sim.truth.latents.w_s[ti]);
    for (double y : sim.data.exceedances[ti]) scaled.push_back(y / sigma);
  }
  REQUIRE(scaled.size() >= 500);
  std::sort(scaled.begin(), scaled.end());
  const oprisk::GpdParams unit{1.0, p.xi};
  double d_stat = 0.0;
  const auto n = static_cast<double>(scaled.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    const double cdf = oprisk::gpd_cdf(scaled[i], unit);
    const double hi = static_cast<double>(i + 1) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    d_stat = std::max({d_stat, hi, lo});
  }
  CHECK(d_stat < 1.36 / std::sqrt(n));
}

TEST_CASE("median total events over 50 seeds sits in the DGP's typical range") {
  std::vector<double> totals;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto sim = oprisk::simulate_panel(table_defaults(), 15, 5.0e5, seed);
    totals.push_back(static_cast<double>(sim.data.total_events()));
  }
  std::sort(totals.begin(), totals.end());
  const double median = 0.5 * (totals[24] + totals[25]);
  // Stationary mean ~48 events/year with a startup transient gives an
  // expected total near 600; single seeds range far above and below.
  CHECK(median > 450.0);
  CHECK(median < 750.0);
  double mean = 0.0;
  for (double t : totals) mean += t;
  mean /= 50.0;
  CHECK(mean > 500.0);
  CHECK(mean < 700.0);
}

TEST_CASE("panel text round-trip is lossless, including empty years") {
  oprisk::HagParams p = table_defaults();
  p.mu_lambda = std::log(0.05);  // most years empty
  p.alpha = 0.0;
  const auto sim = oprisk::simulate_panel(p, 20, 5.0e5, 3);
  bool has_empty = false;
  for (const auto n : sim.data.counts) has_empty = has_empty || n == 0;
  REQUIRE(has_empty);

  const std::string path = temp_path("oprisk_panel_roundtrip.txt");
  oprisk::export_panel(sim.data, path);
  const oprisk::PanelDataset back = oprisk::import_panel(path);
  CHECK(back.threshold_u == sim.data.threshold_u);
  CHECK(back.counts == sim.data.counts);
  CHECK(back.exceedances == sim.data.exceedances);
  std::filesystem::remove(path);
}

TEST_CASE("panel JSON round-trip is lossless") {
  const auto sim = oprisk::simulate_panel(table_defaults(), 12, 5.0e5, 19);
  const std::string path = temp_path("oprisk_panel_roundtrip.json");
  oprisk::export_panel_json(sim.data, path);
  const oprisk::PanelDataset back = oprisk::import_panel(path);
  CHECK(back.threshold_u == sim.data.threshold_u);
  CHECK(back.counts == sim.data.counts);
  CHECK(back.exceedances == sim.data.exceedances);
  std::filesystem::remove(path);
}

TEST_CASE("malformed panel files are rejected with context") {
  const std::string path = temp_path("oprisk_panel_bad.txt");

  SUBCASE("count promises more exceedances than present") {
    std::ofstream out(path);
    out << "threshold=500000 years=1\n"
        << "year=1 count=2\n"
        << "exc=125000.5\n";
    out.close();
    CHECK_THROWS_WITH_AS(oprisk::import_panel(path), doctest::Contains("promises"),
                         std::runtime_error);
  }
  SUBCASE("trailing garbage is rejected") {
    std::ofstream out(path);
    out << "threshold=500000 years=1\n"
        << "year=1 count=1\n"
        << "exc=125000.5\n"
        << "exc=99.0\n";
    out.close();
    CHECK_THROWS_WITH_AS(oprisk::import_panel(path), doctest::Contains("trailing"),
                         std::runtime_error);
  }
  SUBCASE("wrong year numbering is rejected") {
    std::ofstream out(path);
    out << "threshold=500000 years=2\n"
        << "year=1 count=0\n"
        << "year=3 count=0\n";
    out.close();
    CHECK_THROWS_WITH_AS(oprisk::import_panel(path), doctest::Contains("expected year"),
                         std::runtime_error);
  }
  SUBCASE("JSON with mismatched lengths is rejected") {
    std::ofstream out(path);
    out << R"({"threshold": 500000.0, "counts": [2], "exceedances": [[1.0]]})";
    out.close();
    CHECK_THROWS_AS(oprisk::import_panel(path), std::runtime_error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("truth JSON round-trip is bitwise lossless") {
  const auto sim = oprisk::simulate_panel(table_defaults(), 9, 5.0e5, 77);
  const std::string path = temp_path("oprisk_truth_roundtrip.json");
  oprisk::export_truth(sim.truth, path);
  const oprisk::DgpTruth back = oprisk::import_truth(path);
  CHECK(back.params.phi == sim.truth.params.phi);
  CHECK(back.params.mu_lambda == sim.truth.params.mu_lambda);
  CHECK(back.params.alpha == sim.truth.params.alpha);
  CHECK(back.params.eta == sim.truth.params.eta);
  CHECK(back.params.kappa == sim.truth.params.kappa);
  CHECK(back.params.mu_sigma == sim.truth.params.mu_sigma);
  CHECK(back.params.beta_s == sim.truth.params.beta_s);
  CHECK(back.params.xi == sim.truth.params.xi);
  CHECK(back.params.theta == sim.truth.params.theta);
  CHECK(back.latents.w_f == sim.truth.latents.w_f);
  CHECK(back.latents.w_s == sim.truth.latents.w_s);
  CHECK(back.latents.z == sim.truth.latents.z);
  CHECK(back.intensities == sim.truth.intensities);
  std::filesystem::remove(path);
}

TEST_CASE("truth import rejects corrupt files") {
  const std::string path = temp_path("oprisk_truth_bad.json");
  SUBCASE("invalid JSON") {
    std::ofstream(path) << "{not json";
    CHECK_THROWS_WITH_AS(oprisk::import_truth(path), doctest::Contains("invalid JSON"),
                         std::runtime_error);
  }
  SUBCASE("missing key") {
    std::ofstream(path) << R"({"params": {"phi": 0.5}})";
    CHECK_THROWS_WITH_AS(oprisk::import_truth(path), doctest::Contains("bad truth file"),
                         std::runtime_error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("simulate_panel argument and overflow errors") {
  CHECK_THROWS_AS(oprisk::simulate_panel(table_defaults(), 0, 5.0e5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(oprisk::simulate_panel(table_defaults(), 15, -1.0, 1),
                  std::invalid_argument);

  oprisk::HagParams super = table_defaults();
  super.eta = 2.0;  // branching ratio > 0.95
  CHECK_THROWS_AS(oprisk::simulate_panel(super, 15, 5.0e5, 1), std::invalid_argument);

  oprisk::HagParams blown = table_defaults();
  blown.mu_lambda = 710.0;  // exp overflows at year 1
  CHECK_THROWS_WITH_AS(oprisk::simulate_panel(blown, 15, 5.0e5, 1),
                       doctest::Contains("year 1"), std::runtime_error);
}
