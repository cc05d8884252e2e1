#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lwr/mbvd_fit.hpp"
#include "support.hpp"

using namespace lwr;
using namespace lwr::mbvd;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

MbvdModel reference_model() {
  MbvdModel m;
  m.static_net = {1e-12, 0.0, 1.5};
  const double c_m = 0.06e-12;
  const double w = 2.0 * std::numbers::pi * 1e9;
  m.branches.push_back({8.0, 1.0 / (w * w * c_m), c_m, ""});
  return m;
}

}  // namespace

TEST_CASE("median filter") {
  const std::vector<double> v{1, 9, 2, 8, 3};
  const auto m = median_filter(v, 3);
  REQUIRE(m.size() == 5);
  CHECK(m[1] == 2.0);
  CHECK(m[2] == 8.0);
  CHECK(m[3] == 3.0);
  CHECK(median_filter(v, 1) == v);
}

TEST_CASE("peak picking resolves plateaus to the lower frequency") {
  AdmittanceTrace t;
  t.frequencies = linspace(1.0, 20.0, 20);
  const std::vector<double> mag{1, 1, 1, 2, 5, 9, 9, 9, 5, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  for (double v : mag) t.admittance.emplace_back(0.0, v);
  const auto peaks = find_resonance_peaks(t, 1, 1);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0] == 5);
  CHECK_THROWS_AS(find_resonance_peaks(t, 2, 1), FitError);
}

TEST_CASE("noiseless single branch recovers every parameter") {
  const auto truth = reference_model();
  const auto trace = mbvd_admittance(truth, linspace(0.8e9, 1.2e9, 201));
  const auto fit = fit_mbvd(trace, 1);
  REQUIRE(fit.model.branches.size() == 1);
  CHECK(fit.report.converged);
  CHECK(test::rel_err(fit.model.static_net.c_0, truth.static_net.c_0) < 1e-6);
  CHECK(test::rel_err(fit.model.static_net.r_s, truth.static_net.r_s) < 1e-6);
  CHECK(test::rel_err(fit.model.branches[0].r_m, truth.branches[0].r_m) < 1e-6);
  CHECK(test::rel_err(fit.model.branches[0].l_m, truth.branches[0].l_m) < 1e-6);
  CHECK(test::rel_err(fit.model.branches[0].c_m, truth.branches[0].c_m) < 1e-6);
  CHECK(fit.report.residual_norm < 1e-8);
  CHECK(fit.report.parameters.size() == 5);
}

TEST_CASE("pure capacitor with zero branches") {
  MbvdModel truth;
  truth.static_net = {1e-12, 0.0, 0.0};
  const auto trace = mbvd_admittance(truth, linspace(0.5e9, 2e9, 101));
  const auto fit = fit_mbvd(trace, 0);
  CHECK(fit.model.branches.empty());
  CHECK(test::rel_err(fit.model.static_net.c_0, 1e-12) < 1e-9);
}

TEST_CASE("too few peaks names the deficit") {
  MbvdModel truth;
  truth.static_net = {1e-12, 0.0, 0.0};
  const auto trace = mbvd_admittance(truth, linspace(0.5e9, 2e9, 101));
  try {
    (void)fit_mbvd(trace, 2);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("iteration cap surfaces the best-so-far model") {
  const auto truth = reference_model();
  const auto trace = mbvd_admittance(truth, linspace(0.8e9, 1.2e9, 201));
  FitOptions opts;
  opts.max_iterations = 1;
  try {
    (void)fit_mbvd(trace, 1, opts);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    REQUIRE(e.best().has_value());
    CHECK(e.best()->model.branches.size() == 1);
  }
}

TEST_CASE("property: fit idempotence on noiseless multi-branch traces") {
  test::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto truth = test::random_model(rng, static_cast<std::size_t>(rng.integer(1, 4)));
    const auto trace = mbvd_admittance(truth, test::segmented_grid(truth, 400));
    const auto fit = fit_mbvd(trace, truth.branches.size());
    REQUIRE(fit.model.branches.size() == truth.branches.size());
    CHECK(test::rel_err(fit.model.static_net.c_0, truth.static_net.c_0) < 1e-6);
    for (std::size_t i = 0; i < truth.branches.size(); ++i) {
      CHECK(test::rel_err(fit.model.branches[i].l_m, truth.branches[i].l_m) < 1e-6);
      CHECK(test::rel_err(fit.model.branches[i].c_m, truth.branches[i].c_m) < 1e-6);
      CHECK(test::rel_err(fit.model.branches[i].r_m, truth.branches[i].r_m) < 1e-6);
    }
  }
}

TEST_CASE("four branches with 0.5% noise") {
  test::Rng rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    const auto truth = test::random_model(rng, 4);
    const auto clean = mbvd_admittance(truth, test::segmented_grid(truth, 400));
    const auto fit = fit_mbvd(test::add_noise(clean, 0.005, rng), 4);
    REQUIRE(fit.model.branches.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto want = resonance_metrics(truth, i);
      const auto got = resonance_metrics(fit.model, i);
      CHECK(test::rel_err(got.f_r, want.f_r) < 5e-4);
      CHECK(test::rel_err(got.k_eff_sq, want.k_eff_sq) < 0.05);
    }
  }
}

TEST_CASE("confidence scales are reported for every parameter") {
  test::Rng rng(23);
  const auto truth = reference_model();
  const auto trace = test::add_noise(mbvd_admittance(truth, linspace(0.8e9, 1.2e9, 201)), 0.005, rng);
  const auto fit = fit_mbvd(trace, 1);
  REQUIRE(fit.report.parameters.size() == 5);
  for (const auto& p : fit.report.parameters) {
    CHECK(p.value > 0.0);
    CHECK(p.relative_sigma > 0.0);
    CHECK(p.relative_sigma < 0.5);
  }
}

TEST_CASE("a large series resistance does not collapse a branch") {
  // Draw 71 of this stream has r_s near 100 ohm and a far-off first guess.
  test::Rng rng(2024);
  for (int trial = 0; trial < 72; ++trial) {
    const auto n = static_cast<std::size_t>(1 + trial % 4);
    const auto truth = test::random_model(rng, n);
    const auto trace = test::add_noise(mbvd_admittance(truth, test::segmented_grid(truth, 400)), 0.005, rng);
    if (trial < 71) continue;
    REQUIRE(truth.static_net.r_s > 50.0);
    const auto fit = fit_mbvd(trace, n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(test::rel_err(resonance_metrics(fit.model, i).f_r, resonance_metrics(truth, i).f_r) < 5e-4);
    }
  }
}
