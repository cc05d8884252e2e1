#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lwr/error.hpp"
#include "lwr/wafer_statistics.hpp"
#include "support.hpp"

using namespace lwr;
using namespace lwr::stats;

namespace {

const std::vector<double> kCatalogPitches{0.5e-6, 0.75e-6, 1e-6, 1.5e-6, 2e-6, 2.5e-6, 3e-6, 3.5e-6, 4e-6, 4.5e-6};

WaferSite site(const std::string& id, double pitch, LambMode mode, double f, double q = 500.0, double k2 = 0.05) {
  WaferSite s;
  s.site_id = id;
  s.pitch = pitch;
  s.modes[mode] = mbvd::ModeMetrics{f, f * 1.02, q, k2};
  return s;
}

std::vector<layout::ChipPlacement> wafer_sites() { return layout::gen_wafer_map(17.0, 3.0, layout::WaferGeometry{}); }

// Grid of placements over a disc, for larger sample counts.
std::vector<layout::ChipPlacement> dense_map(double radius_mm, double step_mm) {
  std::vector<layout::ChipPlacement> out;
  int idx = 0;
  for (double y = -radius_mm; y <= radius_mm; y += step_mm) {
    for (double x = -radius_mm; x <= radius_mm; x += step_mm) {
      if (std::hypot(x, y) <= radius_mm) out.push_back({idx++, 0, 0, x, y});
    }
  }
  return out;
}

double group_relstd(const DeviationReport& r, LambMode mode, double pitch) {
  for (const auto& e : r.entries) {
    if (e.mode == mode && std::abs(e.pitch - pitch) < 1e-12) return e.relstd_pct;
  }
  FAIL("group missing");
  return 0.0;
}

std::string csv_of(const std::vector<WaferSite>& sites) {
  std::ostringstream out;
  write_deviation_csv(out, per_mode_deviation(sites));
  for (LambMode m : kAllModes) write_heatmap_csv(out, sites, m, 2e-6);
  return out.str();
}

}  // namespace

TEST_CASE("relstd") {
  CHECK(relstd(std::vector<double>{1e9, 1e9, 1e9}) == 0.0);
  CHECK(relstd(std::vector<double>{0.99e9, 1.00e9, 1.01e9}) == doctest::Approx(0.8165).epsilon(1e-4));
  CHECK(std::abs(relstd(std::vector<double>{0.99e9, 1.00e9, 1.01e9}) - 0.8164966) < 1e-6);
  CHECK_THROWS_AS(relstd(std::vector<double>{1e9}), StatisticsError);
  CHECK_THROWS_AS(relstd(std::vector<double>{1e9, -1e9}), StatisticsError);
  test::Rng rng(81);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v, v2;
    const int n = rng.integer(2, 50);
    for (int j = 0; j < n; ++j) v.push_back(rng.uniform(0.5e9, 1.5e9));
    for (double x : v) v2.push_back(2.0 * x);
    CHECK(relstd(v2) == doctest::Approx(relstd(v)).epsilon(1e-12));
    std::shuffle(v.begin(), v.end(), std::mt19937_64(static_cast<std::uint64_t>(i)));
    CHECK(relstd(v) == doctest::Approx(relstd(v2)).epsilon(1e-12));
  }
}

TEST_CASE("per-mode deviation") {
  SUBCASE("identical sites") {
    std::vector<WaferSite> sites;
    for (int i = 0; i < 10; ++i) sites.push_back(site("s" + std::to_string(i), 1e-6, LambMode::S0, 2e9));
    const auto r = per_mode_deviation(sites);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].relstd_pct == 0.0);
    CHECK(r.entries[0].n == 10);
  }
  SUBCASE("sampling-distribution oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      test::Rng rng(seed);
      std::vector<WaferSite> sites;
      for (int i = 0; i < 93; ++i) sites.push_back(site("s", 1e-6, LambMode::S1, 1e9 * (1.0 + 0.02 * rng.normal())));
      const auto r = per_mode_deviation(sites);
      CHECK(std::abs(r.entries.at(0).relstd_pct - 2.0) < 0.4);
    }
  }
  SUBCASE("single-site group omitted with a warning") {
    std::vector<WaferSite> sites{site("a", 1e-6, LambMode::S0, 1e9), site("b", 1e-6, LambMode::S0, 1.1e9),
                                 site("c", 2e-6, LambMode::S0, 0.5e9)};
    const auto r = per_mode_deviation(sites);
    CHECK(r.entries.size() == 1);
    CHECK(r.warnings.size() == 1);
  }
  SUBCASE("fit failures are excluded and counted") {
    std::vector<WaferSite> sites{site("a", 1e-6, LambMode::S0, 1e9), site("b", 1e-6, LambMode::S0, 1.1e9),
                                 site("c", 1e-6, LambMode::S0, 1.2e9)};
    sites[2].modes[LambMode::S0].reset();
    const auto r = per_mode_deviation(sites);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].n == 2);
    CHECK(r.entries[0].excluded == 1);
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(per_mode_deviation({}), StatisticsError); }
  SUBCASE("permutation invariance") {
    test::Rng rng(82);
    std::vector<WaferSite> sites;
    for (int i = 0; i < 60; ++i) {
      sites.push_back(site("s", kCatalogPitches[static_cast<std::size_t>(i % 3)], kAllModes[static_cast<std::size_t>(i % 4)],
                           rng.uniform(1e9, 2e9)));
    }
    const auto a = per_mode_deviation(sites);
    std::reverse(sites.begin(), sites.end());
    const auto b = per_mode_deviation(sites);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].relstd_pct == doctest::Approx(b.entries[i].relstd_pct).epsilon(1e-12));
      CHECK(a.entries[i].mean_f == doctest::Approx(b.entries[i].mean_f).epsilon(1e-14));
    }
  }
}

TEST_CASE("variation model validation") {
  VariationModel m;
  CHECK_NOTHROW(m.validate());
  m.pitch_sigma = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = {};
  m.thickness_edge_drop = m.thickness_center;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  CHECK(VariationModel{}.thickness_at(0.0) == 420e-9);
  CHECK(VariationModel{}.thickness_at(50.0) == doctest::Approx(380e-9));
}

TEST_CASE("wafer simulation") {
  const auto plate = lamb::default_plate();
  const auto map = wafer_sites();
  REQUIRE(map.size() == 83);

  SUBCASE("no variation gives identical sites") {
    VariationModel m;
    m.thickness_center = plate.h;
    m.thickness_edge_drop = m.thickness_noise_sigma = m.pitch_sigma = 0.0;
    const auto sites = simulate_wafer(m, kCatalogPitches, plate, map);
    for (const auto& e : per_mode_deviation(sites).entries) CHECK(e.relstd_pct < 1e-12);
  }
  SUBCASE("seeded runs are byte-reproducible") {
    const VariationModel m;
    CHECK(csv_of(simulate_wafer(m, kCatalogPitches, plate, map)) == csv_of(simulate_wafer(m, kCatalogPitches, plate, map)));
    VariationModel other = m;
    other.seed = 2;
    CHECK(csv_of(simulate_wafer(other, kCatalogPitches, plate, map)) != csv_of(simulate_wafer(m, kCatalogPitches, plate, map)));
  }
  SUBCASE("placement order does not matter") {
    auto rev = map;
    std::reverse(rev.begin(), rev.end());
    auto a = simulate_wafer(VariationModel{}, kCatalogPitches, plate, map);
    auto b = simulate_wafer(VariationModel{}, kCatalogPitches, plate, rev);
    auto by_id = [](const WaferSite& x, const WaferSite& y) { return x.site_id < y.site_id; };
    std::sort(a.begin(), a.end(), by_id);
    std::sort(b.begin(), b.end(), by_id);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].site_id == b[i].site_id);
      CHECK(a[i].modes.at(LambMode::S1)->f_r == b[i].modes.at(LambMode::S1)->f_r);
    }
  }
  SUBCASE("halving every sigma halves every relstd") {
    VariationModel full;
    full.thickness_center = plate.h;
    full.thickness_edge_drop = 0.0;
    full.thickness_noise_sigma = 12e-9;
    full.pitch_sigma = 10e-9;
    VariationModel half = full;
    half.thickness_noise_sigma /= 2;
    half.pitch_sigma /= 2;
    const auto a = per_mode_deviation(simulate_wafer(full, kCatalogPitches, plate, map));
    const auto b = per_mode_deviation(simulate_wafer(half, kCatalogPitches, plate, map));
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(b.entries[i].relstd_pct == doctest::Approx(a.entries[i].relstd_pct / 2).epsilon(0.1));
    }
  }
}

TEST_CASE("thickness sensitivity of S0 and S1") {
  const auto plate = lamb::default_plate();
  const auto map = dense_map(45.0, 3.0);
  VariationModel m;
  m.thickness_center = plate.h;
  m.thickness_edge_drop = 0.0;
  m.thickness_noise_sigma = 0.03 * plate.h;
  m.pitch_sigma = 0.0;
  SimulationOptions opt;
  opt.modes = {LambMode::S0, LambMode::S1};
  const auto report = per_mode_deviation(simulate_wafer(m, std::vector<double>{4.5e-6}, plate, map, opt));
  CHECK(group_relstd(report, LambMode::S0, 4.5e-6) < 0.1 * 3.0);
  CHECK(group_relstd(report, LambMode::S1, 4.5e-6) == doctest::Approx(3.0).epsilon(0.2));
}

TEST_CASE("default variation splits S0 and S1") {
  const auto plate = lamb::default_plate();
  const auto sites = simulate_wafer(VariationModel{}, kCatalogPitches, plate, wafer_sites());
  const auto report = per_mode_deviation(sites);
  for (double p : kCatalogPitches) {
    if (p < 1e-6) continue;
    CHECK(group_relstd(report, LambMode::S1, p) >= group_relstd(report, LambMode::S0, p));
    CHECK(group_relstd(report, LambMode::S0, p) < 1.0);
  }
}

TEST_CASE("linear propagation agrees with full re-solve") {
  const auto plate = lamb::default_plate();
  auto map = wafer_sites();
  map.resize(6);
  VariationModel m;
  m.thickness_center = plate.h;
  SimulationOptions full;
  full.full_resolve = true;
  full.modes = {LambMode::S0, LambMode::S1};
  SimulationOptions lin = full;
  lin.full_resolve = false;
  m.thickness_edge_drop = 4e-9;
  m.thickness_noise_sigma = 2e-9;
  m.pitch_sigma = 0.0;
  const std::vector<double> pitches{1e-6, 3e-6};
  const auto a = simulate_wafer(m, pitches, plate, map, full);
  const auto b = simulate_wafer(m, pitches, plate, map, lin);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (LambMode mode : full.modes) {
      CHECK(b[i].modes.at(mode)->f_r == doctest::Approx(a[i].modes.at(mode)->f_r).epsilon(1e-3));
    }
  }
}

TEST_CASE("metrics versus frequency") {
  SUBCASE("constant metrics give zero bands") {
    std::vector<WaferSite> sites;
    for (int i = 0; i < 5; ++i) sites.push_back(site("s", 1e-6, LambMode::S0, 2e9, 400.0, 0.07));
    const auto s = metrics_vs_frequency(sites);
    REQUIRE(s.at(LambMode::S0).size() == 1);
    CHECK(s.at(LambMode::S0)[0].q_std == 0.0);
    CHECK(s.at(LambMode::S0)[0].k2_std == 0.0);
  }
  SUBCASE("falling coupling and a Q plateau") {
    test::Rng rng(83);
    std::vector<WaferSite> sites;
    const std::vector<double> q_shape{250.0, 420.0, 560.0, 690.0, 705.0, 698.0, 702.0};
    for (std::size_t i = 0; i < q_shape.size(); ++i) {
      const double pitch = 4.5e-6 - 0.5e-6 * static_cast<double>(i);
      const double f = 0.7e9 * 4.5e-6 / pitch;
      const double k2 = 0.08 - 0.02 * static_cast<double>(i) / static_cast<double>(q_shape.size() - 1);
      for (int j = 0; j < 20; ++j) {
        sites.push_back(site("s", pitch, LambMode::S0, f * (1 + 0.002 * rng.normal()), 500.0, k2));
        sites.push_back(site("s", pitch, LambMode::A0, f / 3, q_shape[i] * (1 + 0.01 * rng.normal()), 0.01));
      }
    }
    const auto s = metrics_vs_frequency(sites);
    CHECK(k2_trend(s.at(LambMode::S0)) == Trend::decreasing);
    const auto& a0 = s.at(LambMode::A0);
    for (std::size_t i = 1; i < a0.size(); ++i) CHECK(a0[i].mean_f > a0[i - 1].mean_f);
    const auto plateau = q_plateau(a0);
    REQUIRE(plateau.has_value());
    CHECK(*plateau == doctest::Approx(700.0).epsilon(0.02));
    CHECK_FALSE(q_plateau(std::span(a0).first(3)).has_value());
  }
}

TEST_CASE("CSV output") {
  DeviationReport r;
  r.entries.push_back({LambMode::S0, 1e-6, 2e9, 0.5, 83, 0});
  std::ostringstream out;
  write_deviation_csv(out, r);
  CHECK(out.str() == "mode,pitch,mean_f_Hz,relstd_pct,n\nS0,1e-06,2000000000,0.5,83\n");
}
