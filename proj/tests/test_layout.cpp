#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lwr/error.hpp"
#include "lwr/layout.hpp"
#include "support.hpp"

using namespace lwr;
using namespace lwr::layout;

namespace {

design::ResonatorDesign hand_design(double pitch, int n, int dummies, double aperture) {
  design::ResonatorDesign d;
  d.id = design::design_id(pitch, LambMode::S0);
  d.idt = design::make_idt(pitch, n, dummies);
  d.idt.aperture = aperture;
  d.layer = pitch <= 1e-6 ? design::DeviceLayer::SMALL : design::DeviceLayer::LARGE;
  d.plate = lamb::default_plate();
  return d;
}

std::vector<Polygon> on_layer(const Cell& c, int layer) {
  std::vector<Polygon> out;
  for (const auto& p : c.polygons) {
    if (p.layer == layer) out.push_back(p);
  }
  return out;
}

struct Rect {
  std::int64_t x0, y0, x1, y1;
};

Rect rect_of(const Polygon& p) {
  Rect r{INT64_MAX, INT64_MAX, INT64_MIN, INT64_MIN};
  for (const auto& v : p.vertices) {
    r.x0 = std::min<std::int64_t>(r.x0, v.x);
    r.y0 = std::min<std::int64_t>(r.y0, v.y);
    r.x1 = std::max<std::int64_t>(r.x1, v.x);
    r.y1 = std::max<std::int64_t>(r.y1, v.y);
  }
  return r;
}

// Independent chip count: fine sampling of the chip outline against the
// usable region, written without the library's corner shortcut.
int oracle_count(double w, double h, const WaferGeometry& g) {
  const double R = g.diameter_mm / 2.0, usable = R - g.edge_exclusion_mm;
  const double flat_y = g.flat_length_mm > 0.0
                            ? -std::sqrt(R * R - g.flat_length_mm * g.flat_length_mm / 4.0) + g.edge_exclusion_mm
                            : -1e9;
  int count = 0;
  for (int j = -100; j <= 100; ++j) {
    for (int i = -100; i <= 100; ++i) {
      const double cx = i * (w + g.street_mm), cy = j * (h + g.street_mm);
      bool ok = true;
      for (int sx = -1; sx <= 1 && ok; sx += 2) {
        for (int sy = -1; sy <= 1 && ok; sy += 2) {
          const double x = cx + sx * w / 2, y = cy + sy * h / 2;
          if (std::hypot(x, y) > usable + 1e-9 || y < flat_y - 1e-9) ok = false;
        }
      }
      const bool overlap = cx - w / 2 < g.keepout_width_mm / 2 - 1e-9 && cx + w / 2 > -g.keepout_width_mm / 2 + 1e-9 &&
                           cy - h / 2 < g.keepout_height_mm / 2 - 1e-9 && cy + h / 2 > -g.keepout_height_mm / 2 + 1e-9;
      if (ok && !overlap) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("database units") {
  CHECK(to_db(1e-6) == 1000);
  CHECK(to_db(-2.6e-9) == -3);
  CHECK_THROWS_AS(to_db(3.0), CoordinateError);
  CHECK_THROWS_AS(rectangle(1, 0, 0, 3'000'000'000LL, 10), CoordinateError);
}

TEST_CASE("polygon validation") {
  CHECK_NOTHROW(validate_polygon(rectangle(1, 0, 0, 10, 10)));
  Polygon cw{1, 0, {{0, 0}, {0, 10}, {10, 10}, {10, 0}}};
  CHECK_THROWS_AS(validate_polygon(cw), InputError);
  Polygon bowtie{1, 0, {{0, 0}, {10, 10}, {10, 0}, {0, 10}}};
  CHECK_THROWS_AS(validate_polygon(bowtie), InputError);
  Polygon two{1, 0, {{0, 0}, {10, 0}, {0, 0}}};
  CHECK_THROWS_AS(validate_polygon(two), InputError);
  Polygon spike{1, 0, {{0, 0}, {10, 0}, {10, 10}, {10, 5}, {0, 10}}};
  CHECK_THROWS_AS(validate_polygon(spike), InputError);
}

TEST_CASE("IDT cell geometry") {
  const LayerMap layers;
  SUBCASE("odd finger count rejected") {
    auto d = hand_design(1e-6, 2, 0, 20e-6);
    d.idt.n_fingers = 1;
    CHECK_THROWS_AS(gen_idt_cell(d, layers), DesignError);
  }
  SUBCASE("two fingers") {
    const auto c = gen_idt_cell(hand_design(1e-6, 2, 0, 20e-6), layers);
    const auto idt = on_layer(c, layers.idt_small);
    REQUIRE(idt.size() == 4);
    std::vector<Rect> fingers, bars;
    for (const auto& p : idt) {
      const Rect r = rect_of(p);
      (r.x1 - r.x0 == 500 ? fingers : bars).push_back(r);
    }
    REQUIRE(fingers.size() == 2);
    REQUIRE(bars.size() == 2);
    std::sort(fingers.begin(), fingers.end(), [](const Rect& a, const Rect& b) { return a.x0 < b.x0; });
    CHECK((fingers[0].x0 + fingers[0].x1) == 0);
    CHECK((fingers[1].x0 + fingers[1].x1) == 2000);
    for (const auto& b : bars) CHECK(b.y1 - b.y0 == 5000);
  }
  SUBCASE("dummies") {
    const auto c = gen_idt_cell(hand_design(1e-6, 4, 3, 20e-6), layers);
    CHECK(on_layer(c, layers.idt_small).size() == 4 + 2 + 6);
  }
}

TEST_CASE("property: generated IDT geometry is valid and measurable") {
  const LayerMap layers;
  test::Rng rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    const int pitch_nm = 2 * rng.integer(250, 2250);
    const int n = 2 * rng.integer(1, 80);
    const int dummies = rng.integer(0, 5);
    auto d = hand_design(pitch_nm * 1e-9, n, dummies, 20.0 * pitch_nm * 1e-9);
    const auto c = gen_idt_cell(d, layers);
    for (const auto& p : c.polygons) REQUIRE_NOTHROW(validate_polygon(p));
    const int idt_layer = layers.idt_for(d.layer);
    std::vector<Rect> fingers;
    for (const auto& p : on_layer(c, idt_layer)) {
      const Rect r = rect_of(p);
      if (r.y1 - r.y0 != 5000) fingers.push_back(r);
    }
    REQUIRE(static_cast<int>(fingers.size()) == n + 2 * dummies);
    std::sort(fingers.begin(), fingers.end(), [](const Rect& a, const Rect& b) { return a.x0 < b.x0; });
    for (std::size_t i = 0; i < fingers.size(); ++i) {
      REQUIRE(fingers[i].x1 - fingers[i].x0 == pitch_nm / 2);
      if (i > 0) REQUIRE(fingers[i].x0 - fingers[i - 1].x0 == pitch_nm);
    }
    // Dummies are the fingers that reach neither busbar exclusively.
    int active = 0;
    for (const auto& f : fingers) {
      if (f.y0 == 0 || f.y1 == to_db(d.idt.aperture)) ++active;
    }
    CHECK(active == n);
    std::set<int> used;
    for (const auto& p : c.polygons) used.insert(p.layer);
    CHECK(used == std::set<int>{idt_layer, layers.pads, layers.bottom, layers.outline});
    // Two tethers plus the plate on the outline layer.
    CHECK(on_layer(c, layers.outline).size() == 3);
    CHECK(on_layer(c, layers.pads).size() == 3);
  }
}

TEST_CASE("chip packing") {
  const LayerMap layers;
  SUBCASE("empty chip is the outline only") {
    const auto lib = gen_chip({}, layers);
    REQUIRE(lib.cells.size() == 1);
    CHECK(lib.cells.back().polygons.size() == 1);
    CHECK(lib.cells.back().placements.empty());
  }
  SUBCASE("one device plus twins") {
    ChipSpec spec;
    spec.devices.push_back(hand_design(1e-6, 20, 3, 20e-6));
    const auto lib = gen_chip(spec, layers);
    CHECK(lib.cells.back().placements.size() == 3);
    CHECK_NOTHROW(validate_library(lib));
  }
  SUBCASE("catalog sweep fits the 17 x 3 mm chip") {
    ChipSpec spec;
    const design::CapacitanceModel cap;
    for (double p : {0.5e-6, 0.75e-6, 1e-6, 1.5e-6, 2e-6, 2.5e-6, 3e-6, 3.5e-6, 4e-6, 4.5e-6}) {
      spec.devices.push_back(design::match_finger_count(p, lamb::default_plate(), cap, LambMode::S0, 200.0));
    }
    const auto lib = gen_chip(spec, layers);
    const Cell& chip = lib.at(kChipCell);
    CHECK(chip.placements.size() == 30);
    const Box b = bounding_box(lib, chip);
    CHECK(b.x0 >= 0);
    CHECK(b.y0 >= 0);
    CHECK(b.x1 <= 17'000'000);
    CHECK(b.y1 <= 3'000'000);
    // Order: ascending pitch, each device followed by its twins.
    CHECK(chip.placements[0].cell == "S0_p0500nm");
    CHECK(chip.placements[1].cell == "S0_p0500nm_OPEN");
    CHECK(chip.placements[2].cell == "S0_p0500nm_SHORT");
    // No two placed footprints overlap.
    std::vector<Box> boxes;
    for (const auto& pl : chip.placements) {
      Box cb = bounding_box(lib, lib.at(pl.cell));
      boxes.push_back({cb.x0 + pl.origin.x, cb.y0 + pl.origin.y, cb.x1 + pl.origin.x, cb.y1 + pl.origin.y});
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const bool apart = boxes[i].x1 <= boxes[j].x0 || boxes[j].x1 <= boxes[i].x0 ||
                           boxes[i].y1 <= boxes[j].y0 || boxes[j].y1 <= boxes[i].y0;
        REQUIRE(apart);
      }
    }
  }
  SUBCASE("overflow names the first device that does not fit") {
    ChipSpec spec;
    spec.width = 2e-3;
    spec.height = 0.5e-3;
    spec.devices.push_back(hand_design(1e-6, 20, 3, 20e-6));
    spec.devices.push_back(hand_design(4e-6, 200, 3, 80e-6));
    try {
      (void)gen_chip(spec, layers);
      FAIL("expected PackingError");
    } catch (const PackingError& e) {
      CHECK(std::string(e.what()).find("S0_p4000nm") != std::string::npos);
    }
  }
}

TEST_CASE("reticle") {
  const LayerMap layers;
  ChipSpec spec;
  spec.devices.push_back(hand_design(1e-6, 20, 3, 20e-6));
  spec.devices.push_back(hand_design(2e-6, 20, 3, 40e-6));
  auto lib = gen_chip(spec, layers);
  const auto ret = default_reticle(spec, layers);
  CHECK(ret.demag == 4);
  CHECK(ret.windows.size() == 5);
  gen_reticle(lib, ret, layers);
  CHECK_NOTHROW(validate_library(lib));
  const Cell& r = lib.at(kReticleCell);
  CHECK(r.placements.size() == 5);
  const Box b = bounding_box(lib, r);
  CHECK(b.x1 <= 22'000'000);
  CHECK(b.y1 <= 22'000'000);
  // Each window cell holds a single layer.
  for (const auto& pl : r.placements) {
    std::set<int> l;
    for (const auto& p : lib.at(pl.cell).polygons) l.insert(p.layer);
    CHECK(l.size() <= 1);
  }
  ReticleSpec bad = ret;
  bad.windows[1].y = bad.windows[0].y;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  ReticleSpec bad_demag = ret;
  bad_demag.demag = 5;
  CHECK_THROWS_AS(bad_demag.validate(), ConfigError);
}

TEST_CASE("wafer map") {
  const WaferGeometry frozen;
  const auto sites = gen_wafer_map(17.0, 3.0, frozen);
  CHECK(sites.size() == 83);
  CHECK(oracle_count(17.0, 3.0, frozen) == 83);
  for (std::size_t i = 1; i < sites.size(); ++i) {
    const bool row_major = sites[i].y_mm < sites[i - 1].y_mm ||
                           (sites[i].y_mm == sites[i - 1].y_mm && sites[i].x_mm > sites[i - 1].x_mm);
    CHECK(row_major);
  }
  CHECK(gen_wafer_map(120.0, 3.0, frozen).empty());
  CHECK(gen_wafer_map(17.0, 1.5, frozen).size() >= 2 * sites.size() - 20);

  test::Rng rng(52);
  for (int i = 0; i < 30; ++i) {
    WaferGeometry g;
    g.edge_exclusion_mm = rng.uniform(0.0, 10.0);
    g.flat_length_mm = rng.uniform(0.0, 40.0);
    g.keepout_width_mm = rng.uniform(0.0, 30.0);
    g.keepout_height_mm = rng.uniform(0.0, 10.0);
    g.street_mm = rng.uniform(0.0, 1.0);
    const double w = rng.uniform(2.0, 20.0), h = rng.uniform(1.0, 10.0);
    const auto n = gen_wafer_map(w, h, g).size();
    CHECK(static_cast<int>(n) == oracle_count(w, h, g));
    CHECK(gen_wafer_map(w, h / 2.0, g).size() >= n);
  }
}

TEST_CASE("polygon CSV dump") {
  Library lib;
  lib.cells.push_back({"TOP", {rectangle(3, 0, 0, 10, 20)}, {}});
  std::ostringstream out;
  write_polygon_csv(out, lib);
  CHECK(out.str() == "cell,layer,datatype,polygon,vertex,x_nm,y_nm\nTOP,3,0,0,0,0,0\nTOP,3,0,0,1,10,0\n"
                     "TOP,3,0,0,2,10,20\nTOP,3,0,0,3,0,20\n");
}

TEST_CASE("library validation") {
  Library lib;
  lib.cells.push_back({"A", {}, {{"B", {0, 0}, 0}}});
  lib.cells.push_back({"B", {}, {{"A", {0, 0}, 0}}});
  CHECK_THROWS_AS(validate_library(lib), InputError);
  lib.cells[1].placements.clear();
  CHECK_NOTHROW(validate_library(lib));
  lib.cells[0].placements[0].rotation = 45;
  CHECK_THROWS_AS(validate_library(lib), InputError);
  lib.cells[0].placements[0].rotation = 90;
  lib.cells[1].name = "bad name";
  CHECK_THROWS_AS(validate_library(lib), InputError);
}
