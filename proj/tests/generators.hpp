#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "lwr/error.hpp"
#include "lwr/layout.hpp"
#include "support.hpp"

namespace lwr::test {

inline std::complex<double> random_gamma(Rng& rng, double max_mag = 0.95) {
  return std::polar(rng.uniform(0.01, max_mag), rng.uniform(-3.1, 3.1));
}

// Convex polygon with vertices on a circle, counter-clockwise, integer
// rounded; retried until it validates.
inline layout::Polygon random_convex(Rng& rng, int layer) {
  for (;;) {
    const int n = rng.integer(3, 12);
    const double cx = rng.uniform(-1e6, 1e6), cy = rng.uniform(-1e6, 1e6), r = rng.uniform(50.0, 1e5);
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    std::sort(angles.begin(), angles.end());
    layout::Polygon p{layer, rng.integer(0, 3), {}};
    for (double a : angles) {
      p.vertices.push_back({static_cast<std::int32_t>(std::lround(cx + r * std::cos(a))),
                            static_cast<std::int32_t>(std::lround(cy + r * std::sin(a)))});
    }
    try {
      layout::validate_polygon(p);
      return p;
    } catch (const InputError&) {
    }
  }
}

inline layout::Library random_library(Rng& rng) {
  layout::Library lib;
  const int n_cells = rng.integer(1, 5);
  for (int c = 0; c < n_cells; ++c) {
    layout::Cell cell;
    cell.name = "CELL_" + std::to_string(c);
    const int n_poly = rng.integer(0, 6);
    for (int i = 0; i < n_poly; ++i) {
      if (rng.integer(0, 1) == 0) {
        const int x = rng.integer(-1'000'000, 1'000'000), y = rng.integer(-1'000'000, 1'000'000);
        cell.polygons.push_back(layout::rectangle(rng.integer(1, 63), x, y, x + rng.integer(1, 5000), y + rng.integer(1, 5000)));
      } else {
        cell.polygons.push_back(random_convex(rng, rng.integer(1, 63)));
      }
    }
    for (int i = 0; i < c && rng.integer(0, 1) == 1; ++i) {
      cell.placements.push_back({"CELL_" + std::to_string(rng.integer(0, c - 1)),
                                 {rng.integer(-5'000'000, 5'000'000), rng.integer(-5'000'000, 5'000'000)},
                                 90 * rng.integer(0, 3)});
    }
    lib.cells.push_back(std::move(cell));
  }
  return lib;
}

}  // namespace lwr::test
