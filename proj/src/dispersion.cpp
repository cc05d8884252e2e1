#include "lwr/dispersion.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;

#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/roots.hpp>
#include <cstdint>
#include <numbers>

#include "lwr/error.hpp"

namespace lwr::lamb {

namespace {

constexpr double kPi = std::numbers::pi;

// The two terms of each family cancel to O(w^2) below the slowest bulk
// line, so the residual is evaluated in extended precision.
using Real = long double;

// cos(sqrt z), continued to cosh(sqrt(-z)) for z < 0.
Real cos_sqrt(Real z) { return z >= 0 ? std::cos(std::sqrt(z)) : std::cosh(std::sqrt(-z)); }

// sin(sqrt z)/sqrt z, continued to sinh(sqrt(-z))/sqrt(-z) for z < 0.
Real sinc_sqrt(Real z) {
  if (std::abs(z) < Real(1e-3)) {
    return 1 - z / 6 + z * z / 120 - z * z * z / 5040 + z * z * z * z / 362880;
  }
  if (z > 0) {
    const Real s = std::sqrt(z);
    return std::sin(s) / s;
  }
  const Real s = std::sqrt(-z);
  return std::sinh(s) / s;
}

// Dimensionless residual: omega_nd = w d / v_t, xi = k d, kappa = v_l / v_t.
Real residual_nd(Real omega_nd, Real xi, Real kappa, Symmetry symmetry) {
  const Real w2 = omega_nd * omega_nd;
  const Real x = xi * xi;
  const Real p2 = w2 / (kappa * kappa) - x;
  const Real q2 = w2 - x;
  const Real a = (q2 - x) * (q2 - x);
  Real f = 0;
  if (symmetry == Symmetry::symmetric) {
    f = a * cos_sqrt(p2) * sinc_sqrt(q2) + 4 * x * p2 * sinc_sqrt(p2) * cos_sqrt(q2);
  } else {
    f = a * sinc_sqrt(p2) * cos_sqrt(q2) + 4 * x * q2 * cos_sqrt(p2) * sinc_sqrt(q2);
  }
  return f / w2;
}

std::vector<double> family_roots_nd(double xi, double kappa, Symmetry symmetry,
                                    std::size_t max_roots) {
  std::vector<double> roots;
  if (max_roots == 0) return roots;
  const double omega_max = 3.0 * kappa * xi + 2.0 * kPi * kappa;
  const double step = omega_max / static_cast<double>(kScanPoints);

  // Geometric run below the first uniform point catches the flexural root,
  // which scales as xi^2. Its lower end stays above the cancellation floor.
  std::vector<Real> grid;
  const double lo = xi > 0.0 ? std::max(1e-6 * xi, 1e-8) : 1e-6 * omega_max;
  if (lo < step) {
    constexpr int kGeometric = 80;
    const double ratio = std::pow(step / lo, 1.0 / kGeometric);
    double g = lo;
    for (int i = 0; i < kGeometric; ++i, g *= ratio) grid.push_back(g);
  }
  for (std::size_t j = 1; j <= kScanPoints; ++j) grid.push_back(step * static_cast<double>(j));

  const Real xi_r = xi, kappa_r = kappa;
  auto fn = [&](Real w) { return residual_nd(w, xi_r, kappa_r, symmetry); };
  Real prev_w = grid.front();
  Real prev_v = fn(prev_w);
  for (std::size_t i = 1; i < grid.size() && roots.size() < max_roots; ++i) {
    const Real w = grid[i];
    const Real v = fn(w);
    if (prev_v == 0) {
      roots.push_back(static_cast<double>(prev_w));
    } else if ((prev_v < 0) != (v < 0) && v != 0) {
      std::uintmax_t iters = 200;
      const auto bracket = boost::math::tools::toms748_solve(
          fn, prev_w, w, prev_v, v, boost::math::tools::eps_tolerance<Real>(56), iters);
      roots.push_back(static_cast<double>((bracket.first + bracket.second) / 2));
    }
    prev_w = w;
    prev_v = v;
  }
  return roots;
}

double kappa_of(const PlateSpec& plate) { return plate.material.v_l / plate.material.v_t; }

}  // namespace

void PlateMaterial::validate() const {
  if (!(rho > 0.0)) throw InputError("plate material '" + name + "': rho must be > 0");
  if (!(v_t > 0.0 && v_t < v_l)) {
    throw InputError("plate material '" + name + "': need 0 < v_t < v_l");
  }
}

void PlateSpec::validate() const {
  material.validate();
  if (!(h > 0.0)) throw InputError("plate thickness must be > 0");
}

PlateMaterial default_material() { return {"AlScN-effective", 3400.0, 7500.0, 3500.0}; }

PlateSpec default_plate() { return {default_material(), 400e-9}; }

double thin_plate_velocity(const PlateMaterial& m) {
  return 2.0 * m.v_t * std::sqrt(1.0 - (m.v_t * m.v_t) / (m.v_l * m.v_l));
}

double rayleigh_lamb_residual(double omega, double k, const PlateSpec& plate, Symmetry symmetry) {
  if (!(omega > 0.0) || !(k >= 0.0)) {
    throw InputError("rayleigh_lamb_residual: need omega > 0 and k >= 0");
  }
  const double d = 0.5 * plate.h;
  return static_cast<double>(
      residual_nd(omega * d / plate.material.v_t, k * d, kappa_of(plate), symmetry));
}

std::vector<double> family_roots(double k, const PlateSpec& plate, Symmetry symmetry,
                                 std::size_t max_roots) {
  plate.validate();
  if (!(k >= 0.0)) throw InputError("family_roots: k must be >= 0");
  const double d = 0.5 * plate.h;
  auto roots = family_roots_nd(k * d, kappa_of(plate), symmetry, max_roots);
  for (double& w : roots) w *= plate.material.v_t / d;
  return roots;
}

double mode_frequency(const PlateSpec& plate, LambMode mode, double k) {
  const std::size_t order = branch_order(mode);
  const auto roots = family_roots(k, plate, symmetry_of(mode), order + 1);
  if (roots.size() <= order) {
    throw RangeError(std::string(to_string(mode)) + " has no root in the scan window at k = " +
                     std::to_string(k) + " rad/m");
  }
  return roots[order] / (2.0 * kPi);
}

DispersionCurve solve_mode(const PlateSpec& plate, LambMode mode, std::span<const double> k_grid) {
  plate.validate();
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (!(k_grid[i] > 0.0)) throw InputError("solve_mode: k grid must be positive");
    if (i > 0 && !(k_grid[i] > k_grid[i - 1])) {
      throw InputError("solve_mode: k grid must be strictly increasing");
    }
  }
  DispersionCurve curve;
  curve.mode = mode;
  const std::size_t order = branch_order(mode);
  const Symmetry sym = symmetry_of(mode);
  bool in_gap = false;
  for (double k : k_grid) {
    const auto roots = family_roots(k, plate, sym, order + 1);
    if (roots.size() > order) {
      curve.samples.push_back({k, roots[order] / (2.0 * kPi)});
      in_gap = false;
    } else if (in_gap) {
      curve.gaps.back().k_hi = k;
    } else {
      curve.gaps.push_back({k, k});
      in_gap = true;
    }
  }
  return curve;
}

double pitch_to_frequency(const DispersionCurve& curve, double pitch) {
  if (!(pitch > 0.0)) throw InputError("pitch_to_frequency: pitch must be > 0");
  const double k = kPi / pitch;
  const auto& s = curve.samples;
  if (s.empty() || k < s.front().k || k > s.back().k) {
    throw RangeError("pitch_to_frequency: k = " + std::to_string(k) +
                     " rad/m lies outside the solved range of " + std::string(to_string(curve.mode)));
  }
  for (const auto& g : curve.gaps) {
    if (k >= g.k_lo && k <= g.k_hi) {
      throw RangeError("pitch_to_frequency: k lies inside a gap of " +
                       std::string(to_string(curve.mode)));
    }
  }
  const auto upper = std::lower_bound(s.begin(), s.end(), k,
                                      [](const DispersionSample& a, double v) { return a.k < v; });
  if (upper->k == k) return upper->f;
  const std::size_t hi = static_cast<std::size_t>(upper - s.begin());
  const std::size_t lo = hi - 1;
  auto crosses_gap = [&](std::size_t a, std::size_t b) {
    return std::any_of(curve.gaps.begin(), curve.gaps.end(), [&](const KGap& g) {
      return g.k_lo < s[b].k && g.k_hi > s[a].k;
    });
  };
  if (crosses_gap(lo, hi)) {
    throw RangeError("pitch_to_frequency: k lies inside a gap of " +
                     std::string(to_string(curve.mode)));
  }

  // Contiguous gap-free run around the bracket.
  std::size_t first = lo;
  while (first > 0 && !crosses_gap(first - 1, first)) --first;
  std::size_t last = hi;
  while (last + 1 < s.size() && !crosses_gap(last, last + 1)) ++last;
  if (last - first + 1 < 4) {
    const double t = (k - s[lo].k) / (s[hi].k - s[lo].k);
    return s[lo].f + t * (s[hi].f - s[lo].f);
  }
  std::vector<double> xs, ys;
  for (std::size_t i = first; i <= last; ++i) {
    xs.push_back(s[i].k);
    ys.push_back(s[i].f);
  }
  boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
  return spline(k);
}

double pitch_to_frequency(double pitch, LambMode mode, const PlateSpec& plate) {
  if (!(pitch > 0.0)) throw InputError("pitch_to_frequency: pitch must be > 0");
  const double k0 = kPi / pitch;
  std::vector<double> grid;
  for (int i = -3; i <= 3; ++i) grid.push_back(k0 * (1.0 + 0.02 * i));
  return pitch_to_frequency(solve_mode(plate, mode, grid), pitch);
}

Sensitivity sensitivity(const PlateSpec& plate, LambMode mode, double k) {
  plate.validate();
  if (!(k > 0.0)) throw InputError("sensitivity: k must be > 0");
  const double eps = kSensitivityStep;
  const double dlog = std::log1p(eps) - std::log1p(-eps);
  auto freq = [&](const PlateSpec& p, double kk) {
    try {
      return mode_frequency(p, mode, kk);
    } catch (const RangeError& e) {
      throw RangeError(std::string("sensitivity: perturbed solve failed: ") + e.what());
    }
  };
  PlateSpec thick = plate, thin = plate;
  thick.h = plate.h * (1.0 + eps);
  thin.h = plate.h * (1.0 - eps);
  Sensitivity s;
  s.dlnf_dlnh = (std::log(freq(thick, k)) - std::log(freq(thin, k))) / dlog;
  const double pitch = kPi / k;
  const double k_long = kPi / (pitch * (1.0 + eps));
  const double k_short = kPi / (pitch * (1.0 - eps));
  s.dlnf_dlnp = (std::log(freq(plate, k_long)) - std::log(freq(plate, k_short))) / dlog;
  return s;
}

}  // namespace lwr::lamb
