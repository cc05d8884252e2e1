#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lwr/mode.hpp"

namespace lwr::lamb {

enum class Symmetry { symmetric, antisymmetric };

inline Symmetry symmetry_of(LambMode m) {
  return is_symmetric(m) ? Symmetry::symmetric : Symmetry::antisymmetric;
}

// Effective isotropic plate material.
struct PlateMaterial {
  std::string name;
  double rho = 0.0;  // kg/m^3
  double v_l = 0.0;  // m/s
  double v_t = 0.0;  // m/s

  void validate() const;
};

struct PlateSpec {
  PlateMaterial material;
  double h = 0.0;  // m

  void validate() const;
};

// Calibrated effective constants for the metal/AlScN/metal laminate; they put
// S0 near 0.69 GHz at a 9 um wavelength and near 5.4 GHz at 1 um.
PlateMaterial default_material();
PlateSpec default_plate();

struct DispersionSample {
  double k = 0.0;  // rad/m
  double f = 0.0;  // Hz
};

// Closed k interval where no root was found in the scan window.
struct KGap {
  double k_lo = 0.0;
  double k_hi = 0.0;
};

struct DispersionCurve {
  LambMode mode = LambMode::S0;
  std::vector<DispersionSample> samples;
  std::vector<KGap> gaps;
};

// Real Rayleigh-Lamb characteristic function in dimensionless form. With
// d = h/2, P^2 = (w d / v_l)^2 - (k d)^2 and Q^2 = (w d / v_t)^2 - (k d)^2:
//   symmetric:     (Q^2 - X)^2 C(P^2) S(Q^2) + 4 X P^2 S(P^2) C(Q^2)
//   antisymmetric: (Q^2 - X)^2 S(P^2) C(Q^2) + 4 X Q^2 C(P^2) S(Q^2)
// where X = (k d)^2, C(z) = cos(sqrt z), S(z) = sin(sqrt z)/sqrt z. Both C and
// S are entire in z, so the residual is smooth through P^2 = 0 and Q^2 = 0.
// The result is divided by (w d / v_t)^2 to remove the trivial root at w = 0.
double rayleigh_lamb_residual(double omega, double k, const PlateSpec& plate, Symmetry symmetry);

// Ascending angular-frequency roots of one symmetry family at wavenumber k,
// at most max_roots of them, found by sign scan over
// (0, 3 v_l k + 4 pi v_l / h] (2000 uniform points plus a geometric run near
// zero) and bracketed refinement.
std::vector<double> family_roots(double k, const PlateSpec& plate, Symmetry symmetry,
                                 std::size_t max_roots);

inline constexpr std::size_t kScanPoints = 2000;
inline constexpr double kRootRelTolerance = 1e-9;

DispersionCurve solve_mode(const PlateSpec& plate, LambMode mode, std::span<const double> k_grid);

// Frequency of a mode at a single wavenumber. Throws RangeError when the
// branch is not found in the scan window.
double mode_frequency(const PlateSpec& plate, LambMode mode, double k);

// f at k = pi/pitch by monotone cubic (PCHIP) interpolation of the curve.
// Throws RangeError when k falls outside the solved samples or touches a gap.
double pitch_to_frequency(const DispersionCurve& curve, double pitch);

// Convenience: solves a short local curve around k = pi/pitch, then
// interpolates it.
double pitch_to_frequency(double pitch, LambMode mode, const PlateSpec& plate);

struct Sensitivity {
  double dlnf_dlnh = 0.0;
  double dlnf_dlnp = 0.0;
};

inline constexpr double kSensitivityStep = 1e-4;

// Logarithmic sensitivities of the mode frequency at k (pitch = pi/k) by
// central differences with relative step kSensitivityStep.
Sensitivity sensitivity(const PlateSpec& plate, LambMode mode, double k);

double thin_plate_velocity(const PlateMaterial& m);

}  // namespace lwr::lamb
