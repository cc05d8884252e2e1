#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lwr/dispersion.hpp"
#include "lwr/mode.hpp"

namespace lwr::design {

// Exposure a pattern belongs to on the three-exposure reticle.
enum class DeviceLayer { SMALL, LARGE, PADS };

std::string_view to_string(DeviceLayer l);
DeviceLayer parse_layer(std::string_view s);

struct IdtSpec {
  double pitch = 0.0;         // finger centre-to-centre spacing (m)
  double wavelength = 0.0;    // 2 * pitch
  double finger_width = 0.0;  // pitch / 2
  double aperture = 0.0;      // finger overlap (m)
  double gap = 0.0;           // finger tip to opposite busbar (m)
  int n_fingers = 2;
  int dummy_count_per_side = 3;

  void validate() const;
};

inline constexpr double kApertureWavelengths = 10.0;
inline constexpr int kDefaultDummies = 3;

// Spec for a pitch with the default proportions: aperture 10 wavelengths,
// gap half a wavelength.
IdtSpec make_idt(double pitch, int n_fingers, int dummy_count_per_side = kDefaultDummies);

// Vertical-field capacitor through the piezo onto a floating bottom plate.
struct CapacitanceModel {
  double eps_r = 16.0;
  double h_piezo = 400e-9;  // m

  void validate() const;
};

inline constexpr double kEpsilon0 = 8.8541878128e-12;  // F/m

// c_f = eps0 eps_r (aperture * finger_width) / h per finger; opposite
// fingers couple in series through the bottom plate, pairs add in parallel:
// C0 = (n / 2) (c_f / 2).
double static_capacitance(const IdtSpec& idt, const CapacitanceModel& cap);

struct LayerAssignment {
  DeviceLayer layer = DeviceLayer::SMALL;
  bool pads = true;  // pads always go to the PADS exposure
};

// SMALL for pitch in [500 nm, 1 um], LARGE for [1.5 um, 4.5 um]. Throws
// DesignError in the unassigned (1 um, 1.5 um) interval or outside the
// catalog.
LayerAssignment layer_assignment(double pitch);

inline constexpr double kDoseSmall = 21.75;  // mJ/cm^2
inline constexpr double kDoseLarge = 20.50;  // mJ/cm^2
inline constexpr double kDoseTolerance = 1e-9;  // m

// Step lookup over the fabricated width range [250 nm, 2.25 um]. Throws
// RangeError outside it.
double recommend_dose(double finger_width);

struct ResonatorDesign {
  std::string id;
  IdtSpec idt;
  lamb::PlateSpec plate;
  LambMode mode = LambMode::S0;
  double target_impedance = 200.0;  // ohm
  double f_mid = 0.0;               // Hz
  DeviceLayer layer = DeviceLayer::SMALL;
  double dose = 0.0;                // mJ/cm^2
  double c0_estimate = 0.0;         // F
  double achieved_impedance = 0.0;  // 1 / (2 pi f_mid C0), ohm
};

struct MatchOptions {
  int max_fingers = 1000;
  int dummy_count_per_side = kDefaultDummies;
};

// Smallest even finger count whose static impedance at f_mid is at or below
// the target. Throws DesignError above max_fingers; dispersion RangeError
// propagates.
ResonatorDesign match_finger_count(double pitch, const lamb::PlateSpec& plate,
                                   const CapacitanceModel& cap, LambMode mode,
                                   double target_impedance, const MatchOptions& options = {});

double static_impedance(double f, double c0);

// Pitch sweep shipped with the toolkit. Finger counts from fabricated devices
// are kept as metadata only.
struct CatalogEntry {
  double pitch = 0.0;
  int reference_fingers = 0;  // 0 when no reference value
};

struct DesignCatalog {
  double target_impedance = 200.0;
  LambMode mode = LambMode::S0;
  std::vector<CatalogEntry> entries;
};

std::string design_id(double pitch, LambMode mode);

}  // namespace lwr::design
