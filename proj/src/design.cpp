#include "lwr/design.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "lwr/error.hpp"

namespace lwr::design {

namespace {

constexpr double kRel = 1e-9;

bool within(double v, double lo, double hi) { return v >= lo * (1.0 - kRel) && v <= hi * (1.0 + kRel); }

}  // namespace

std::string_view to_string(DeviceLayer l) {
  switch (l) {
    case DeviceLayer::SMALL: return "SMALL";
    case DeviceLayer::LARGE: return "LARGE";
    case DeviceLayer::PADS: return "PADS";
  }
  return "?";
}

DeviceLayer parse_layer(std::string_view s) {
  if (s == "SMALL") return DeviceLayer::SMALL;
  if (s == "LARGE") return DeviceLayer::LARGE;
  if (s == "PADS") return DeviceLayer::PADS;
  throw InputError("unknown device layer '" + std::string(s) + "'");
}

void IdtSpec::validate() const {
  if (!(pitch > 0.0)) throw DesignError("IDT pitch must be > 0");
  if (std::abs(wavelength - 2.0 * pitch) > kRel * wavelength) {
    throw DesignError("IDT wavelength must equal twice the pitch");
  }
  if (std::abs(finger_width - 0.5 * pitch) > kRel * pitch) {
    throw DesignError("IDT finger width must equal half the pitch");
  }
  if (n_fingers < 2 || n_fingers % 2 != 0) {
    throw DesignError("IDT finger count must be even and >= 2 (got " + std::to_string(n_fingers) + ")");
  }
  if (!(aperture > 0.0)) throw DesignError("IDT aperture must be > 0");
  if (!(gap >= 0.0)) throw DesignError("IDT gap must be >= 0");
  if (dummy_count_per_side < 0) throw DesignError("dummy finger count must be >= 0");
}

IdtSpec make_idt(double pitch, int n_fingers, int dummy_count_per_side) {
  IdtSpec s;
  s.pitch = pitch;
  s.wavelength = 2.0 * pitch;
  s.finger_width = 0.5 * pitch;
  s.aperture = kApertureWavelengths * s.wavelength;
  s.gap = 0.5 * s.wavelength;
  s.n_fingers = n_fingers;
  s.dummy_count_per_side = dummy_count_per_side;
  s.validate();
  return s;
}

void CapacitanceModel::validate() const {
  if (!(eps_r > 1.0)) throw InputError("capacitance model: eps_r must be > 1");
  if (!(h_piezo > 0.0)) throw InputError("capacitance model: h_piezo must be > 0");
}

double static_capacitance(const IdtSpec& idt, const CapacitanceModel& cap) {
  idt.validate();
  cap.validate();
  const double c_f = kEpsilon0 * cap.eps_r * idt.aperture * idt.finger_width / cap.h_piezo;
  return 0.5 * idt.n_fingers * (0.5 * c_f);
}

LayerAssignment layer_assignment(double pitch) {
  if (within(pitch, 500e-9, 1e-6)) return {DeviceLayer::SMALL, true};
  if (within(pitch, 1.5e-6, 4.5e-6)) return {DeviceLayer::LARGE, true};
  char buf[128];
  if (pitch > 1e-6 && pitch < 1.5e-6) {
    std::snprintf(buf, sizeof buf,
                  "pitch %.4g um falls in the unassigned gap between the SMALL (<= 1 um) and "
                  "LARGE (>= 1.5 um) exposures",
                  pitch * 1e6);
  } else {
    std::snprintf(buf, sizeof buf, "pitch %.4g um is outside the catalog range 0.5-4.5 um",
                  pitch * 1e6);
  }
  throw DesignError(buf);
}

double recommend_dose(double finger_width) {
  if (!(finger_width >= 250e-9 - kDoseTolerance && finger_width <= 2.25e-6 + kDoseTolerance)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "finger width %.4g nm is outside the fabricated range 250-2250 nm",
                  finger_width * 1e9);
    throw RangeError(buf);
  }
  return finger_width <= 250e-9 + kDoseTolerance ? kDoseSmall : kDoseLarge;
}

double static_impedance(double f, double c0) { return 1.0 / (2.0 * std::numbers::pi * f * c0); }

std::string design_id(double pitch, LambMode mode) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_p%04.0fnm", std::string(lwr::to_string(mode)).c_str(), pitch * 1e9);
  return buf;
}

ResonatorDesign match_finger_count(double pitch, const lamb::PlateSpec& plate,
                                   const CapacitanceModel& cap, LambMode mode,
                                   double target_impedance, const MatchOptions& options) {
  if (!(target_impedance > 0.0)) throw InputError("target impedance must be > 0");
  const LayerAssignment layer = layer_assignment(pitch);
  ResonatorDesign d;
  d.id = design_id(pitch, mode);
  d.plate = plate;
  d.mode = mode;
  d.target_impedance = target_impedance;
  d.f_mid = lamb::pitch_to_frequency(pitch, mode, plate);
  d.layer = layer.layer;

  IdtSpec idt = make_idt(pitch, 2, options.dummy_count_per_side);
  const double c_pair = static_capacitance(idt, cap);
  const double pairs = std::ceil(1.0 / (2.0 * std::numbers::pi * d.f_mid * target_impedance * c_pair));
  if (!(pairs <= 0.5 * options.max_fingers)) {
    throw DesignError(d.id + ": matching " + std::to_string(target_impedance) +
                      " ohm needs more than the cap of " + std::to_string(options.max_fingers) +
                      " fingers");
  }
  int n = 2 * std::max(1, static_cast<int>(pairs));
  auto z_of = [&](int fingers) { return static_impedance(d.f_mid, c_pair * (fingers / 2)); };
  while (z_of(n) > target_impedance) n += 2;
  while (n > 2 && z_of(n - 2) <= target_impedance) n -= 2;
  if (n > options.max_fingers) {
    throw DesignError(d.id + ": finger count " + std::to_string(n) + " exceeds the cap of " +
                      std::to_string(options.max_fingers));
  }
  idt.n_fingers = n;
  d.idt = idt;
  d.c0_estimate = static_capacitance(idt, cap);
  d.achieved_impedance = static_impedance(d.f_mid, d.c0_estimate);
  d.dose = recommend_dose(idt.finger_width);
  return d;
}

}  // namespace lwr::design
