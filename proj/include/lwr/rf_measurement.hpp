#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lwr/equivalent_circuit.hpp"

namespace lwr::rf {

using Complex = std::complex<double>;

enum class FrequencyUnit { Hz, kHz, MHz, GHz };
enum class DataFormat { RI, MA, DB };

double unit_scale(FrequencyUnit u);
std::string_view to_string(FrequencyUnit u);
std::string_view to_string(DataFormat f);

// One data line exactly as written: frequency in the file's unit and the
// S11 pair in the file's format.
struct TouchstonePoint {
  double freq = 0.0;
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const TouchstonePoint&, const TouchstonePoint&) = default;
};

// One-port Touchstone v1.1 document. Points keep their on-file numbers so
// that parsing and serialising are exact inverses; analysis goes through
// hz() and s11().
struct TouchstoneFile {
  FrequencyUnit unit = FrequencyUnit::GHz;
  DataFormat format = DataFormat::MA;
  double z0 = 50.0;
  std::vector<std::string> comments;  // without the leading '!'
  std::vector<TouchstonePoint> points;

  std::size_t size() const { return points.size(); }
  double hz(std::size_t i) const;
  Complex s11(std::size_t i) const;
  std::vector<double> frequencies_hz() const;
  // Appends a point given in Hz and real/imaginary form, encoded in the
  // file's unit and format.
  void push_back(double f_hz, Complex s11);

  void validate() const;
  friend bool operator==(const TouchstoneFile&, const TouchstoneFile&) = default;
};

// Option line "# <unit> S <format> R <z0>", case-insensitive, fields optional
// (defaults GHz, MA, 50). Only the first option line counts. Throws
// ParseError with the 1-based line number.
TouchstoneFile parse_touchstone(std::string_view text);
TouchstoneFile read_touchstone(const std::string& path);

// Shortest round-trip decimal form of every stored number.
std::string serialize_touchstone(const TouchstoneFile& file);
void write_touchstone(const std::string& path, const TouchstoneFile& file);

// Y = (1 - s) / (z0 (1 + s)). Throws SingularityError at s = -1.
Complex s11_to_y(Complex s, double z0);
// Inverse transform; throws SingularityError at y = -1/z0.
Complex y_to_s11(Complex y, double z0);

// Admittance trace of a one-port file.
mbvd::AdmittanceTrace to_admittance(const TouchstoneFile& file);

// Three-term one-port error model
//   m = e00 + e10e01 G / (1 - e11 G).
struct ErrorBox {
  Complex e00{0.0, 0.0};     // directivity
  Complex e11{0.0, 0.0};     // source match
  Complex e10e01{1.0, 0.0};  // reflection tracking

  Complex de() const { return e00 * e11 - e10e01; }
  Complex measure(Complex actual) const;
};

// Standard definition: a lumped termination behind a lossy offset line.
// The open carries a capacitance C(f) = c0 + c1 f + c2 f^2 + c3 f^3 (F, f in
// Hz), the short an inductance L(f) with the same form (H); the load is
// matched. The offset contributes exp(-2 j w delay) and a round-trip loss of
// 2 (loss_db_per_sqrt_ghz sqrt(f/GHz)) dB.
struct StandardDefinition {
  std::vector<double> reactance_poly;
  double offset_delay_s = 0.0;
  double loss_db_per_sqrt_ghz = 0.0;
};

struct CalKit {
  StandardDefinition short_std;
  StandardDefinition open_std;
  StandardDefinition load_std;

  // Ideal -1, +1, 0 when all terms are zero.
  Complex short_gamma(double f, double z0) const;
  Complex open_gamma(double f, double z0) const;
  Complex load_gamma(double f, double z0) const;
};

struct OslMeasurement {
  Complex short_m;
  Complex open_m;
  Complex load_m;
};

// Exact solution of the error model from the three standards at one
// frequency. Throws CalibrationError (carrying index) when the system is
// degenerate.
ErrorBox osl_solve(const OslMeasurement& measured, Complex short_actual, Complex open_actual,
                   Complex load_actual, std::size_t index = 0);

// Per-frequency solve for aligned short/open/load files.
std::vector<ErrorBox> osl_solve(const TouchstoneFile& short_file, const TouchstoneFile& open_file,
                                const TouchstoneFile& load_file, const CalKit& kit = {});

// G = (m - e00) / (e10e01 + e11 (m - e00)). Throws SingularityError when the
// denominator vanishes.
Complex apply_correction(const ErrorBox& box, Complex s_meas);

// Corrects every point; boxes must align with the file's frequencies.
TouchstoneFile apply_correction(std::span<const ErrorBox> boxes, const TouchstoneFile& file,
                                const std::vector<double>& box_frequencies);

}  // namespace lwr::rf
