#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lwr::mbvd {

using Complex = std::complex<double>;

// One R-L-C acoustic branch. label is a free-form mode tag (A0, S0, ...,
// "spurious"); empty means untagged.
struct MotionalBranch {
  double r_m = 0.0;  // ohm
  double l_m = 0.0;  // henry
  double c_m = 0.0;  // farad
  std::string label;

  double resonance_hz() const;
  void validate() const;
};

struct StaticNetwork {
  double c_0 = 0.0;  // farad
  double r_0 = 0.0;  // ohm, in series with c_0
  double r_s = 0.0;  // ohm, in series with the whole parallel set

  void validate() const;
};

// Multi-branch modified Butterworth-Van Dyke model:
//   Y = 1 / (r_s + 1 / (Y_static + sum_i Y_branch_i))
//   Y_static   = 1 / (r_0 + 1/(j w c_0))
//   Y_branch_i = 1 / (r_m + j w l_m + 1/(j w c_m))
struct MbvdModel {
  StaticNetwork static_net;
  std::vector<MotionalBranch> branches;

  void validate() const;
  // Orders branches by ascending resonance frequency. Throws InputError if
  // two branches share a resonance.
  void canonical_sort();
};

struct AdmittanceTrace {
  std::vector<double> frequencies;  // Hz, strictly increasing
  std::vector<Complex> admittance;  // S

  std::size_t size() const { return frequencies.size(); }
  void validate() const;
};

// q_r is +infinity when the branch and series resistances are both zero.
struct ModeMetrics {
  double f_r = 0.0;
  double f_a = 0.0;
  double q_r = 0.0;
  double k_eff_sq = 0.0;

  bool q_unbounded() const;
};

Complex admittance_at(const MbvdModel& model, double frequency_hz);

AdmittanceTrace mbvd_admittance(const MbvdModel& model, std::span<const double> frequencies);

ModeMetrics resonance_metrics(const MbvdModel& model, std::size_t branch_index);

// Open-short de-embedding: 1 / (1/(y_dut - y_open) - 1/(y_short - y_open)).
// A short whose magnitude exceeds kIdealShortMagnitude (or is not finite) is
// treated as an ideal short and contributes nothing.
inline constexpr double kIdealShortMagnitude = 1e12;
Complex de_embed_open_short(Complex y_dut, Complex y_open, Complex y_short);

}  // namespace lwr::mbvd
