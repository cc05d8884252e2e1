#include "lwr/equivalent_circuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lwr/error.hpp"

namespace lwr::mbvd {

namespace {

constexpr Complex kJ{0.0, 1.0};

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

double MotionalBranch::resonance_hz() const {
  return 1.0 / (2.0 * std::numbers::pi * std::sqrt(l_m * c_m));
}

void MotionalBranch::validate() const {
  if (!finite_nonnegative(r_m)) throw InputError("motional branch: r_m must be >= 0");
  if (!finite_positive(l_m)) throw InputError("motional branch: l_m must be > 0");
  if (!finite_positive(c_m)) throw InputError("motional branch: c_m must be > 0");
}

void StaticNetwork::validate() const {
  if (!finite_positive(c_0)) throw InputError("static network: c_0 must be > 0");
  if (!finite_nonnegative(r_0)) throw InputError("static network: r_0 must be >= 0");
  if (!finite_nonnegative(r_s)) throw InputError("static network: r_s must be >= 0");
}

void MbvdModel::validate() const {
  static_net.validate();
  for (const auto& b : branches) b.validate();
}

void MbvdModel::canonical_sort() {
  std::stable_sort(branches.begin(), branches.end(),
                   [](const MotionalBranch& a, const MotionalBranch& b) {
                     return a.resonance_hz() < b.resonance_hz();
                   });
  for (std::size_t i = 1; i < branches.size(); ++i) {
    if (!(branches[i - 1].resonance_hz() < branches[i].resonance_hz())) {
      throw InputError("mBVD model has two branches with the same resonance frequency");
    }
  }
}

void AdmittanceTrace::validate() const {
  if (frequencies.size() != admittance.size()) {
    throw InputError("admittance trace: frequency and admittance lengths differ");
  }
  if (frequencies.size() < 2) throw InputError("admittance trace needs at least 2 points");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0) || !std::isfinite(frequencies[i])) {
      throw InputError("admittance trace: frequencies must be positive");
    }
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
      throw InputError("admittance trace: frequencies must be strictly increasing");
    }
  }
}

bool ModeMetrics::q_unbounded() const { return std::isinf(q_r); }

Complex admittance_at(const MbvdModel& model, double frequency_hz) {
  const double w = 2.0 * std::numbers::pi * frequency_hz;
  const auto& s = model.static_net;
  Complex y_parallel = 1.0 / (s.r_0 + 1.0 / (kJ * w * s.c_0));
  for (const auto& b : model.branches) {
    y_parallel += 1.0 / (b.r_m + kJ * w * b.l_m + 1.0 / (kJ * w * b.c_m));
  }
  return 1.0 / (s.r_s + 1.0 / y_parallel);
}

AdmittanceTrace mbvd_admittance(const MbvdModel& model, std::span<const double> frequencies) {
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0)) throw InputError("mbvd_admittance: frequencies must be positive");
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
      throw InputError("mbvd_admittance: frequencies must be strictly increasing");
    }
  }
  AdmittanceTrace trace;
  trace.frequencies.assign(frequencies.begin(), frequencies.end());
  trace.admittance.reserve(frequencies.size());
  for (double f : frequencies) trace.admittance.push_back(admittance_at(model, f));
  return trace;
}

ModeMetrics resonance_metrics(const MbvdModel& model, std::size_t branch_index) {
  if (branch_index >= model.branches.size()) {
    throw InputError("resonance_metrics: branch index " + std::to_string(branch_index) +
                     " out of range");
  }
  const auto& b = model.branches[branch_index];
  const double c0 = model.static_net.c_0;
  ModeMetrics m;
  m.f_r = b.resonance_hz();
  m.f_a = m.f_r * std::sqrt(1.0 + b.c_m / c0);
  const double r_total = b.r_m + model.static_net.r_s;
  m.q_r = r_total > 0.0 ? 1.0 / (2.0 * std::numbers::pi * m.f_r * b.c_m * r_total)
                        : std::numeric_limits<double>::infinity();
  m.k_eff_sq = b.c_m / (b.c_m + c0);
  return m;
}

Complex de_embed_open_short(Complex y_dut, Complex y_open, Complex y_short) {
  const Complex intrinsic = y_dut - y_open;
  if (std::abs(intrinsic) == 0.0) {
    throw DegenerateFixtureError("de-embedding: DUT admittance equals the open fixture");
  }
  const bool ideal_short = !std::isfinite(std::abs(y_short)) ||
                           std::abs(y_short) > kIdealShortMagnitude;
  Complex z_series{0.0, 0.0};
  if (!ideal_short) {
    const Complex short_part = y_short - y_open;
    if (std::abs(short_part) == 0.0) {
      throw DegenerateFixtureError("de-embedding: short fixture equals the open fixture");
    }
    z_series = 1.0 / short_part;
  }
  const Complex z_dut = 1.0 / intrinsic - z_series;
  if (std::abs(z_dut) == 0.0) {
    throw DegenerateFixtureError("de-embedding: intrinsic impedance vanishes");
  }
  return 1.0 / z_dut;
}

}  // namespace lwr::mbvd
