#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "lwr/equivalent_circuit.hpp"

namespace lwr::test {

// Small seeded generator wrapper used by the property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Random resonator with well-separated modes: f_r in the GHz range, Q in
// [50, 150], k_eff^2 in [0.01, 0.08], C0 in [0.2, 2] pF, r_0 = 0.
inline mbvd::MbvdModel random_model(Rng& rng, std::size_t n_branches) {
  mbvd::MbvdModel m;
  m.static_net.c_0 = rng.log_uniform(0.2e-12, 2e-12);
  m.static_net.r_0 = 0.0;
  double f = rng.uniform(0.8e9, 1.2e9);
  double r_s = -1.0;
  for (std::size_t i = 0; i < n_branches; ++i) {
    if (i > 0) f *= rng.uniform(1.25, 1.6);
    const double w = 2.0 * std::numbers::pi * f;
    const double k2 = rng.uniform(0.01, 0.08);
    const double q = rng.uniform(50.0, 150.0);
    mbvd::MotionalBranch b;
    b.c_m = m.static_net.c_0 * k2 / (1.0 - k2);
    b.l_m = 1.0 / (w * w * b.c_m);
    const double r_total = 1.0 / (w * b.c_m * q);
    if (r_s < 0.0) r_s = rng.uniform(0.05, 0.3) * r_total;
    b.r_m = r_total - r_s;
    if (b.r_m <= 0.0) b.r_m = 0.5 * r_total;
    m.branches.push_back(b);
  }
  m.static_net.r_s = r_s < 0.0 ? rng.uniform(0.5, 3.0) : r_s;
  return m;
}

// n-point sweep: a uniform background plus a dense window around every
// resonance (about 11 samples per -3 dB width) and a lighter one around
// every antiresonance.
inline std::vector<double> segmented_grid(const mbvd::MbvdModel& m, std::size_t n_points) {
  constexpr std::size_t kResonance = 55;
  constexpr std::size_t kAnti = 20;
  std::vector<double> f;
  double f_lo = 0.5e9, f_hi = 2e9;
  if (!m.branches.empty()) {
    f_lo = 0.7 * m.branches.front().resonance_hz();
    f_hi = 1.3 * mbvd::resonance_metrics(m, m.branches.size() - 1).f_a;
  }
  auto linspace = [&](double a, double b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  };
  for (std::size_t i = 0; i < m.branches.size(); ++i) {
    const auto mm = mbvd::resonance_metrics(m, i);
    const double w = mm.f_r / mm.q_r;
    linspace(mm.f_r - 2.5 * w, mm.f_r + 2.5 * w, kResonance);
    linspace(mm.f_a - 2.5 * w, mm.f_a + 2.5 * w, kAnti);
  }
  const std::size_t used = f.size();
  linspace(f_lo, f_hi, n_points > used ? n_points - used : 2);
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

// Multiplicative circular complex Gaussian noise with the given total rms.
inline mbvd::AdmittanceTrace add_noise(mbvd::AdmittanceTrace t, double rms, Rng& rng) {
  const double sigma = rms / std::sqrt(2.0);
  for (auto& y : t.admittance) y *= mbvd::Complex(1.0 + sigma * rng.normal(), sigma * rng.normal());
  return t;
}

}  // namespace lwr::test
