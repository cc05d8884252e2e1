#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lwr/dispersion.hpp"
#include "lwr/equivalent_circuit.hpp"
#include "lwr/layout.hpp"
#include "lwr/mode.hpp"

namespace lwr::stats {

// One resonator measured (or simulated) at one die. A missing entry in
// `modes` or an empty optional marks a fit failure for that mode.
struct WaferSite {
  std::string site_id;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double pitch = 0.0;  // m
  std::optional<double> thickness;  // m, known for simulated sites
  std::map<LambMode, std::optional<mbvd::ModeMetrics>> modes;

  void validate(double wafer_radius_mm) const;
};

// Radial thickness h(r) = center - edge_drop (r / radius)^2 plus Gaussian
// noise, and Gaussian pitch error, per site.
struct VariationModel {
  double thickness_center = 420e-9;   // m
  double thickness_edge_drop = 65e-9; // m
  double thickness_noise_sigma = 6e-9;
  double pitch_sigma = 5e-9;
  double radius_mm = 50.0;
  std::uint64_t seed = 1;

  void validate() const;
  double thickness_at(double r_mm) const;
};

// Population standard deviation over the mean, in percent.
double relstd(std::span<const double> values);

struct DeviationEntry {
  LambMode mode = LambMode::S0;
  double pitch = 0.0;
  double mean_f = 0.0;
  double relstd_pct = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;
};

struct DeviationReport {
  std::vector<DeviationEntry> entries;  // ordered by mode, then pitch
  std::vector<std::string> warnings;
};

// Groups by (mode, pitch), drops fit failures (counted), omits groups with
// fewer than two sites (with a warning). Throws StatisticsError on empty
// input.
DeviationReport per_mode_deviation(std::span<const WaferSite> sites);

// Nominal Q and coupling attached to simulated sites; the simulation only
// models frequency.
struct NominalMetrics {
  double q_r = 0.0;
  double k_eff_sq = 0.0;
};

std::map<LambMode, NominalMetrics> default_nominal_metrics();

struct SimulationOptions {
  std::vector<LambMode> modes{kAllModes.begin(), kAllModes.end()};
  std::map<LambMode, NominalMetrics> nominal = default_nominal_metrics();
  // Re-solve the dispersion relation per site instead of propagating
  // first-order sensitivities.
  bool full_resolve = false;
};

// One site per (placement, pitch). Each placement draws from its own
// stream seeded from (seed, placement index), so results do not depend on
// evaluation order. Perturbed solver failures flag the mode, not the run.
std::vector<WaferSite> simulate_wafer(const VariationModel& model, std::span<const double> pitches,
                                      const lamb::PlateSpec& plate,
                                      std::span<const layout::ChipPlacement> placements,
                                      const SimulationOptions& options = {});

// Deterministic 64-bit mixer for per-site seeds.
std::uint64_t splitmix64(std::uint64_t x);

struct MetricPoint {
  double pitch = 0.0;
  double mean_f = 0.0;
  double q_mean = 0.0;
  double q_std = 0.0;
  double k2_mean = 0.0;
  double k2_std = 0.0;
  std::size_t n = 0;
};

// Per mode, points sorted by mean resonance frequency.
std::map<LambMode, std::vector<MetricPoint>> metrics_vs_frequency(std::span<const WaferSite> sites);

enum class Trend { increasing, decreasing, none };

Trend k2_trend(std::span<const MetricPoint> series);

// Mean Q of the longest high-frequency tail whose points stay within
// rel_tol of the tail mean, if that tail has at least min_points.
std::optional<double> q_plateau(std::span<const MetricPoint> series, double rel_tol = 0.05,
                                std::size_t min_points = 3);

void write_deviation_csv(std::ostream& out, const DeviationReport& report);
void write_metrics_csv(std::ostream& out, const std::map<LambMode, std::vector<MetricPoint>>& series);
// x_mm,y_mm,f_Hz for one mode and pitch; failed sites are skipped.
void write_heatmap_csv(std::ostream& out, std::span<const WaferSite> sites, LambMode mode, double pitch);

}  // namespace lwr::stats
