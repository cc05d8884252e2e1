#include "lwr/wafer_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "lwr/error.hpp"

namespace lwr::stats {

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

// Accumulated relative to the first value, so identical inputs give an
// exactly zero deviation.
Moments moments(std::span<const double> v) {
  const double shift = v.front();
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x - shift;
  const double d_mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - shift - d_mean) * (x - shift - d_mean);
  return {shift + d_mean, std::sqrt(ss / n)};
}

// Grouping key with pitches compared at 1 pm resolution.
using Key = std::pair<LambMode, long long>;

long long pitch_key(double pitch) { return std::llround(pitch * 1e12); }

template <class Fn>
void for_each_group(std::span<const WaferSite> sites, Fn&& fn) {
  std::map<Key, std::vector<const WaferSite*>> groups;
  for (const auto& s : sites) {
    for (const auto& [mode, m] : s.modes) groups[{mode, pitch_key(s.pitch)}].push_back(&s);
  }
  for (const auto& [key, members] : groups) fn(key.first, members);
}

}  // namespace

void WaferSite::validate(double wafer_radius_mm) const {
  if (std::hypot(x_mm, y_mm) > wafer_radius_mm) {
    throw InputError("site '" + site_id + "' lies outside the wafer");
  }
  if (!(pitch > 0.0)) throw InputError("site '" + site_id + "': pitch must be > 0");
  for (const auto& [mode, m] : modes) {
    if (!m) continue;
    if (!(m->f_r > 0.0) || !(m->f_a >= m->f_r) || !(m->q_r > 0.0) || !(m->k_eff_sq >= 0.0 && m->k_eff_sq < 1.0)) {
      throw InputError("site '" + site_id + "': invalid " + std::string(to_string(mode)) + " metrics");
    }
  }
}

void VariationModel::validate() const {
  if (!(thickness_edge_drop >= 0.0) || !(thickness_noise_sigma >= 0.0) || !(pitch_sigma >= 0.0)) {
    throw ConfigError("variation model: sigmas and edge drop must be >= 0");
  }
  if (!(thickness_center - thickness_edge_drop > 0.0)) {
    throw ConfigError("variation model: thickness must stay positive out to the wafer edge");
  }
  if (!(radius_mm > 0.0)) throw ConfigError("variation model: radius must be > 0");
}

double VariationModel::thickness_at(double r_mm) const {
  const double u = r_mm / radius_mm;
  return thickness_center - thickness_edge_drop * u * u;
}

double relstd(std::span<const double> values) {
  if (values.size() < 2) throw StatisticsError("relstd needs at least 2 values");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw StatisticsError("relstd needs positive finite values");
  }
  const auto m = moments(values);
  return 100.0 * m.std / m.mean;
}

DeviationReport per_mode_deviation(std::span<const WaferSite> sites) {
  if (sites.empty()) throw StatisticsError("per_mode_deviation: no sites");
  DeviationReport report;
  for_each_group(sites, [&](LambMode mode, const std::vector<const WaferSite*>& members) {
    std::vector<double> f;
    std::size_t excluded = 0;
    for (const auto* s : members) {
      const auto& m = s->modes.at(mode);
      if (m) {
        f.push_back(m->f_r);
      } else {
        ++excluded;
      }
    }
    const double pitch = members.front()->pitch;
    if (f.size() < 2) {
      report.warnings.push_back(std::string(to_string(mode)) + " at pitch " + std::to_string(pitch * 1e9) +
                                " nm omitted: " + std::to_string(f.size()) + " usable site(s), " +
                                std::to_string(excluded) + " excluded");
      return;
    }
    report.entries.push_back({mode, pitch, moments(f).mean, relstd(f), f.size(), excluded});
  });
  return report;
}

std::map<LambMode, NominalMetrics> default_nominal_metrics() {
  return {{LambMode::A0, {700.0, 0.005}},
          {LambMode::S0, {600.0, 0.07}},
          {LambMode::A1, {300.0, 0.02}},
          {LambMode::S1, {300.0, 0.02}}};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<WaferSite> simulate_wafer(const VariationModel& model, std::span<const double> pitches,
                                      const lamb::PlateSpec& plate,
                                      std::span<const layout::ChipPlacement> placements,
                                      const SimulationOptions& options) {
  model.validate();
  plate.validate();
  for (double p : pitches) {
    if (!(p > 0.0)) throw InputError("simulate_wafer: pitches must be > 0");
  }
  for (LambMode mode : options.modes) {
    if (!options.nominal.contains(mode)) {
      throw ConfigError("simulate_wafer: no nominal metrics for " + std::string(to_string(mode)));
    }
  }

  // Nominal frequency and log-sensitivities per (pitch, mode).
  struct Linear {
    bool ok = false;
    double f = 0.0;
    lamb::Sensitivity s;
  };
  std::vector<std::map<LambMode, Linear>> lin(pitches.size());
  if (!options.full_resolve) {
    for (std::size_t i = 0; i < pitches.size(); ++i) {
      const double k = std::numbers::pi / pitches[i];
      for (LambMode mode : options.modes) {
        Linear l;
        try {
          l.f = lamb::mode_frequency(plate, mode, k);
          l.s = lamb::sensitivity(plate, mode, k);
          l.ok = true;
        } catch (const RangeError&) {
        }
        lin[i][mode] = l;
      }
    }
  }

  std::vector<WaferSite> sites;
  sites.reserve(placements.size() * pitches.size());
  for (const auto& pl : placements) {
    std::mt19937_64 rng(splitmix64(model.seed ^ splitmix64(static_cast<std::uint64_t>(pl.index))));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double r = std::hypot(pl.x_mm, pl.y_mm);
    const double h = model.thickness_at(r) + model.thickness_noise_sigma * gauss(rng);
    for (std::size_t i = 0; i < pitches.size(); ++i) {
      const double p = pitches[i] + model.pitch_sigma * gauss(rng);
      WaferSite site;
      site.site_id = "D" + std::to_string(pl.index) + "_p" + std::to_string(std::llround(pitches[i] * 1e9)) + "nm";
      site.x_mm = pl.x_mm;
      site.y_mm = pl.y_mm;
      site.pitch = pitches[i];
      site.thickness = h;
      for (LambMode mode : options.modes) {
        std::optional<mbvd::ModeMetrics> m;
        if (h > 0.0 && p > 0.0) {
          double f = 0.0;
          if (options.full_resolve) {
            lamb::PlateSpec local = plate;
            local.h = h;
            try {
              f = lamb::mode_frequency(local, mode, std::numbers::pi / p);
            } catch (const RangeError&) {
            }
          } else if (const auto& l = lin[i].at(mode); l.ok) {
            f = l.f * std::exp(l.s.dlnf_dlnh * std::log(h / plate.h) + l.s.dlnf_dlnp * std::log(p / pitches[i]));
          }
          if (f > 0.0) {
            const auto& nom = options.nominal.at(mode);
            m = mbvd::ModeMetrics{f, f / std::sqrt(1.0 - nom.k_eff_sq), nom.q_r, nom.k_eff_sq};
          }
        }
        site.modes[mode] = m;
      }
      sites.push_back(std::move(site));
    }
  }
  return sites;
}

std::map<LambMode, std::vector<MetricPoint>> metrics_vs_frequency(std::span<const WaferSite> sites) {
  if (sites.empty()) throw StatisticsError("metrics_vs_frequency: no sites");
  std::map<LambMode, std::vector<MetricPoint>> out;
  for_each_group(sites, [&](LambMode mode, const std::vector<const WaferSite*>& members) {
    std::vector<double> f, q, k2;
    for (const auto* s : members) {
      if (const auto& m = s->modes.at(mode)) {
        f.push_back(m->f_r);
        q.push_back(m->q_r);
        k2.push_back(m->k_eff_sq);
      }
    }
    if (f.size() < 2) return;
    const auto mq = moments(q), mk = moments(k2);
    out[mode].push_back({members.front()->pitch, moments(f).mean, mq.mean, mq.std, mk.mean, mk.std, f.size()});
  });
  for (auto& [mode, series] : out) {
    std::sort(series.begin(), series.end(), [](const MetricPoint& a, const MetricPoint& b) { return a.mean_f < b.mean_f; });
  }
  return out;
}

Trend k2_trend(std::span<const MetricPoint> series) {
  if (series.size() < 2) return Trend::none;
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (!(series[i].k2_mean > series[i - 1].k2_mean)) inc = false;
    if (!(series[i].k2_mean < series[i - 1].k2_mean)) dec = false;
  }
  return inc ? Trend::increasing : dec ? Trend::decreasing : Trend::none;
}

std::optional<double> q_plateau(std::span<const MetricPoint> series, double rel_tol, std::size_t min_points) {
  std::optional<double> best;
  for (std::size_t len = min_points; len <= series.size(); ++len) {
    const auto tail = series.subspan(series.size() - len);
    double mean = 0.0;
    for (const auto& p : tail) mean += p.q_mean;
    mean /= static_cast<double>(len);
    const bool flat = std::all_of(tail.begin(), tail.end(),
                                  [&](const MetricPoint& p) { return std::abs(p.q_mean - mean) <= rel_tol * mean; });
    if (!flat) break;
    best = mean;
  }
  return best;
}

void write_deviation_csv(std::ostream& out, const DeviationReport& report) {
  out << "mode,pitch,mean_f_Hz,relstd_pct,n\n";
  const auto prec = out.precision(12);
  for (const auto& e : report.entries) {
    out << to_string(e.mode) << ',' << e.pitch << ',' << e.mean_f << ',' << e.relstd_pct << ',' << e.n << '\n';
  }
  out.precision(prec);
}

void write_metrics_csv(std::ostream& out, const std::map<LambMode, std::vector<MetricPoint>>& series) {
  out << "mode,pitch,mean_f_Hz,q_mean,q_std,k2_mean,k2_std,n\n";
  const auto prec = out.precision(12);
  for (const auto& [mode, points] : series) {
    for (const auto& p : points) {
      out << to_string(mode) << ',' << p.pitch << ',' << p.mean_f << ',' << p.q_mean << ',' << p.q_std << ','
          << p.k2_mean << ',' << p.k2_std << ',' << p.n << '\n';
    }
  }
  out.precision(prec);
}

void write_heatmap_csv(std::ostream& out, std::span<const WaferSite> sites, LambMode mode, double pitch) {
  out << "x_mm,y_mm,f_Hz\n";
  const auto prec = out.precision(12);
  for (const auto& s : sites) {
    if (pitch_key(s.pitch) != pitch_key(pitch)) continue;
    const auto it = s.modes.find(mode);
    if (it == s.modes.end() || !it->second) continue;
    out << s.x_mm << ',' << s.y_mm << ',' << it->second->f_r << '\n';
  }
  out.precision(prec);
}

}  // namespace lwr::stats
