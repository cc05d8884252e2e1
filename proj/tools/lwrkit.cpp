#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lwr/config.hpp"
#include "lwr/design.hpp"
#include "lwr/dispersion.hpp"
#include "lwr/error.hpp"
#include "lwr/gdsii.hpp"
#include "lwr/layout.hpp"
#include "lwr/mbvd_fit.hpp"
#include "lwr/process_flow.hpp"
#include "lwr/rf_measurement.hpp"
#include "lwr/wafer_statistics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit-code registry.
enum Exit : int {
  kOk = 0,
  kFlowErrors = 1,
  kUsage = 2,
  kSolver = 3,
  kPacking = 4,
  kAllFitsFailed = 5,
  kStatistics = 6,
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const lwr::StatisticsError*>(&e)) return kStatistics;
  if (dynamic_cast<const lwr::DesignError*>(&e) || dynamic_cast<const lwr::PackingError*>(&e) ||
      dynamic_cast<const lwr::CoordinateError*>(&e)) {
    return kPacking;
  }
  if (dynamic_cast<const lwr::ConfigError*>(&e) || dynamic_cast<const lwr::InputError*>(&e) ||
      dynamic_cast<const lwr::ParseError*>(&e) || dynamic_cast<const lwr::MissingRateError*>(&e)) {
    return kUsage;
  }
  return kSolver;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool quiet = false;
};

class Context {
 public:
  explicit Context(const Globals& g) : globals_(g) {
    config_ = g.config_path.empty() ? lwr::config::default_config() : lwr::config::load_config(g.config_path);
    if (g.seed) config_.variation.seed = *g.seed;
    fs::create_directories(g.out_dir);
  }

  const lwr::config::ToolkitConfig& config() const { return config_; }
  fs::path out(const std::string& name) const { return fs::path(globals_.out_dir) / name; }
  std::ostream& info() const {
    static std::ofstream null_stream;
    return globals_.quiet ? null_stream : std::cout;
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out(name));
    if (!f) throw lwr::ConfigError("cannot write '" + out(name).string() + "'");
    f.precision(12);
    return f;
  }

  void write_json(const std::string& name, const json& j) const { open(name) << j.dump(2) << '\n'; }

 private:
  Globals globals_;
  lwr::config::ToolkitConfig config_;
};

std::vector<double> catalog_pitches(const lwr::config::ToolkitConfig& c) {
  std::vector<double> p;
  for (const auto& e : c.catalog.entries) p.push_back(e.pitch);
  return p;
}

std::vector<lwr::design::ResonatorDesign> make_designs(const Context& ctx, const std::vector<double>& pitches) {
  const auto& c = ctx.config();
  std::vector<lwr::design::ResonatorDesign> designs;
  for (double p : pitches) {
    lwr::design::MatchOptions opts;
    designs.push_back(
        lwr::design::match_finger_count(p, c.plate, c.capacitance, c.catalog.mode, c.catalog.target_impedance, opts));
  }
  return designs;
}

json designs_document(const Context& ctx, const std::vector<lwr::design::ResonatorDesign>& designs) {
  json a = json::array();
  for (const auto& d : designs) a.push_back(lwr::config::to_json(d));
  return {{"designs", a}, {"catalog", lwr::config::to_json(ctx.config().catalog)}};
}

std::string pitch_tag(double pitch) { return std::to_string(std::llround(pitch * 1e9)) + "nm"; }

// disperse

struct DisperseArgs {
  double pitch_min = 0.5e-6;
  double pitch_max = 4.5e-6;
  std::size_t points = 200;
  std::vector<std::string> modes{"A0", "S0", "A1", "S1"};
};

int cmd_disperse(const Context& ctx, const DisperseArgs& a) {
  if (a.modes.empty()) throw lwr::InputError("disperse: empty mode list");
  if (!(a.pitch_min > 0.0) || !(a.pitch_max > a.pitch_min)) {
    throw lwr::InputError("disperse: need 0 < pitch-min < pitch-max");
  }
  if (a.points < 2) throw lwr::InputError("disperse: need at least 2 points");
  std::vector<lwr::LambMode> modes;
  for (const auto& m : a.modes) modes.push_back(lwr::parse_mode(m));

  const double k_lo = std::numbers::pi / a.pitch_max, k_hi = std::numbers::pi / a.pitch_min;
  std::vector<double> k(a.points);
  for (std::size_t i = 0; i < a.points; ++i) {
    k[i] = k_lo + (k_hi - k_lo) * static_cast<double>(i) / static_cast<double>(a.points - 1);
  }
  auto csv = ctx.open("dispersion.csv");
  csv << "mode,k_rad_per_m,f_Hz,v_phase_m_per_s\n";
  for (lwr::LambMode m : modes) {
    const auto curve = lwr::lamb::solve_mode(ctx.config().plate, m, k);
    if (curve.samples.empty()) throw lwr::RangeError("disperse: no " + std::string(to_string(m)) + " roots found");
    for (const auto& g : curve.gaps) {
      std::cerr << "warning: " << to_string(m) << " has no root for k in [" << g.k_lo << ", " << g.k_hi << "]\n";
    }
    for (const auto& s : curve.samples) {
      csv << to_string(m) << ',' << s.k << ',' << s.f << ',' << 2.0 * std::numbers::pi * s.f / s.k << '\n';
    }
    ctx.info() << to_string(m) << ": " << curve.samples.size() << " samples\n";
  }
  ctx.info() << "wrote " << ctx.out("dispersion.csv").string() << '\n';
  return kOk;
}

// design / layout

int cmd_design(const Context& ctx, std::vector<double> pitches) {
  if (pitches.empty()) pitches = catalog_pitches(ctx.config());
  const auto designs = make_designs(ctx, pitches);
  for (const auto& d : designs) {
    ctx.info() << d.id << ": " << d.idt.n_fingers << " fingers, f_mid " << d.f_mid / 1e9 << " GHz, |Z| "
               << d.achieved_impedance << " ohm, " << lwr::design::to_string(d.layer) << ", dose " << d.dose
               << " mJ/cm2\n";
  }
  ctx.write_json("designs.json", designs_document(ctx, designs));
  ctx.info() << "wrote " << ctx.out("designs.json").string() << '\n';
  return kOk;
}

int cmd_layout(const Context& ctx, std::vector<double> pitches, bool wafer_map) {
  const auto& c = ctx.config();
  if (pitches.empty()) pitches = catalog_pitches(c);
  const auto designs = make_designs(ctx, pitches);
  const auto spec = c.chip_spec(designs);
  auto lib = lwr::layout::gen_chip(spec, c.layers, c.idt_geometry);
  lwr::layout::gen_reticle(lib, lwr::layout::default_reticle(spec, c.layers), c.layers);
  lwr::gdsii::write_file(ctx.out("chip.gds"), lib);
  ctx.write_json("designs.json", designs_document(ctx, designs));
  {
    auto csv = ctx.open("polygons.csv");
    lwr::layout::write_polygon_csv(csv, lib);
  }
  ctx.info() << "chip: " << lib.at(lwr::layout::kChipCell).placements.size() << " cell placements\n";
  ctx.info() << "wrote " << ctx.out("chip.gds").string() << '\n';
  if (wafer_map) {
    const auto sites = lwr::layout::gen_wafer_map(c.chip.width * 1e3, c.chip.height * 1e3, c.wafer);
    auto csv = ctx.open("wafer_map.csv");
    csv << "index,row,col,x_mm,y_mm\n";
    for (const auto& s : sites) csv << s.index << ',' << s.row << ',' << s.col << ',' << s.x_mm << ',' << s.y_mm << '\n';
    // Printed regardless of --quiet: it is the command's result line.
    std::cout << sites.size() << " placements\n";
  }
  return kOk;
}

// fit

struct FitArgs {
  std::vector<std::string> files;
  std::size_t branches = 1;
  std::string cal_short, cal_open, cal_load;
};

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_fit(const Context& ctx, const FitArgs& a) {
  if (a.branches < 1) throw lwr::InputError("fit: need at least one branch");
  const int given = !a.cal_short.empty() + !a.cal_open.empty() + !a.cal_load.empty();
  if (given != 0 && given != 3) throw lwr::InputError("fit: --cal-short, --cal-open and --cal-load go together");

  std::vector<lwr::rf::ErrorBox> boxes;
  std::vector<double> box_f;
  if (given == 3) {
    const auto s = lwr::rf::read_touchstone(a.cal_short);
    const auto o = lwr::rf::read_touchstone(a.cal_open);
    const auto l = lwr::rf::read_touchstone(a.cal_load);
    boxes = lwr::rf::osl_solve(s, o, l);
    box_f = s.frequencies_hz();
  }

  json succeeded = json::array(), failed = json::array();
  for (const auto& path : a.files) {
    try {
      auto file = lwr::rf::read_touchstone(path);
      if (!boxes.empty()) file = lwr::rf::apply_correction(boxes, file, box_f);
      const auto trace = lwr::rf::to_admittance(file);
      const auto fit = lwr::mbvd::fit_mbvd(trace, a.branches);
      json metrics = json::array();
      for (std::size_t i = 0; i < fit.model.branches.size(); ++i) {
        metrics.push_back(lwr::config::to_json(lwr::mbvd::resonance_metrics(fit.model, i)));
      }
      const std::string stem = stem_of(path);
      ctx.write_json(stem + ".fit.json", {{"file", path},
                                          {"calibrated", !boxes.empty()},
                                          {"model", lwr::config::to_json(fit.model)},
                                          {"metrics", metrics},
                                          {"report", lwr::config::to_json(fit.report)}});
      auto csv = ctx.open(stem + ".overlay.csv");
      csv << "f_Hz,abs_Y_measured_S,abs_Y_model_S\n";
      const auto model = lwr::mbvd::mbvd_admittance(fit.model, trace.frequencies);
      for (std::size_t i = 0; i < trace.size(); ++i) {
        csv << trace.frequencies[i] << ',' << std::abs(trace.admittance[i]) << ',' << std::abs(model.admittance[i])
            << '\n';
      }
      succeeded.push_back(path);
      ctx.info() << path << ": ok, residual " << fit.report.residual_norm << '\n';
    } catch (const lwr::Error& e) {
      failed.push_back({{"file", path}, {"error", e.what()}});
      std::cerr << path << ": FAILED: " << e.what() << '\n';
    }
  }
  ctx.write_json("fit_summary.json", {{"succeeded", succeeded}, {"failed", failed}});
  ctx.info() << succeeded.size() << " fitted, " << failed.size() << " failed\n";
  return succeeded.empty() ? kAllFitsFailed : kOk;
}

// stats / simulate-wafer

struct HeatmapArgs {
  std::string mode = "S0";
  double pitch = 0.0;  // 0: largest pitch present
};

void write_statistics(const Context& ctx, const std::vector<lwr::stats::WaferSite>& sites, const HeatmapArgs& h,
                      const std::string& header) {
  const auto report = lwr::stats::per_mode_deviation(sites);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  {
    auto csv = ctx.open("deviation.csv");
    csv << header;
    lwr::stats::write_deviation_csv(csv, report);
  }
  {
    auto csv = ctx.open("metrics.csv");
    csv << header;
    lwr::stats::write_metrics_csv(csv, lwr::stats::metrics_vs_frequency(sites));
  }
  double pitch = h.pitch;
  if (pitch <= 0.0) {
    for (const auto& s : sites) pitch = std::max(pitch, s.pitch);
  }
  const auto mode = lwr::parse_mode(h.mode);
  const std::string name = "heatmap_" + std::string(to_string(mode)) + "_" + pitch_tag(pitch) + ".csv";
  {
    auto csv = ctx.open(name);
    csv << header;
    lwr::stats::write_heatmap_csv(csv, sites, mode, pitch);
  }
  for (const auto& e : report.entries) {
    ctx.info() << to_string(e.mode) << " pitch " << pitch_tag(e.pitch) << ": relstd " << e.relstd_pct << "% (n="
               << e.n << ")\n";
  }
  ctx.info() << "wrote deviation.csv, metrics.csv, " << name << '\n';
}

int cmd_stats(const Context& ctx, const std::string& sites_path, const HeatmapArgs& h) {
  std::ifstream in(sites_path);
  if (!in) throw lwr::ConfigError("cannot open sites file '" + sites_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw lwr::ConfigError("sites file '" + sites_path + "': " + e.what());
  }
  const auto sites = lwr::config::sites_from_json(j.is_object() && j.contains("sites") ? j.at("sites") : j);
  const auto& w = ctx.config().wafer;
  for (const auto& s : sites) s.validate(0.5 * w.diameter_mm);
  write_statistics(ctx, sites, h, "");
  return kOk;
}

int cmd_simulate_wafer(const Context& ctx, std::vector<double> pitches, bool full_resolve, const HeatmapArgs& h) {
  const auto& c = ctx.config();
  if (pitches.empty()) pitches = catalog_pitches(c);
  const auto placements = lwr::layout::gen_wafer_map(c.chip.width * 1e3, c.chip.height * 1e3, c.wafer);
  lwr::stats::SimulationOptions opts;
  opts.modes = c.simulate_modes;
  opts.full_resolve = full_resolve;
  const auto sites = lwr::stats::simulate_wafer(c.variation, pitches, c.plate, placements, opts);
  const std::uint64_t seed = c.variation.seed;
  std::cout << "seed: " << seed << '\n';
  ctx.write_json("sites.json", {{"seed", seed}, {"sites", lwr::config::to_json(sites)}});
  write_statistics(ctx, sites, h, "# seed=" + std::to_string(seed) + "\n");
  ctx.info() << placements.size() << " dies x " << pitches.size() << " pitches simulated\n";
  return kOk;
}

// flow-check

int cmd_flow_check(const Context& ctx, const std::string& flow_path, const std::string& rates_path) {
  const auto flow = lwr::process::load_flow(flow_path);
  lwr::process::RateTable rates = ctx.config().rates;
  if (!rates_path.empty()) {
    std::ifstream in(rates_path);
    if (!in) throw lwr::ConfigError("cannot open rate table '" + rates_path + "'");
    try {
      rates = lwr::process::rates_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw lwr::ConfigError("rate table '" + rates_path + "': " + e.what());
    }
  }
  const auto violations = lwr::process::check_compatibility(flow, rates);
  std::size_t errors = 0;
  for (const auto& v : violations) {
    if (v.severity == lwr::process::Severity::error) ++errors;
    ctx.info() << lwr::process::to_string(v.severity) << ' ' << v.code << ": " << v.message << '\n';
  }
  ctx.write_json("violations.json", {{"flow", flow.name}, {"violations", lwr::process::to_json(violations)}});
  ctx.info() << flow.name << ": " << errors << " error(s), " << violations.size() - errors << " warning(s)\n";
  return errors > 0 ? kFlowErrors : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lamb-wave resonator design, layout, measurement and process toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Toolkit config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the variation seed");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  DisperseArgs disperse;
  auto* sc_disperse = app.add_subcommand("disperse", "Dispersion curves f(k) as CSV");
  sc_disperse->add_option("--pitch-min", disperse.pitch_min, "Smallest pitch (m)")->capture_default_str();
  sc_disperse->add_option("--pitch-max", disperse.pitch_max, "Largest pitch (m)")->capture_default_str();
  sc_disperse->add_option("--points", disperse.points, "Samples per mode")->capture_default_str();
  sc_disperse->add_option("--modes", disperse.modes, "Modes (A0 S0 A1 S1)")->expected(1, -1)->capture_default_str();

  std::vector<double> pitches;
  auto* sc_design = app.add_subcommand("design", "Impedance-matched designs as JSON");
  sc_design->add_option("--pitches", pitches, "Pitches (m); default: design catalog");

  bool wafer_map = false;
  auto* sc_layout = app.add_subcommand("layout", "Chip and reticle GDSII");
  sc_layout->add_option("--pitches", pitches, "Pitches (m); default: design catalog");
  sc_layout->add_flag("--wafer-map", wafer_map, "Also write the wafer map");

  FitArgs fit;
  auto* sc_fit = app.add_subcommand("fit", "Fit mBVD models to one-port Touchstone files");
  sc_fit->add_option("files", fit.files, ".s1p files")->required();
  sc_fit->add_option("--branches", fit.branches, "Motional branches")->capture_default_str();
  sc_fit->add_option("--cal-short", fit.cal_short, "Short standard .s1p")->check(CLI::ExistingFile);
  sc_fit->add_option("--cal-open", fit.cal_open, "Open standard .s1p")->check(CLI::ExistingFile);
  sc_fit->add_option("--cal-load", fit.cal_load, "Load standard .s1p")->check(CLI::ExistingFile);

  HeatmapArgs heat;
  std::string sites_path;
  auto* sc_stats = app.add_subcommand("stats", "Per-mode deviation report from a sites JSON");
  sc_stats->add_option("sites", sites_path, "Sites JSON")->required()->check(CLI::ExistingFile);
  sc_stats->add_option("--heatmap-mode", heat.mode, "Heatmap mode")->capture_default_str();
  sc_stats->add_option("--heatmap-pitch", heat.pitch, "Heatmap pitch (m); default: largest");

  bool full_resolve = false;
  auto* sc_sim = app.add_subcommand("simulate-wafer", "Monte Carlo wafer simulation and statistics");
  sc_sim->add_option("--pitches", pitches, "Pitches (m); default: design catalog");
  sc_sim->add_flag("--full-resolve", full_resolve, "Re-solve dispersion per site");
  sc_sim->add_option("--heatmap-mode", heat.mode, "Heatmap mode")->capture_default_str();
  sc_sim->add_option("--heatmap-pitch", heat.pitch, "Heatmap pitch (m); default: largest");

  std::string flow_path, rates_path;
  auto* sc_flow = app.add_subcommand("flow-check", "Check a process flow for rule violations");
  sc_flow->add_option("flow", flow_path, "Flow JSON")->required();
  sc_flow->add_option("--rates", rates_path, "Rate table JSON; default: config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const Context ctx(g);
    if (*sc_disperse) return cmd_disperse(ctx, disperse);
    if (*sc_design) return cmd_design(ctx, pitches);
    if (*sc_layout) return cmd_layout(ctx, pitches, wafer_map);
    if (*sc_fit) return cmd_fit(ctx, fit);
    if (*sc_stats) return cmd_stats(ctx, sites_path, heat);
    if (*sc_sim) return cmd_simulate_wafer(ctx, pitches, full_resolve, heat);
    if (*sc_flow) return cmd_flow_check(ctx, flow_path, rates_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}
