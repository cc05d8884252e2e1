#include "lwr/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "json_util.hpp"
#include "lwr/error.hpp"

namespace lwr::config {

using detail::check_keys;
using detail::get;
using detail::get_optional;
using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(what + " '" + path.string() + "' does not exist or cannot be read");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " '" + path.string() + "': " + e.what());
  }
}

// Inline object, or a path relative to base_dir.
json inline_or_file(const json& j, const std::filesystem::path& base_dir, const std::string& what) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return read_json(p, what);
  }
  return j;
}

json modes_json(std::span<const LambMode> modes) {
  json a = json::array();
  for (LambMode m : modes) a.push_back(std::string(to_string(m)));
  return a;
}

std::vector<LambMode> modes_from_json(const json& j, const std::string& where) {
  std::vector<LambMode> out;
  for (const auto& s : j.get<std::vector<std::string>>()) {
    try {
      out.push_back(parse_mode(s));
    } catch (const InputError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return out;
}

double q_from_json(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json q_to_json(double q) { return std::isinf(q) ? json(nullptr) : json(q); }

}  // namespace

void ToolkitConfig::validate() const {
  try {
    plate.validate();
    capacitance.validate();
    layers.validate();
    wafer.validate();
    rates.validate();
    variation.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(chip.width > 0.0) || !(chip.height > 0.0) || !(chip.margin >= 0.0) || !(chip.spacing >= 0.0)) {
    throw ConfigError("config: chip dimensions must be positive");
  }
  if (!(catalog.target_impedance > 0.0)) throw ConfigError("config: target impedance must be > 0");
  if (catalog.entries.empty()) throw ConfigError("config: design catalog is empty");
  for (const auto& e : catalog.entries) {
    if (!(e.pitch > 0.0) || e.reference_fingers < 0) throw ConfigError("config: bad design catalog entry");
  }
  if (simulate_modes.empty()) throw ConfigError("config: simulate_modes is empty");
}

layout::ChipSpec ToolkitConfig::chip_spec(std::vector<design::ResonatorDesign> devices) const {
  layout::ChipSpec spec;
  spec.width = chip.width;
  spec.height = chip.height;
  spec.margin = chip.margin;
  spec.spacing = chip.spacing;
  spec.deembed = chip.deembed;
  spec.devices = std::move(devices);
  return spec;
}

design::DesignCatalog default_catalog() {
  design::DesignCatalog c;
  for (double p : {0.5e-6, 0.75e-6, 1e-6, 1.5e-6, 2e-6, 2.5e-6, 3e-6, 3.5e-6, 4e-6, 4.5e-6}) {
    c.entries.push_back({p, 0});
  }
  c.entries.front().reference_fingers = 192;
  c.entries[8].reference_fingers = 44;
  return c;
}

ToolkitConfig default_config() {
  ToolkitConfig c;
  c.catalog = default_catalog();
  return c;
}

design::DesignCatalog catalog_from_json(const json& j) {
  check_keys(j, {"target_impedance_ohm", "mode", "entries"}, "design_catalog");
  design::DesignCatalog c;
  get_optional(j, "target_impedance_ohm", "design_catalog", c.target_impedance);
  if (j.contains("mode")) c.mode = modes_from_json(json::array({j.at("mode")}), "design_catalog").front();
  if (!j.contains("entries") || !j.at("entries").is_array()) {
    throw ConfigError("design_catalog: 'entries' must be an array");
  }
  for (const auto& e : j.at("entries")) {
    check_keys(e, {"pitch_m", "reference_fingers"}, "design_catalog.entries");
    design::CatalogEntry entry;
    entry.pitch = get<double>(e, "pitch_m", "design_catalog.entries");
    get_optional(e, "reference_fingers", "design_catalog.entries", entry.reference_fingers);
    c.entries.push_back(entry);
  }
  return c;
}

json to_json(const design::DesignCatalog& c) {
  json entries = json::array();
  for (const auto& e : c.entries) {
    json je{{"pitch_m", e.pitch}};
    if (e.reference_fingers > 0) je["reference_fingers"] = e.reference_fingers;
    entries.push_back(je);
  }
  return {{"target_impedance_ohm", c.target_impedance}, {"mode", std::string(to_string(c.mode))}, {"entries", entries}};
}

ToolkitConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j,
             {"material", "plate_thickness_m", "capacitance", "design_catalog", "layers", "idt_geometry", "chip",
              "wafer", "rates", "variation", "simulate_modes"},
             "config");
  ToolkitConfig c = default_config();
  if (j.contains("material")) {
    const auto& m = j.at("material");
    check_keys(m, {"name", "rho_kg_m3", "v_l_m_s", "v_t_m_s"}, "config.material");
    get_optional(m, "name", "config.material", c.plate.material.name);
    c.plate.material.rho = get<double>(m, "rho_kg_m3", "config.material");
    c.plate.material.v_l = get<double>(m, "v_l_m_s", "config.material");
    c.plate.material.v_t = get<double>(m, "v_t_m_s", "config.material");
  }
  get_optional(j, "plate_thickness_m", "config", c.plate.h);
  if (j.contains("capacitance")) {
    const auto& m = j.at("capacitance");
    check_keys(m, {"eps_r", "h_piezo_m"}, "config.capacitance");
    get_optional(m, "eps_r", "config.capacitance", c.capacitance.eps_r);
    get_optional(m, "h_piezo_m", "config.capacitance", c.capacitance.h_piezo);
  }
  if (j.contains("design_catalog")) {
    c.catalog = catalog_from_json(inline_or_file(j.at("design_catalog"), base_dir, "design catalog"));
  }
  if (j.contains("layers")) {
    const auto& m = j.at("layers");
    const std::string w = "config.layers";
    check_keys(m, {"idt_small", "idt_large", "pads", "bottom", "outline", "chip_outline", "marks"}, w);
    get_optional(m, "idt_small", w, c.layers.idt_small);
    get_optional(m, "idt_large", w, c.layers.idt_large);
    get_optional(m, "pads", w, c.layers.pads);
    get_optional(m, "bottom", w, c.layers.bottom);
    get_optional(m, "outline", w, c.layers.outline);
    get_optional(m, "chip_outline", w, c.layers.chip_outline);
    get_optional(m, "marks", w, c.layers.marks);
  }
  if (j.contains("idt_geometry")) {
    const auto& m = j.at("idt_geometry");
    const std::string w = "config.idt_geometry";
    check_keys(m,
               {"busbar_width_m", "pad_size_m", "pad_spacing_m", "pad_clearance_m", "outline_margin_wl",
                "tether_width_wl", "tether_length_wl"},
               w);
    auto& g = c.idt_geometry;
    get_optional(m, "busbar_width_m", w, g.busbar_width);
    get_optional(m, "pad_size_m", w, g.pad_size);
    get_optional(m, "pad_spacing_m", w, g.pad_spacing);
    get_optional(m, "pad_clearance_m", w, g.pad_clearance);
    get_optional(m, "outline_margin_wl", w, g.outline_margin_wl);
    get_optional(m, "tether_width_wl", w, g.tether_width_wl);
    get_optional(m, "tether_length_wl", w, g.tether_length_wl);
  }
  if (j.contains("chip")) {
    const auto& m = j.at("chip");
    const std::string w = "config.chip";
    check_keys(m, {"width_m", "height_m", "margin_m", "spacing_m", "deembed"}, w);
    get_optional(m, "width_m", w, c.chip.width);
    get_optional(m, "height_m", w, c.chip.height);
    get_optional(m, "margin_m", w, c.chip.margin);
    get_optional(m, "spacing_m", w, c.chip.spacing);
    get_optional(m, "deembed", w, c.chip.deembed);
  }
  if (j.contains("wafer")) {
    const auto& m = j.at("wafer");
    const std::string w = "config.wafer";
    check_keys(m,
               {"diameter_mm", "edge_exclusion_mm", "flat_length_mm", "keepout_width_mm", "keepout_height_mm",
                "street_mm"},
               w);
    get_optional(m, "diameter_mm", w, c.wafer.diameter_mm);
    get_optional(m, "edge_exclusion_mm", w, c.wafer.edge_exclusion_mm);
    get_optional(m, "flat_length_mm", w, c.wafer.flat_length_mm);
    get_optional(m, "keepout_width_mm", w, c.wafer.keepout_width_mm);
    get_optional(m, "keepout_height_mm", w, c.wafer.keepout_height_mm);
    get_optional(m, "street_mm", w, c.wafer.street_mm);
  }
  if (j.contains("rates")) c.rates = process::rates_from_json(inline_or_file(j.at("rates"), base_dir, "rate table"));
  if (j.contains("variation")) {
    const auto& m = j.at("variation");
    const std::string w = "config.variation";
    check_keys(m,
               {"thickness_center_m", "thickness_edge_drop_m", "thickness_noise_sigma_m", "pitch_sigma_m",
                "radius_mm", "seed"},
               w);
    auto& v = c.variation;
    get_optional(m, "thickness_center_m", w, v.thickness_center);
    get_optional(m, "thickness_edge_drop_m", w, v.thickness_edge_drop);
    get_optional(m, "thickness_noise_sigma_m", w, v.thickness_noise_sigma);
    get_optional(m, "pitch_sigma_m", w, v.pitch_sigma);
    get_optional(m, "radius_mm", w, v.radius_mm);
    get_optional(m, "seed", w, v.seed);
  }
  if (j.contains("simulate_modes")) c.simulate_modes = modes_from_json(j.at("simulate_modes"), "config.simulate_modes");
  c.validate();
  return c;
}

json to_json(const ToolkitConfig& c) {
  const auto& g = c.idt_geometry;
  const auto& v = c.variation;
  return {
      {"material",
       {{"name", c.plate.material.name},
        {"rho_kg_m3", c.plate.material.rho},
        {"v_l_m_s", c.plate.material.v_l},
        {"v_t_m_s", c.plate.material.v_t}}},
      {"plate_thickness_m", c.plate.h},
      {"capacitance", {{"eps_r", c.capacitance.eps_r}, {"h_piezo_m", c.capacitance.h_piezo}}},
      {"design_catalog", to_json(c.catalog)},
      {"layers",
       {{"idt_small", c.layers.idt_small},
        {"idt_large", c.layers.idt_large},
        {"pads", c.layers.pads},
        {"bottom", c.layers.bottom},
        {"outline", c.layers.outline},
        {"chip_outline", c.layers.chip_outline},
        {"marks", c.layers.marks}}},
      {"idt_geometry",
       {{"busbar_width_m", g.busbar_width},
        {"pad_size_m", g.pad_size},
        {"pad_spacing_m", g.pad_spacing},
        {"pad_clearance_m", g.pad_clearance},
        {"outline_margin_wl", g.outline_margin_wl},
        {"tether_width_wl", g.tether_width_wl},
        {"tether_length_wl", g.tether_length_wl}}},
      {"chip",
       {{"width_m", c.chip.width},
        {"height_m", c.chip.height},
        {"margin_m", c.chip.margin},
        {"spacing_m", c.chip.spacing},
        {"deembed", c.chip.deembed}}},
      {"wafer",
       {{"diameter_mm", c.wafer.diameter_mm},
        {"edge_exclusion_mm", c.wafer.edge_exclusion_mm},
        {"flat_length_mm", c.wafer.flat_length_mm},
        {"keepout_width_mm", c.wafer.keepout_width_mm},
        {"keepout_height_mm", c.wafer.keepout_height_mm},
        {"street_mm", c.wafer.street_mm}}},
      {"rates", process::to_json(c.rates)},
      {"variation",
       {{"thickness_center_m", v.thickness_center},
        {"thickness_edge_drop_m", v.thickness_edge_drop},
        {"thickness_noise_sigma_m", v.thickness_noise_sigma},
        {"pitch_sigma_m", v.pitch_sigma},
        {"radius_mm", v.radius_mm},
        {"seed", v.seed}}},
      {"simulate_modes", modes_json(c.simulate_modes)},
  };
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json(path, "config"), path.parent_path());
}

json to_json(const design::ResonatorDesign& d) {
  return {{"id", d.id},
          {"mode", std::string(to_string(d.mode))},
          {"pitch_m", d.idt.pitch},
          {"wavelength_m", d.idt.wavelength},
          {"finger_width_m", d.idt.finger_width},
          {"aperture_m", d.idt.aperture},
          {"gap_m", d.idt.gap},
          {"n_fingers", d.idt.n_fingers},
          {"dummy_count_per_side", d.idt.dummy_count_per_side},
          {"plate_thickness_m", d.plate.h},
          {"target_impedance_ohm", d.target_impedance},
          {"f_mid_Hz", d.f_mid},
          {"layer", std::string(design::to_string(d.layer))},
          {"dose_mJ_cm2", d.dose},
          {"c0_F", d.c0_estimate},
          {"achieved_impedance_ohm", d.achieved_impedance}};
}

json to_json(const mbvd::MbvdModel& m) {
  json branches = json::array();
  for (const auto& b : m.branches) {
    json jb{{"r_m", b.r_m}, {"l_m", b.l_m}, {"c_m", b.c_m}};
    if (!b.label.empty()) jb["label"] = b.label;
    branches.push_back(jb);
  }
  return {{"c_0", m.static_net.c_0}, {"r_0", m.static_net.r_0}, {"r_s", m.static_net.r_s}, {"branches", branches}};
}

mbvd::MbvdModel model_from_json(const json& j) {
  check_keys(j, {"c_0", "r_0", "r_s", "branches"}, "mbvd model");
  mbvd::MbvdModel m;
  m.static_net.c_0 = get<double>(j, "c_0", "mbvd model");
  get_optional(j, "r_0", "mbvd model", m.static_net.r_0);
  get_optional(j, "r_s", "mbvd model", m.static_net.r_s);
  if (!j.contains("branches") || !j.at("branches").is_array()) {
    throw ConfigError("mbvd model: 'branches' must be an array");
  }
  for (const auto& b : j.at("branches")) {
    const std::string w = "mbvd model branch";
    check_keys(b, {"r_m", "l_m", "c_m", "label"}, w);
    mbvd::MotionalBranch br;
    br.r_m = get<double>(b, "r_m", w);
    br.l_m = get<double>(b, "l_m", w);
    br.c_m = get<double>(b, "c_m", w);
    get_optional(b, "label", w, br.label);
    m.branches.push_back(br);
  }
  try {
    m.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("mbvd model: ") + e.what());
  }
  return m;
}

json to_json(const mbvd::ModeMetrics& m) {
  return {{"f_r_Hz", m.f_r}, {"f_a_Hz", m.f_a}, {"q_r", q_to_json(m.q_r)}, {"k_eff_sq", m.k_eff_sq}};
}

json to_json(const mbvd::FitReport& r) {
  json params = json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name}, {"value", p.value}, {"relative_sigma", p.relative_sigma}});
  }
  return {{"residual_norm", r.residual_norm},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"parameters", params}};
}

json to_json(std::span<const layout::ChipPlacement> placements) {
  json a = json::array();
  for (const auto& p : placements) {
    a.push_back({{"index", p.index}, {"row", p.row}, {"col", p.col}, {"x_mm", p.x_mm}, {"y_mm", p.y_mm}});
  }
  return a;
}

json to_json(std::span<const stats::WaferSite> sites) {
  json a = json::array();
  for (const auto& s : sites) {
    json modes = json::object();
    for (const auto& [mode, m] : s.modes) modes[std::string(to_string(mode))] = m ? to_json(*m) : json(nullptr);
    json js{{"site_id", s.site_id}, {"x_mm", s.x_mm}, {"y_mm", s.y_mm}, {"pitch_m", s.pitch}, {"modes", modes}};
    if (s.thickness) js["thickness_m"] = *s.thickness;
    a.push_back(js);
  }
  return a;
}

std::vector<stats::WaferSite> sites_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("sites: expected an array");
  std::vector<stats::WaferSite> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& js = j[i];
    const std::string w = "sites[" + std::to_string(i) + "]";
    check_keys(js, {"site_id", "x_mm", "y_mm", "pitch_m", "thickness_m", "modes"}, w);
    stats::WaferSite s;
    s.site_id = get<std::string>(js, "site_id", w);
    s.x_mm = get<double>(js, "x_mm", w);
    s.y_mm = get<double>(js, "y_mm", w);
    s.pitch = get<double>(js, "pitch_m", w);
    if (js.contains("thickness_m")) s.thickness = get<double>(js, "thickness_m", w);
    if (!js.contains("modes") || !js.at("modes").is_object()) throw ConfigError(w + ": 'modes' must be an object");
    for (const auto& [name, jm] : js.at("modes").items()) {
      const LambMode mode = modes_from_json(json::array({name}), w).front();
      if (jm.is_null()) {
        s.modes[mode] = std::nullopt;
        continue;
      }
      check_keys(jm, {"f_r_Hz", "f_a_Hz", "q_r", "k_eff_sq"}, w + ".modes." + name);
      mbvd::ModeMetrics m;
      m.f_r = get<double>(jm, "f_r_Hz", w);
      m.f_a = get<double>(jm, "f_a_Hz", w);
      m.q_r = jm.contains("q_r") ? q_from_json(jm.at("q_r")) : 0.0;
      m.k_eff_sq = get<double>(jm, "k_eff_sq", w);
      s.modes[mode] = m;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lwr::config
