#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lwr/design.hpp"
#include "lwr/dispersion.hpp"
#include "lwr/equivalent_circuit.hpp"
#include "lwr/layout.hpp"
#include "lwr/mbvd_fit.hpp"
#include "lwr/process_flow.hpp"
#include "lwr/wafer_statistics.hpp"

namespace lwr::config {

// Chip frame shared by every layout run; devices come from the design step.
struct ChipFrame {
  double width = 17e-3;
  double height = 3e-3;
  double margin = 100e-6;
  double spacing = 40e-6;
  bool deembed = true;
};

struct ToolkitConfig {
  lamb::PlateSpec plate = lamb::default_plate();
  design::CapacitanceModel capacitance;
  design::DesignCatalog catalog;
  layout::LayerMap layers;
  layout::IdtGeometry idt_geometry;
  ChipFrame chip;
  layout::WaferGeometry wafer;
  process::RateTable rates = process::default_rates();
  stats::VariationModel variation;
  std::vector<LambMode> simulate_modes{kAllModes.begin(), kAllModes.end()};

  void validate() const;
  layout::ChipSpec chip_spec(std::vector<design::ResonatorDesign> devices) const;
};

// Pitch sweep 500 nm to 4.5 um with reference finger counts from fabricated devices.
design::DesignCatalog default_catalog();
ToolkitConfig default_config();

// Unknown fields and missing referenced files raise ConfigError. `rates` and
// `design_catalog` may be inline objects or paths relative to `base_dir`.
ToolkitConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ToolkitConfig& c);
ToolkitConfig load_config(const std::filesystem::path& path);

design::DesignCatalog catalog_from_json(const nlohmann::json& j);
nlohmann::json to_json(const design::DesignCatalog& c);

nlohmann::json to_json(const design::ResonatorDesign& d);
nlohmann::json to_json(const mbvd::MbvdModel& m);
mbvd::MbvdModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const mbvd::ModeMetrics& m);
nlohmann::json to_json(const mbvd::FitReport& r);
nlohmann::json to_json(std::span<const layout::ChipPlacement> placements);

nlohmann::json to_json(std::span<const stats::WaferSite> sites);
std::vector<stats::WaferSite> sites_from_json(const nlohmann::json& j);

}  // namespace lwr::config
