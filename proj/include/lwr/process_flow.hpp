#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lwr::process {

enum class StepKind {
  deposit,
  spin_coat,
  expose,
  develop,
  etch_dry,
  etch_ibe,
  etch_vapor,
  etch_wet,
  strip_ash,
  strip_wet,
  release
};

std::string to_string(StepKind k);
StepKind parse_step_kind(const std::string& s);

enum class MaterialClass { substrate, metal, dielectric, resist, barc };

struct MaterialInfo {
  MaterialClass cls = MaterialClass::dielectric;
  bool developable = false;  // BARC opened by the developer
};

// What a chemistry does when it reaches a layer, beyond the explicit
// targets of an etch step.
enum class ChemistryClass {
  tmah_developer,
  resist_stripper,
  rinse,
  wet_hf,
  vapor_hf,
  o2_plasma,
  reducing_plasma,
  chlorine,
  fluorine,
  ion_beam,
  xef2
};

struct Catalog {
  std::map<std::string, MaterialInfo> materials;
  std::map<std::string, ChemistryClass> chemistries;

  const MaterialInfo& material(const std::string& name) const;
  ChemistryClass chemistry(const std::string& name) const;
};

Catalog default_catalog();

struct IbeSegment {
  double angle_deg = 0.0;
  double duration_s = 0.0;
};

struct IbeRecipe {
  std::vector<IbeSegment> segments;
  int repeats = 1;
  double total_time_s() const;
};

struct ProcessStep {
  std::string label;
  StepKind kind = StepKind::deposit;
  std::string material;              // deposit / spin_coat
  double thickness = 0.0;            // m, additive steps
  std::vector<std::string> targets;  // subtractive steps
  std::string chemistry;
  std::optional<double> temperature_c;
  std::optional<double> duration_s;  // absent: etch or strip to endpoint
  std::string tool;
  std::optional<IbeRecipe> recipe;
  std::vector<std::string> open;     // expose: columns cleared by the mask
  int pulses = 0;                    // release
  std::map<std::string, std::string> metadata;

  // Beam time for IBE with a recipe, else duration_s.
  std::optional<double> effective_duration() const;
};

// A fabrication flow on a one-dimensional cross-section: `columns` are
// lateral regions in left-to-right order; only neighbours share sidewalls.
struct Flow {
  std::string name;
  std::string substrate = "Si";
  double substrate_thickness = 525e-6;
  std::vector<std::string> columns{"blanket"};
  int release_pulses_required = 50;
  std::vector<ProcessStep> steps;

  void validate(const Catalog& catalog) const;
};

// Rates in nm/min. Etch entries are keyed by (material, chemistry); ashing
// of organic layers is keyed by plate temperature.
struct RateTable {
  std::map<std::pair<std::string, std::string>, double> etch;
  std::map<double, double> ash;

  std::optional<double> etch_rate(const std::string& material, const std::string& chemistry) const;
  double require_etch_rate(const std::string& material, const std::string& chemistry) const;
  void validate() const;
};

// Placeholder values in the qualitative order of the measured milling data
// (resists at or below SiO2; AlN close to AlScN) plus the two ashing rates.
RateTable default_rates();

struct LayerState {
  std::size_t id = 0;  // position in deposition order; the substrate is 0
  std::string material;
  double thickness = 0.0;  // m, largest over the columns
  bool patterned = false;  // absent from at least one column where the layer was deposited
  bool hardened = false;   // resist that has been through a plasma or ion-beam etch
};

struct StackState {
  std::vector<LayerState> layers;  // bottom to top, substrate first
  std::set<std::string> exposed_materials;
  std::map<std::string, std::vector<std::string>> column_stacks;  // materials bottom to top
  bool suspended = false;
};

enum class Severity { warning, error };

struct Violation {
  std::string code;
  std::size_t step = 0;
  std::string message;
  Severity severity = Severity::error;
};

// Contact rules: a chemistry class attacking an exposed material.
struct ContactRule {
  std::string code;
  ChemistryClass chemistry = ChemistryClass::wet_hf;
  std::string material;
  Severity severity = Severity::error;
  std::string message;
};

std::vector<ContactRule> default_rules();

struct SimulationResult {
  // states[0] is the bare substrate; states[i + 1] follows step i.
  std::vector<StackState> states;
  // Materials exposed at any point during step i.
  std::vector<std::set<std::string>> exposed_during;
  std::vector<Violation> warnings;
  // Steps whose O2 ash removed a hardened resist entirely in some column.
  std::set<std::size_t> full_o2_ash_steps;
};

// Throws MissingRateError for a timed etch reaching a target without a rate
// entry, InputError for structural flow errors.
SimulationResult simulate_stack(const Flow& flow, const RateTable& rates, const Catalog& catalog = default_catalog());

// Contact rules at every step, the chlorine rinse rule, the over-ash rule,
// and simulation warnings; sorted by (step, code).
std::vector<Violation> check_compatibility(const Flow& flow, const RateTable& rates,
                                           const Catalog& catalog = default_catalog(),
                                           const std::vector<ContactRule>& rules = default_rules());

struct EtchBudget {
  double etch_time_s = 0.0;
  double consumed = 0.0;   // m
  double remaining = 0.0;  // m, clamped at 0
  bool pass = false;
};

EtchBudget etch_budget(const std::string& mask_material, double mask_thickness, const std::string& target_material,
                       double target_depth, double overetch_fraction, const RateTable& rates,
                       const std::string& chemistry = "Ar_IBE");

// Seconds to ash `thickness` metres of resist at a tabulated temperature.
double ashing_time(double thickness, double temperature_c, const RateTable& rates);

std::string to_string(Severity s);

// JSON documents.
Flow flow_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Flow& flow);
RateTable rates_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RateTable& rates);
nlohmann::json to_json(const std::vector<Violation>& violations);

Flow load_flow(const std::string& path);

}  // namespace lwr::process
