#include "lwr/process_flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "lwr/error.hpp"

namespace lwr::process {

using nlohmann::json;

namespace {

constexpr double kNm = 1e-9;

std::string step_ref(std::size_t i, const ProcessStep& s) {
  return "step " + std::to_string(i) + (s.label.empty() ? "" : " (" + s.label + ")");
}

bool is_subtractive(StepKind k) {
  return k == StepKind::etch_dry || k == StepKind::etch_ibe || k == StepKind::etch_vapor || k == StepKind::etch_wet;
}

bool is_organic(MaterialClass c) { return c == MaterialClass::resist || c == MaterialClass::barc; }

// Per-column thickness bookkeeping on a shared deposition-ordered layer list.
class Stack {
 public:
  Stack(const Flow& flow, const Catalog& catalog) : catalog_(catalog), columns_(flow.columns) {
    layers_.push_back({flow.substrate, false});
    thick_.assign(columns_.size(), {flow.substrate_thickness});
  }

  std::size_t column_count() const { return columns_.size(); }
  std::size_t layer_count() const { return layers_.size(); }
  const std::string& material(std::size_t layer) const { return layers_[layer].material; }
  const MaterialInfo& info(std::size_t layer) const { return catalog_.material(material(layer)); }
  double& thickness(std::size_t col, std::size_t layer) { return thick_[col][layer]; }
  bool hardened(std::size_t layer) const { return layers_[layer].hardened; }
  void harden(std::size_t layer) { layers_[layer].hardened = true; }

  void deposit(const std::string& material, double t) {
    layers_.push_back({material, false});
    for (auto& col : thick_) col.push_back(t);
  }

  // Highest present layer; the substrate is never removed.
  std::size_t top(std::size_t col) const {
    for (std::size_t i = thick_[col].size(); i-- > 1;) {
      if (thick_[col][i] > 0.0) return i;
    }
    return 0;
  }

  std::size_t column_index(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    return static_cast<std::size_t>(it - columns_.begin());
  }

  // A layer is reachable from the top of its own column or, through a
  // sidewall, from a neighbouring column whose surface lies below it.
  std::set<std::string> exposed() const {
    std::set<std::string> out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      out.insert(material(top(c)));
      for (std::size_t n : {c - 1, c + 1}) {
        if (n >= columns_.size()) continue;
        const std::size_t floor = top(n);
        for (std::size_t i = floor + 1; i < thick_[c].size(); ++i) {
          if (thick_[c][i] > 0.0) out.insert(material(i));
        }
      }
    }
    return out;
  }

  StackState snapshot(bool suspended) const {
    StackState s;
    s.suspended = suspended;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      double t = 0.0;
      std::size_t present = 0;
      for (const auto& col : thick_) {
        t = std::max(t, col[i]);
        if (col[i] > 0.0) ++present;
      }
      if (present == 0) continue;
      s.layers.push_back({i, material(i), t, present < columns_.size(), layers_[i].hardened});
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      auto& v = s.column_stacks[columns_[c]];
      for (std::size_t i = 0; i < thick_[c].size(); ++i) {
        if (thick_[c][i] > 0.0) v.push_back(material(i));
      }
    }
    s.exposed_materials = exposed();
    return s;
  }

 private:
  struct Layer {
    std::string material;
    bool hardened = false;
  };
  const Catalog& catalog_;
  std::vector<std::string> columns_;
  std::vector<Layer> layers_;
  std::vector<std::vector<double>> thick_;
};

struct Simulator {
  const Flow& flow;
  const RateTable& rates;
  const Catalog& catalog;
  Stack stack;
  bool suspended = false;
  std::optional<std::pair<std::size_t, std::vector<std::size_t>>> latent;  // resist layer, open columns
  std::vector<Violation> warnings;
  // Steps whose O2 ash fully removed a hardened resist somewhere.
  std::set<std::size_t> overashed;

  Simulator(const Flow& f, const RateTable& r, const Catalog& c) : flow(f), rates(r), catalog(c), stack(f, c) {}

  void warn(std::size_t i, const std::string& code, const std::string& msg) {
    warnings.push_back({code, i, msg, Severity::warning});
  }

  void etch(std::size_t i, const ProcessStep& s) {
    const std::set<std::string> targets(s.targets.begin(), s.targets.end());
    const auto duration = s.effective_duration();
    const bool hardens = s.kind == StepKind::etch_dry || s.kind == StepKind::etch_ibe;
    const std::size_t ncol = stack.column_count();

    if (hardens) {
      for (std::size_t c = 0; c < ncol; ++c) {
        const std::size_t t = stack.top(c);
        if (stack.info(t).cls == MaterialClass::resist) stack.harden(t);
      }
    }

    if (!duration) {
      // Endpoint: clear targets from the surface down in every column; the
      // endpoint time, when all rates are known, erodes the masking tops.
      std::optional<double> t_end = 0.0;
      std::vector<char> cleared(ncol, 0);
      for (std::size_t c = 0; c < ncol; ++c) {
        double t_col = 0.0;
        for (std::size_t top = stack.top(c); top > 0 && targets.contains(stack.material(top)); top = stack.top(c)) {
          const auto r = rates.etch_rate(stack.material(top), s.chemistry);
          if (r) {
            t_col += stack.thickness(c, top) / (*r * kNm / 60.0);
          } else {
            t_end.reset();
          }
          stack.thickness(c, top) = 0.0;
          cleared[c] = 1;
        }
        if (t_end) t_end = std::max(*t_end, t_col);
      }
      if (t_end && *t_end > 0.0) {
        for (std::size_t c = 0; c < ncol; ++c) {
          if (!cleared[c]) erode_masks(i, s, c, *t_end);
        }
      }
      return;
    }

    for (std::size_t c = 0; c < ncol; ++c) {
      double remaining = *duration;
      while (remaining > 0.0) {
        const std::size_t top = stack.top(c);
        const std::string& mat = stack.material(top);
        const bool is_target = targets.contains(mat);
        const auto r = rates.etch_rate(mat, s.chemistry);
        if (is_target && !r) {
          throw MissingRateError(step_ref(i, s) + ": no " + s.chemistry + " rate for " + mat);
        }
        if (!r) break;
        const double speed = *r * kNm / 60.0;
        double& t = stack.thickness(c, top);
        if (top == 0 || t > speed * remaining) {
          t = std::max(t - speed * remaining, 0.0);
          if (top == 0 && t <= 0.0) warn(i, "THICKNESS_CLAMPED", step_ref(i, s) + ": substrate consumed");
          remaining = 0.0;
        } else {
          remaining -= t / speed;
          t = 0.0;
          if (!is_target) {
            warn(i, "THICKNESS_CLAMPED", step_ref(i, s) + ": " + mat + " mask consumed in column " + flow.columns[c]);
          }
        }
      }
    }
  }

  // Erodes non-target surface layers that have a rate for the chemistry.
  void erode_masks(std::size_t i, const ProcessStep& s, std::size_t c, double time_s) {
    double remaining = time_s;
    while (remaining > 0.0) {
      const std::size_t top = stack.top(c);
      if (top == 0) return;
      const auto r = rates.etch_rate(stack.material(top), s.chemistry);
      if (!r) return;
      const double speed = *r * kNm / 60.0;
      double& t = stack.thickness(c, top);
      if (t > speed * remaining) {
        t -= speed * remaining;
        return;
      }
      remaining -= t / speed;
      t = 0.0;
      warn(i, "THICKNESS_CLAMPED",
           step_ref(i, s) + ": " + stack.material(top) + " mask consumed in column " + flow.columns[c]);
    }
  }

  void ash(std::size_t i, const ProcessStep& s) {
    std::optional<double> capacity;
    if (s.duration_s) {
      if (!s.temperature_c) throw InputError(step_ref(i, s) + ": timed ash needs a temperature");
      const auto it = rates.ash.find(*s.temperature_c);
      if (it == rates.ash.end()) {
        throw MissingRateError(step_ref(i, s) + ": no ashing rate at " + std::to_string(*s.temperature_c) + " C");
      }
      capacity = it->second * kNm / 60.0 * *s.duration_s;
    }
    const bool o2 = catalog.chemistry(s.chemistry) == ChemistryClass::o2_plasma;
    for (std::size_t c = 0; c < stack.column_count(); ++c) {
      double left = capacity.value_or(INFINITY);
      while (left > 0.0) {
        const std::size_t top = stack.top(c);
        if (top == 0 || !is_organic(stack.info(top).cls)) break;
        double& t = stack.thickness(c, top);
        if (t > left) {
          t -= left;
          break;
        }
        left -= t;
        t = 0.0;
        if (o2 && stack.hardened(top) && stack.info(top).cls == MaterialClass::resist) overashed.insert(i);
      }
    }
  }

  void wet_strip(std::size_t i, const ProcessStep& s) {
    const auto cls = catalog.chemistry(s.chemistry);
    if (cls == ChemistryClass::resist_stripper) {
      for (std::size_t c = 0; c < stack.column_count(); ++c) {
        for (std::size_t top = stack.top(c); top > 0 && stack.info(top).cls == MaterialClass::resist; top = stack.top(c)) {
          stack.thickness(c, top) = 0.0;
        }
      }
    } else if (!s.targets.empty()) {
      etch(i, s);
    }
  }

  void expose(std::size_t i, const ProcessStep& s) {
    std::optional<std::size_t> resist;
    for (std::size_t c = 0; c < stack.column_count(); ++c) {
      const std::size_t t = stack.top(c);
      if (stack.info(t).cls == MaterialClass::resist) resist = std::max(resist.value_or(0), t);
    }
    if (!resist) throw InputError(step_ref(i, s) + ": nothing to expose, no resist on top");
    std::vector<std::size_t> cols;
    for (const auto& name : s.open) cols.push_back(stack.column_index(name));
    latent = {{*resist, cols}};
  }

  void develop(std::size_t i, const ProcessStep& s) {
    if (!latent) throw InputError(step_ref(i, s) + ": develop without a preceding exposure");
    const auto [resist, cols] = *latent;
    latent.reset();
    for (std::size_t c : cols) {
      if (stack.top(c) != resist) continue;
      stack.thickness(c, resist) = 0.0;
      const std::size_t under = stack.top(c);
      if (under > 0 && stack.info(under).cls == MaterialClass::barc && stack.info(under).developable) {
        stack.thickness(c, under) = 0.0;
      }
    }
  }

  void release(const ProcessStep& s) {
    bool si_open = false;
    for (std::size_t c = 0; c < stack.column_count(); ++c) si_open |= stack.top(c) == 0;
    if (si_open && s.pulses >= flow.release_pulses_required) suspended = true;
  }

  void run(std::size_t i, const ProcessStep& s) {
    switch (s.kind) {
      case StepKind::deposit:
      case StepKind::spin_coat:
        stack.deposit(s.material, s.thickness);
        break;
      case StepKind::expose:
        expose(i, s);
        break;
      case StepKind::develop:
        develop(i, s);
        break;
      case StepKind::etch_dry:
      case StepKind::etch_ibe:
      case StepKind::etch_vapor:
      case StepKind::etch_wet:
        etch(i, s);
        break;
      case StepKind::strip_ash:
        ash(i, s);
        break;
      case StepKind::strip_wet:
        wet_strip(i, s);
        break;
      case StepKind::release:
        release(s);
        break;
    }
  }
};

const std::map<std::string, StepKind>& step_kinds() {
  static const std::map<std::string, StepKind> m{
      {"deposit", StepKind::deposit},       {"spin_coat", StepKind::spin_coat},   {"expose", StepKind::expose},
      {"develop", StepKind::develop},       {"etch_dry", StepKind::etch_dry},     {"etch_ibe", StepKind::etch_ibe},
      {"etch_vapor", StepKind::etch_vapor}, {"etch_wet", StepKind::etch_wet},     {"strip_ash", StepKind::strip_ash},
      {"strip_wet", StepKind::strip_wet},   {"release", StepKind::release}};
  return m;
}

}  // namespace

std::string to_string(StepKind k) {
  for (const auto& [name, kind] : step_kinds()) {
    if (kind == k) return name;
  }
  return "?";
}

StepKind parse_step_kind(const std::string& s) {
  const auto it = step_kinds().find(s);
  if (it == step_kinds().end()) throw ConfigError("unknown step kind '" + s + "'");
  return it->second;
}

std::string to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

const MaterialInfo& Catalog::material(const std::string& name) const {
  const auto it = materials.find(name);
  if (it == materials.end()) throw InputError("unknown material '" + name + "'");
  return it->second;
}

ChemistryClass Catalog::chemistry(const std::string& name) const {
  const auto it = chemistries.find(name);
  if (it == chemistries.end()) throw InputError("unknown chemistry '" + name + "'");
  return it->second;
}

Catalog default_catalog() {
  Catalog c;
  c.materials = {{"Si", {MaterialClass::substrate, false}},   {"Ti", {MaterialClass::metal, false}},
                 {"Pt", {MaterialClass::metal, false}},       {"Al", {MaterialClass::metal, false}},
                 {"AlN", {MaterialClass::dielectric, false}}, {"AlScN", {MaterialClass::dielectric, false}},
                 {"SiO2", {MaterialClass::dielectric, false}}, {"M108Y", {MaterialClass::resist, false}},
                 {"M35G", {MaterialClass::resist, false}},    {"DS-K101", {MaterialClass::barc, true}},
                 {"DUV42-P", {MaterialClass::barc, false}}};
  c.chemistries = {{"TMA238WA", ChemistryClass::tmah_developer}, {"Remover1165", ChemistryClass::resist_stripper},
                   {"DI_water", ChemistryClass::rinse},          {"dilute_HF", ChemistryClass::wet_hf},
                   {"BHF", ChemistryClass::wet_hf},              {"vapor_HF", ChemistryClass::vapor_hf},
                   {"O2", ChemistryClass::o2_plasma},            {"forming_gas", ChemistryClass::reducing_plasma},
                   {"Cl2/BCl3", ChemistryClass::chlorine},       {"C4F8/O2", ChemistryClass::fluorine},
                   {"C4F8/H2/He", ChemistryClass::fluorine},     {"Ar_IBE", ChemistryClass::ion_beam},
                   {"XeF2", ChemistryClass::xef2}};
  return c;
}

double IbeRecipe::total_time_s() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration_s;
  return t * repeats;
}

std::optional<double> ProcessStep::effective_duration() const {
  if (recipe) return recipe->total_time_s();
  return duration_s;
}

void Flow::validate(const Catalog& catalog) const {
  if (columns.empty()) throw ConfigError("flow '" + name + "': no columns");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (columns[i] == columns[j]) throw ConfigError("flow '" + name + "': duplicate column " + columns[i]);
    }
  }
  if (catalog.material(substrate).cls != MaterialClass::substrate) {
    throw ConfigError("flow '" + name + "': '" + substrate + "' is not a substrate");
  }
  if (!(substrate_thickness > 0.0)) throw ConfigError("flow '" + name + "': substrate thickness must be > 0");
  if (steps.empty()) throw ConfigError("flow '" + name + "': no steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    auto fail = [&](const std::string& what) { throw ConfigError("flow '" + name + "' " + step_ref(i, s) + ": " + what); };
    try {
      if (!s.chemistry.empty()) (void)catalog.chemistry(s.chemistry);
      if (!s.material.empty()) (void)catalog.material(s.material);
      for (const auto& t : s.targets) (void)catalog.material(t);
    } catch (const InputError& e) {
      fail(e.what());
    }
    switch (s.kind) {
      case StepKind::deposit:
      case StepKind::spin_coat:
        if (s.material.empty()) fail("additive step needs a material");
        if (!(s.thickness > 0.0)) fail("additive step needs thickness > 0");
        if (s.kind == StepKind::spin_coat && !is_organic(catalog.material(s.material).cls)) {
          fail("spin_coat material must be a resist or BARC");
        }
        break;
      case StepKind::expose:
        for (const auto& c : s.open) {
          if (std::find(columns.begin(), columns.end(), c) == columns.end()) fail("unknown column '" + c + "'");
        }
        break;
      case StepKind::develop:
        if (s.chemistry.empty()) fail("develop needs a chemistry");
        break;
      case StepKind::etch_dry:
      case StepKind::etch_ibe:
      case StepKind::etch_vapor:
      case StepKind::etch_wet:
        if (s.targets.empty()) fail("subtractive step needs targets");
        if (s.chemistry.empty()) fail("subtractive step needs a chemistry");
        if (s.recipe && s.duration_s) fail("give either a recipe or a duration");
        break;
      case StepKind::strip_ash:
      case StepKind::strip_wet:
        if (s.chemistry.empty()) fail("strip needs a chemistry");
        break;
      case StepKind::release:
        if (s.chemistry.empty()) fail("release needs a chemistry");
        break;
    }
    if (s.duration_s && !(*s.duration_s >= 0.0)) fail("duration must be >= 0");
    if (s.recipe) {
      if (s.kind != StepKind::etch_ibe) fail("only IBE steps take a recipe");
      if (s.recipe->repeats < 1 || s.recipe->segments.empty()) fail("recipe needs segments and repeats >= 1");
      for (const auto& seg : s.recipe->segments) {
        if (!(seg.duration_s > 0.0)) fail("recipe segment durations must be > 0");
      }
    }
  }
}

std::optional<double> RateTable::etch_rate(const std::string& material, const std::string& chemistry) const {
  const auto it = etch.find({material, chemistry});
  if (it == etch.end()) return std::nullopt;
  return it->second;
}

double RateTable::require_etch_rate(const std::string& material, const std::string& chemistry) const {
  const auto r = etch_rate(material, chemistry);
  if (!r) throw MissingRateError("no " + chemistry + " rate for " + material);
  return *r;
}

void RateTable::validate() const {
  for (const auto& [key, r] : etch) {
    if (!(r > 0.0)) throw ConfigError("rate for " + key.first + " in " + key.second + " must be > 0");
  }
  for (const auto& [temp, r] : ash) {
    if (!(r > 0.0)) throw ConfigError("ashing rate at " + std::to_string(temp) + " C must be > 0");
  }
}

RateTable default_rates() {
  RateTable t;
  const std::string ibe = "Ar_IBE";
  t.etch = {{{"AlScN", ibe}, 28.0}, {{"AlN", ibe}, 30.0},     {{"SiO2", ibe}, 35.0},   {{"M35G", ibe}, 32.0},
            {{"M108Y", ibe}, 30.0}, {{"DS-K101", ibe}, 30.0}, {{"DUV42-P", ibe}, 30.0}, {{"Pt", ibe}, 45.0},
            {{"Ti", ibe}, 25.0},    {{"Al", ibe}, 50.0},      {{"Si", ibe}, 40.0}};
  t.ash = {{120.0, 100.0}, {250.0, 400.0}};
  return t;
}

std::vector<ContactRule> default_rules() {
  return {{"DEVELOPER_ATTACKS_AL", ChemistryClass::tmah_developer, "Al", Severity::error,
           "TMAH developer reaches exposed Al"},
          {"HF_ATTACKS_TI", ChemistryClass::wet_hf, "Ti", Severity::error, "wet HF reaches exposed Ti"},
          {"AL_OXIDATION", ChemistryClass::o2_plasma, "Al", Severity::warning, "O2 plasma over exposed Al"}};
}

SimulationResult simulate_stack(const Flow& flow, const RateTable& rates, const Catalog& catalog) {
  flow.validate(catalog);
  rates.validate();
  Simulator sim(flow, rates, catalog);
  SimulationResult out;
  out.states.push_back(sim.stack.snapshot(false));
  for (std::size_t i = 0; i < flow.steps.size(); ++i) {
    auto during = sim.stack.exposed();
    sim.run(i, flow.steps[i]);
    out.states.push_back(sim.stack.snapshot(sim.suspended));
    during.insert(out.states.back().exposed_materials.begin(), out.states.back().exposed_materials.end());
    out.exposed_during.push_back(std::move(during));
  }
  out.warnings = std::move(sim.warnings);
  out.full_o2_ash_steps = std::move(sim.overashed);
  return out;
}

std::vector<Violation> check_compatibility(const Flow& flow, const RateTable& rates, const Catalog& catalog,
                                           const std::vector<ContactRule>& rules) {
  auto sim = simulate_stack(flow, rates, catalog);
  std::vector<Violation> out = std::move(sim.warnings);
  auto chlorine_etch = [&](const ProcessStep& s) {
    return is_subtractive(s.kind) && catalog.chemistry(s.chemistry) == ChemistryClass::chlorine;
  };
  for (std::size_t i = 0; i < flow.steps.size(); ++i) {
    const auto& s = flow.steps[i];
    const std::optional<ChemistryClass> cls =
        s.chemistry.empty() ? std::nullopt : std::optional(catalog.chemistry(s.chemistry));
    if (cls) {
      for (const auto& r : rules) {
        if (r.chemistry == *cls && sim.exposed_during[i].contains(r.material)) {
          out.push_back({r.code, i, step_ref(i, s) + ": " + r.message + " (" + s.chemistry + ")", r.severity});
        }
      }
    }
    if (i == 0) continue;
    const bool rinse = s.kind == StepKind::strip_wet && cls == ChemistryClass::rinse;
    if (chlorine_etch(flow.steps[i - 1]) && !rinse) {
      out.push_back({"POST_CL_RINSE", i, step_ref(i, s) + ": chlorine etch not followed by a DI water rinse",
                     Severity::error});
    }
    if (s.kind == StepKind::strip_wet && cls == ChemistryClass::resist_stripper &&
        sim.full_o2_ash_steps.contains(i - 1)) {
      out.push_back({"OVERASH_BEFORE_WET", i,
                     step_ref(i, s) + ": preceding O2 ash removed the hardened resist entirely; burnt residue",
                     Severity::warning});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.step, a.code) < std::tie(b.step, b.code);
  });
  return out;
}

EtchBudget etch_budget(const std::string& mask_material, double mask_thickness, const std::string& target_material,
                       double target_depth, double overetch_fraction, const RateTable& rates,
                       const std::string& chemistry) {
  if (!(mask_thickness >= 0.0) || !(target_depth >= 0.0) || !(overetch_fraction >= 0.0)) {
    throw InputError("etch_budget: thicknesses and overetch must be >= 0");
  }
  const double r_target = rates.require_etch_rate(target_material, chemistry) * kNm / 60.0;
  const double r_mask = rates.require_etch_rate(mask_material, chemistry) * kNm / 60.0;
  EtchBudget b;
  b.etch_time_s = target_depth * (1.0 + overetch_fraction) / r_target;
  b.consumed = b.etch_time_s * r_mask;
  b.remaining = std::max(mask_thickness - b.consumed, 0.0);
  b.pass = b.consumed < mask_thickness;
  return b;
}

double ashing_time(double thickness, double temperature_c, const RateTable& rates) {
  if (!(thickness >= 0.0)) throw InputError("ashing_time: thickness must be >= 0");
  const auto it = rates.ash.find(temperature_c);
  if (it == rates.ash.end()) {
    throw MissingRateError("no ashing rate at " + std::to_string(temperature_c) + " C");
  }
  return thickness / (it->second * kNm / 60.0);
}

using detail::check_keys;
using detail::get;

Flow flow_from_json(const json& j) {
  check_keys(j, {"name", "substrate", "columns", "release_pulses_required", "steps"}, "flow");
  Flow f;
  f.name = get<std::string>(j, "name", "flow");
  if (j.contains("substrate")) {
    const auto& s = j.at("substrate");
    check_keys(s, {"material", "thickness_m"}, "flow.substrate");
    f.substrate = get<std::string>(s, "material", "flow.substrate");
    f.substrate_thickness = get<double>(s, "thickness_m", "flow.substrate");
  }
  if (j.contains("columns")) f.columns = get<std::vector<std::string>>(j, "columns", "flow");
  if (j.contains("release_pulses_required")) f.release_pulses_required = get<int>(j, "release_pulses_required", "flow");
  if (!j.contains("steps") || !j.at("steps").is_array()) throw ConfigError("flow: 'steps' must be an array");
  for (std::size_t i = 0; i < j.at("steps").size(); ++i) {
    const auto& js = j.at("steps")[i];
    const std::string where = "flow.steps[" + std::to_string(i) + "]";
    check_keys(js,
               {"label", "kind", "material", "thickness_m", "targets", "chemistry", "temperature_c", "duration_s",
                "tool", "recipe", "open", "pulses", "metadata"},
               where);
    ProcessStep s;
    s.kind = parse_step_kind(get<std::string>(js, "kind", where));
    if (js.contains("label")) s.label = get<std::string>(js, "label", where);
    if (js.contains("material")) s.material = get<std::string>(js, "material", where);
    if (js.contains("thickness_m")) s.thickness = get<double>(js, "thickness_m", where);
    if (js.contains("targets")) s.targets = get<std::vector<std::string>>(js, "targets", where);
    if (js.contains("chemistry")) s.chemistry = get<std::string>(js, "chemistry", where);
    if (js.contains("temperature_c")) s.temperature_c = get<double>(js, "temperature_c", where);
    if (js.contains("duration_s")) s.duration_s = get<double>(js, "duration_s", where);
    if (js.contains("tool")) s.tool = get<std::string>(js, "tool", where);
    if (js.contains("open")) s.open = get<std::vector<std::string>>(js, "open", where);
    if (js.contains("pulses")) s.pulses = get<int>(js, "pulses", where);
    if (js.contains("metadata")) s.metadata = get<std::map<std::string, std::string>>(js, "metadata", where);
    if (js.contains("recipe")) {
      const auto& jr = js.at("recipe");
      check_keys(jr, {"segments", "repeats"}, where + ".recipe");
      IbeRecipe r;
      r.repeats = jr.contains("repeats") ? get<int>(jr, "repeats", where + ".recipe") : 1;
      if (!jr.contains("segments") || !jr.at("segments").is_array()) {
        throw ConfigError(where + ".recipe: 'segments' must be an array");
      }
      for (const auto& seg : jr.at("segments")) {
        check_keys(seg, {"angle_deg", "duration_s"}, where + ".recipe.segments");
        r.segments.push_back({get<double>(seg, "angle_deg", where), get<double>(seg, "duration_s", where)});
      }
      s.recipe = r;
    }
    f.steps.push_back(std::move(s));
  }
  return f;
}

json to_json(const Flow& f) {
  json steps = json::array();
  for (const auto& s : f.steps) {
    json js{{"kind", to_string(s.kind)}};
    if (!s.label.empty()) js["label"] = s.label;
    if (!s.material.empty()) js["material"] = s.material;
    if (s.thickness > 0.0) js["thickness_m"] = s.thickness;
    if (!s.targets.empty()) js["targets"] = s.targets;
    if (!s.chemistry.empty()) js["chemistry"] = s.chemistry;
    if (s.temperature_c) js["temperature_c"] = *s.temperature_c;
    if (s.duration_s) js["duration_s"] = *s.duration_s;
    if (!s.tool.empty()) js["tool"] = s.tool;
    if (!s.open.empty()) js["open"] = s.open;
    if (s.pulses != 0) js["pulses"] = s.pulses;
    if (!s.metadata.empty()) js["metadata"] = s.metadata;
    if (s.recipe) {
      json segs = json::array();
      for (const auto& seg : s.recipe->segments) segs.push_back({{"angle_deg", seg.angle_deg}, {"duration_s", seg.duration_s}});
      js["recipe"] = {{"segments", segs}, {"repeats", s.recipe->repeats}};
    }
    steps.push_back(std::move(js));
  }
  return {{"name", f.name},
          {"substrate", {{"material", f.substrate}, {"thickness_m", f.substrate_thickness}}},
          {"columns", f.columns},
          {"release_pulses_required", f.release_pulses_required},
          {"steps", steps}};
}

RateTable rates_from_json(const json& j) {
  check_keys(j, {"etch", "ash"}, "rates");
  RateTable t;
  if (j.contains("etch")) {
    for (const auto& e : j.at("etch")) {
      check_keys(e, {"material", "chemistry", "nm_per_min"}, "rates.etch");
      t.etch[{get<std::string>(e, "material", "rates.etch"), get<std::string>(e, "chemistry", "rates.etch")}] =
          get<double>(e, "nm_per_min", "rates.etch");
    }
  }
  if (j.contains("ash")) {
    for (const auto& e : j.at("ash")) {
      check_keys(e, {"temperature_c", "nm_per_min"}, "rates.ash");
      t.ash[get<double>(e, "temperature_c", "rates.ash")] = get<double>(e, "nm_per_min", "rates.ash");
    }
  }
  t.validate();
  return t;
}

json to_json(const RateTable& t) {
  json etch = json::array(), ash = json::array();
  for (const auto& [key, r] : t.etch) etch.push_back({{"material", key.first}, {"chemistry", key.second}, {"nm_per_min", r}});
  for (const auto& [temp, r] : t.ash) ash.push_back({{"temperature_c", temp}, {"nm_per_min", r}});
  return {{"etch", etch}, {"ash", ash}};
}

json to_json(const std::vector<Violation>& violations) {
  json arr = json::array();
  for (const auto& v : violations) {
    arr.push_back({{"code", v.code}, {"step", v.step}, {"severity", to_string(v.severity)}, {"message", v.message}});
  }
  return arr;
}

Flow load_flow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open flow '" + path + "'");
  try {
    return flow_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("flow '" + path + "': " + e.what());
  }
}

}  // namespace lwr::process
