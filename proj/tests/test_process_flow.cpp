#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "lwr/error.hpp"
#include "lwr/process_flow.hpp"
#include "support.hpp"

using namespace lwr;
using namespace lwr::process;

namespace {

std::string flow_path(const std::string& name) { return std::string(LWR_DATA_DIR) + "/flows/" + name + ".json"; }

std::vector<Violation> errors_of(const std::vector<Violation>& v) {
  std::vector<Violation> out;
  std::copy_if(v.begin(), v.end(), std::back_inserter(out), [](const Violation& x) { return x.severity == Severity::error; });
  return out;
}

std::size_t step_of(const Flow& f, const std::string& label) {
  for (std::size_t i = 0; i < f.steps.size(); ++i) {
    if (f.steps[i].label == label) return i;
  }
  FAIL("no step " << label);
  return 0;
}

Flow blanket(std::vector<ProcessStep> steps) {
  Flow f;
  f.name = "test";
  f.steps = std::move(steps);
  return f;
}

ProcessStep deposit(const std::string& m, double t) {
  ProcessStep s;
  s.kind = StepKind::deposit;
  s.material = m;
  s.thickness = t;
  return s;
}

}  // namespace

TEST_CASE("deposit adds one layer") {
  const auto r = simulate_stack(blanket({deposit("AlScN", 400e-9)}), default_rates());
  REQUIRE(r.states.size() == 2);
  REQUIRE(r.states[1].layers.size() == 2);
  CHECK(r.states[1].layers[1].material == "AlScN");
  CHECK(r.states[1].layers[1].thickness == 400e-9);
  CHECK(r.states[1].layers[0].material == "Si");
  CHECK(r.states[1].exposed_materials == std::set<std::string>{"AlScN"});
}

TEST_CASE("ashing") {
  const auto rates = default_rates();
  CHECK(ashing_time(400e-9, 250.0, rates) == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(ashing_time(100e-9, 120.0, rates) == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(ashing_time(0.0, 250.0, rates) == 0.0);
  CHECK_THROWS_AS(ashing_time(100e-9, 200.0, rates), MissingRateError);

  ProcessStep ash;
  ash.kind = StepKind::strip_ash;
  ash.chemistry = "forming_gas";
  ash.temperature_c = 250.0;
  ash.duration_s = 60.0;
  ProcessStep spin = deposit("M108Y", 400e-9);
  spin.kind = StepKind::spin_coat;
  const auto r = simulate_stack(blanket({deposit("Al", 100e-9), spin, ash}), rates);
  CHECK(r.states.back().layers.size() == 2);
  CHECK(r.states.back().layers.back().material == "Al");

  ash.duration_s = 30.0;
  const auto half = simulate_stack(blanket({spin, ash}), rates);
  CHECK(half.states.back().layers.back().thickness == doctest::Approx(200e-9));
}

TEST_CASE("IBE recipe beam time") {
  IbeRecipe r{{{10.0, 60.0}, {45.0, 30.0}, {70.0, 30.0}}, 13};
  CHECK(r.total_time_s() == 26.0 * 60.0);
  const auto f = load_flow(flow_path("golden_aln"));
  CHECK(f.steps[step_of(f, "k1")].effective_duration().value() == 1560.0);
}

TEST_CASE("etch budget") {
  RateTable t;
  t.etch[{"SiO2", "Ar_IBE"}] = 10.0;
  t.etch[{"AlScN", "Ar_IBE"}] = 12.0;
  auto b = etch_budget("SiO2", 800e-9, "AlScN", 400e-9, 0.3, t);
  CHECK(b.consumed == doctest::Approx(400e-9 * 1.3 / 1.2).epsilon(1e-12));
  CHECK(std::round(b.consumed * 1e9) == 433.0);
  CHECK(std::round(b.remaining * 1e9) == 367.0);
  CHECK(b.pass);
  t.etch[{"AlScN", "Ar_IBE"}] = 4.0;
  b = etch_budget("SiO2", 800e-9, "AlScN", 400e-9, 0.3, t);
  CHECK(b.consumed == doctest::Approx(1300e-9).epsilon(1e-12));
  CHECK_FALSE(b.pass);
  CHECK(b.remaining == 0.0);
  t.etch[{"AlScN", "Ar_IBE"}] = 10.0;
  b = etch_budget("SiO2", 800e-9, "AlScN", 400e-9, 0.0, t);
  CHECK(b.pass);
  CHECK(b.remaining == doctest::Approx(400e-9));
  CHECK_THROWS_AS(etch_budget("M35G", 1e-6, "AlScN", 4e-7, 0.3, t), MissingRateError);

  test::Rng rng(91);
  for (int i = 0; i < 200; ++i) {
    const double depth = rng.uniform(100e-9, 1e-6), over = rng.uniform(0.0, 1.0);
    const double mask = rng.uniform(100e-9, 2e-6);
    const bool pass = etch_budget("SiO2", mask, "AlScN", depth, over, t).pass;
    if (pass) CHECK(etch_budget("SiO2", mask * 1.1, "AlScN", depth, over, t).pass);
    if (!pass) CHECK_FALSE(etch_budget("SiO2", mask, "AlScN", depth, over + 0.1, t).pass);
  }
}

TEST_CASE("golden flows pass") {
  for (const char* name : {"golden_aln", "golden_ti"}) {
    CAPTURE(name);
    const auto f = load_flow(flow_path(name));
    const auto v = check_compatibility(f, default_rates());
    for (const auto& x : v) MESSAGE(x.code << " " << x.message);
    CHECK(errors_of(v).empty());
    CHECK(v.empty());
    const auto sim = simulate_stack(f, default_rates());
    CHECK(sim.states.back().suspended);
    // The hard mask and every resist are gone; the device keeps Al fingers on AlScN.
    const auto& finger = sim.states.back().column_stacks.at("finger");
    CHECK(finger.back() == "Al");
    CHECK(std::find(finger.begin(), finger.end(), "AlScN") != finger.end());
    CHECK(sim.states.back().column_stacks.at("field") == std::vector<std::string>{"Si"});
  }
}

TEST_CASE("documented mutations") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"mutation_hf_attacks_ti", "HF_ATTACKS_TI"},
      {"mutation_developer_attacks_al", "DEVELOPER_ATTACKS_AL"},
      {"mutation_post_cl_rinse", "POST_CL_RINSE"},
      {"mutation_al_oxidation", "AL_OXIDATION"},
      {"mutation_overash_before_wet", "OVERASH_BEFORE_WET"}};
  for (const auto& [file, code] : cases) {
    CAPTURE(file);
    const auto v = check_compatibility(load_flow(flow_path(file)), default_rates());
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == code);
  }
  const auto hf = load_flow(flow_path("mutation_hf_attacks_ti"));
  CHECK(check_compatibility(hf, default_rates())[0].step == step_of(hf, "k3"));
}

TEST_CASE("wet HF is harmless without Ti") {
  auto f = load_flow(flow_path("golden_aln"));
  auto& s = f.steps[step_of(f, "k3")];
  s.kind = StepKind::etch_wet;
  s.chemistry = "dilute_HF";
  CHECK(check_compatibility(f, default_rates()).empty());
}

TEST_CASE("developer versus Al depends on the BARC") {
  auto make = [](const std::string& barc) {
    ProcessStep b = deposit(barc, 60e-9), r = deposit("M108Y", 400e-9), e, d;
    b.kind = r.kind = StepKind::spin_coat;
    e.kind = StepKind::expose;
    e.open = {"b"};
    d.kind = StepKind::develop;
    d.chemistry = "TMA238WA";
    Flow f = blanket({deposit("Al", 100e-9), b, r, e, d});
    f.columns = {"a", "b"};
    return check_compatibility(f, default_rates());
  };
  const auto dev = make("DS-K101");
  REQUIRE(dev.size() == 1);
  CHECK(dev[0].code == "DEVELOPER_ATTACKS_AL");
  CHECK(dev[0].step == 4);
  CHECK(make("DUV42-P").empty());
}

TEST_CASE("timed etch without a rate") {
  ProcessStep e;
  e.kind = StepKind::etch_dry;
  e.targets = {"AlScN"};
  e.chemistry = "Cl2/BCl3";
  e.duration_s = 60.0;
  CHECK_THROWS_AS(simulate_stack(blanket({deposit("AlScN", 400e-9), e}), default_rates()), MissingRateError);
  e.duration_s.reset();
  const auto r = simulate_stack(blanket({deposit("AlScN", 400e-9), e}), default_rates());
  CHECK(r.states.back().layers.size() == 1);
}

TEST_CASE("mask breakthrough clamps with a warning") {
  ProcessStep r = deposit("M108Y", 100e-9), e, x;
  r.kind = StepKind::spin_coat;
  x.kind = StepKind::expose;
  x.open = {"b"};
  ProcessStep d;
  d.kind = StepKind::develop;
  d.chemistry = "TMA238WA";
  e.kind = StepKind::etch_ibe;
  e.targets = {"AlScN"};
  e.chemistry = "Ar_IBE";
  e.duration_s = 600.0;
  Flow f = blanket({deposit("AlScN", 400e-9), r, x, d, e});
  f.columns = {"a", "b"};
  const auto v = check_compatibility(f, default_rates());
  REQUIRE(v.size() == 1);
  CHECK(v[0].code == "THICKNESS_CLAMPED");
  CHECK(v[0].severity == Severity::warning);
}

TEST_CASE("flow validation and JSON") {
  CHECK_THROWS_AS(flow_from_json(nlohmann::json::parse(R"({"name":"x","steps":[{"kind":"bake"}]})")), ConfigError);
  CHECK_THROWS_AS(flow_from_json(nlohmann::json::parse(R"({"name":"x","steps":[],"extra":1})")), ConfigError);
  CHECK_THROWS_AS(simulate_stack(blanket({deposit("AlScN", 0.0)}), default_rates()), ConfigError);
  CHECK_THROWS_AS(simulate_stack(blanket({deposit("Unobtainium", 1e-9)}), default_rates()), ConfigError);
  CHECK_THROWS_AS(simulate_stack(blanket({}), default_rates()), ConfigError);
  const auto f = load_flow(flow_path("golden_ti"));
  const auto back = flow_from_json(to_json(f));
  CHECK(to_json(back) == to_json(f));
  const auto rates = rates_from_json(to_json(default_rates()));
  CHECK(rates.etch == default_rates().etch);
  CHECK(rates.ash == default_rates().ash);
  CHECK_THROWS_AS(rates_from_json(nlohmann::json::parse(R"({"ash":[{"temperature_c":1,"nm_per_min":0}]})")),
                  ConfigError);
}

TEST_CASE("property: material conservation") {
  for (const char* name : {"golden_aln", "golden_ti", "mutation_overash_before_wet"}) {
    const auto f = load_flow(flow_path(name));
    const auto sim = simulate_stack(f, default_rates());
    std::map<std::size_t, double> last;
    for (std::size_t s = 0; s < sim.states.size(); ++s) {
      std::map<std::size_t, double> now;
      for (const auto& l : sim.states[s].layers) now[l.id] = l.thickness;
      for (const auto& [id, t] : now) {
        if (last.contains(id)) {
          CHECK(t <= last[id]);
        } else if (s > 0 && id != 0) {
          const auto k = f.steps[s - 1].kind;
          CHECK((k == StepKind::deposit || k == StepKind::spin_coat));
          CHECK(f.steps[s - 1].material == sim.states[s].layers.back().material);
        }
      }
      for (const auto& [id, t] : last) CHECK((now.contains(id) || id != 0));
      last = now;
    }
  }
}

TEST_CASE("property: appending steps never removes earlier violations") {
  test::Rng rng(92);
  std::vector<Flow> pool;
  for (const char* name : {"golden_aln", "golden_ti", "mutation_hf_attacks_ti", "mutation_developer_attacks_al",
                           "mutation_post_cl_rinse", "mutation_al_oxidation", "mutation_overash_before_wet"}) {
    pool.push_back(load_flow(flow_path(name)));
  }
  for (int trial = 0; trial < 60; ++trial) {
    // Random mix: a prefix of one flow followed by steps drawn from others.
    const Flow& base = pool[static_cast<std::size_t>(rng.integer(0, 6))];
    Flow f = base;
    f.steps.resize(static_cast<std::size_t>(rng.integer(1, static_cast<int>(base.steps.size()))));
    const int extra = rng.integer(0, 6);
    for (int i = 0; i < extra; ++i) {
      const Flow& donor = pool[static_cast<std::size_t>(rng.integer(0, 6))];
      f.steps.push_back(donor.steps[static_cast<std::size_t>(rng.integer(0, static_cast<int>(donor.steps.size()) - 1))]);
    }
    std::vector<Violation> prev;
    for (std::size_t n = 1; n <= f.steps.size(); ++n) {
      Flow prefix = f;
      prefix.steps.resize(n);
      std::vector<Violation> now;
      try {
        now = check_compatibility(prefix, default_rates());
      } catch (const Error&) {
        break;  // structurally invalid continuation (e.g. develop without exposure)
      }
      for (const auto& p : prev) {
        const bool kept = std::any_of(now.begin(), now.end(), [&](const Violation& v) {
          return v.step == p.step && v.code == p.code;
        });
        CHECK(kept);
      }
      prev = std::move(now);
    }
  }
}

TEST_CASE("violations are ordered by step then code") {
  auto f = load_flow(flow_path("golden_aln"));
  f.steps[step_of(f, "h")].chemistry = "O2";
  f.steps.erase(f.steps.begin() + static_cast<std::ptrdiff_t>(step_of(f, "g3")));
  const auto v = check_compatibility(f, default_rates());
  REQUIRE(v.size() == 2);
  CHECK(v[0].code == "AL_OXIDATION");
  CHECK(v[1].code == "POST_CL_RINSE");
  CHECK(v[0].step == v[1].step);
}
