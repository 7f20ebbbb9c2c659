#include <set>

#include "adaptsim/env.hpp"
#include "adaptsim/errors.hpp"
#include "adaptsim/scenario.hpp"
#include "doctest.h"
#include "oracles/graph_oracle.hpp"
#include "test_support.hpp"

using namespace adaptsim;

namespace {

EnvConfig toy_config() { return testsupport::toy_city().env; }

// World copy with a constant rain distribution.
EnvConfig constant_rain(double mm) {
  auto cfg = toy_config();
  auto w = std::make_shared<World>(*cfg.world);
  w->rainfall.tables = {{kFirstYear, {{0.0, mm}, {1.0, mm}}}};
  cfg.world = w;
  return cfg;
}

// Dry-network QoL worked out with the all-pairs oracle.
double dry_qol_sum(const World& w) {
  const auto& g = w.city.graph;
  std::vector<double> free;
  for (const auto& e : g.edges()) free.push_back(e.time_s);
  const auto all = oracle::all_pairs(g, free);
  double total = 0.0;
  for (const auto& z : w.city.zones)
    for (const auto& p : w.city.pois)
      if (all[static_cast<std::size_t>(z.centroid)][static_cast<std::size_t>(p.node)] <= w.access_threshold_s)
        total += w.weights.weights.at(p.category) / z.population;
  return total;
}

std::string dem_hash(const DemGrid& dem) { return sha256_hex(format_ascii_grid(dem)); }

}  // namespace

TEST_CASE("reset: initial observation") {
  Environment env(toy_config());
  const auto obs = env.reset(3);
  CHECK(obs == "y00|0000000.0000000");
  CHECK(env.year() == 2023);
  CHECK(env.installed().count() == 0);
}

TEST_CASE("step: dry network reward is constant and matches the oracle") {
  auto cfg = constant_rain(0.5);
  cfg.reward = {1.0, 0.0, 0.0};
  cfg.last_year = 2030;
  Environment env(cfg);
  env.reset(0);
  const double expect = dry_qol_sum(*cfg.world);
  while (!env.done()) {
    const auto r = env.step(Action{});
    CHECK(r.reward == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("step: cost terms under pure cost weights") {
  auto cfg = toy_config();
  cfg.reward = {0.0, 1.0, 1.0};
  Environment env(cfg);
  env.reset(0);
  const auto& cat = cfg.world->catalog[MeasureKind::RetentionBasin];
  auto r = env.step(Action{0, MeasureKind::RetentionBasin});
  CHECK(r.reward == cat.capital_cost + cat.annual_maintenance);
  r = env.step(Action{});
  CHECK(r.reward == cat.annual_maintenance);

  cfg.reward = {1.0, -0.001, -0.001};
  Environment env2(cfg);
  env2.reset(0);
  r = env2.step(Action{0, MeasureKind::RetentionBasin});
  double qs = r.info.q[0] + r.info.q[1];
  CHECK(r.reward == doctest::Approx(qs - 0.001 * (cat.capital_cost + cat.annual_maintenance)).epsilon(1e-14));
}

TEST_CASE("step: full horizon is 78 steps") {
  Environment env(toy_config());
  env.reset(1);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = env.step(Action{}).done;
    ++steps;
  }
  CHECK(steps == 78);
  CHECK_THROWS_AS(env.step(Action{}), StateError);
}

TEST_CASE("step: duplicate install is rejected without advancing") {
  Environment env(toy_config());
  env.reset(1);
  env.step(Action{1, MeasureKind::GreenRoof});
  const int year = env.year();
  CHECK_THROWS_AS(env.step(Action{1, MeasureKind::GreenRoof}), StateError);
  CHECK(env.year() == year);
  const auto valid = env.valid_actions();
  CHECK(std::find(valid.begin(), valid.end(), env.action_index({1, MeasureKind::GreenRoof})) == valid.end());
}

TEST_CASE("episodes are deterministic and streams differ by seed") {
  auto run = [](std::uint64_t seed) {
    Environment env(toy_config());
    env.reset(seed);
    std::vector<std::string> out;
    Rng pick(99);
    while (!env.done()) {
      const auto valid = env.valid_actions();
      const auto r = env.step(env.action_at(valid[static_cast<std::size_t>(pick.below(valid.size()))]));
      out.push_back(trace_record(env, r).dump());
    }
    return out;
  };
  CHECK(run(5) == run(5));

  auto rains = [](std::uint64_t seed) {
    Environment env(toy_config());
    env.reset(seed);
    std::vector<double> mm;
    for (int i = 0; i < 10; ++i) mm.push_back(env.step(Action{}).info.rain_mm);
    return mm;
  };
  int differing = 0;
  for (std::uint64_t s = 0; s < 20; ++s)
    if (rains(s) != rains(s + 1000)) ++differing;
  CHECK(differing == 20);
}

TEST_CASE("reward decomposes into its info fields") {
  auto cfg = toy_config();
  cfg.reward = {2.5, -0.01, -0.02};
  Environment env(cfg);
  env.reset(4);
  Rng pick(3);
  while (!env.done()) {
    const auto valid = env.valid_actions();
    const auto r = env.step(env.action_at(valid[static_cast<std::size_t>(pick.below(valid.size()))]));
    double qs = 0.0;
    for (double q : r.info.q) qs += q;
    CHECK(std::abs(r.reward - (2.5 * qs - 0.01 * r.info.capital - 0.02 * r.info.maintenance)) <= 1e-12);
  }
}

TEST_CASE("blocked bridge lowers the reward below the dry network") {
  auto wet = constant_rain(40.0);
  wet.reward = {1.0, 0.0, 0.0};
  auto dry = constant_rain(0.0);
  dry.reward = {1.0, 0.0, 0.0};
  Environment a(wet), b(dry);
  a.reset(0);
  b.reset(0);
  for (int i = 0; i < 10; ++i) CHECK(a.step(Action{}).reward < b.step(Action{}).reward);
}

TEST_CASE("QoL-only greedy ranking is invariant to scaling beta_q") {
  auto cfg = constant_rain(25.0);
  cfg.last_year = 2024;
  auto rewards = [&](double beta) {
    auto c = cfg;
    c.reward = {beta, 0.0, 0.0};
    Environment env(c);
    std::vector<double> out;
    for (int a = 0; a < env.action_count(); ++a) {
      env.reset(0);
      out.push_back(env.step(env.action_at(a)).reward);
    }
    return out;
  };
  const auto r1 = rewards(1.0), r7 = rewards(7.0);
  auto argmax = [](const std::vector<double>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); };
  CHECK(argmax(r1) == argmax(r7));
  for (std::size_t i = 0; i < r1.size(); ++i)
    for (std::size_t j = 0; j < r1.size(); ++j) CHECK((r1[i] < r1[j]) == (r7[i] < r7[j]));
}

TEST_CASE("encode_state is injective on a small exhaustive space") {
  std::set<std::string> keys;
  const std::vector<MeasureKind> kinds{MeasureKind::RoadDrainageUpgrade, MeasureKind::PermeablePaving};
  for (int year = 0; year < 3; ++year)
    for (int bits = 0; bits < 16; ++bits) {
      InstalledMeasures inst(2);
      for (int b = 0; b < 4; ++b)
        if (bits >> b & 1) inst.set(b / 2, kinds[static_cast<std::size_t>(b % 2)]);
      keys.insert(encode_state(year, inst));
      CHECK(encode_state(year, inst) == encode_state(year, inst));
    }
  CHECK(keys.size() == 48);
}

TEST_CASE("base terrain is untouched by an episode, maintenance never drops") {
  const auto& sc = testsupport::toy_city();
  const auto before = dem_hash(sc.world->city.dem);
  Environment env(sc.env);
  env.reset(8);
  Rng pick(8);
  double last_m = 0.0;
  while (!env.done()) {
    const auto valid = env.valid_actions();
    const auto r = env.step(env.action_at(valid[static_cast<std::size_t>(pick.below(valid.size()))]));
    CHECK(r.info.maintenance >= last_m);
    last_m = r.info.maintenance;
  }
  CHECK(env.installed().count() > 0);
  CHECK(dem_hash(sc.world->city.dem) == before);
}

TEST_CASE("non-elevation measures never deepen their own zone") {
  const auto& sc = testsupport::toy_city();
  const auto& city = sc.world->city;
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    Environment env(sc.env);
    InstalledMeasures inst(2);
    for (int k = 0; k < 4; ++k) {
      const auto kind = static_cast<MeasureKind>(1 + rng.below(5));  // kinds 1..5
      const int zone = static_cast<int>(rng.below(2));
      if (!inst.has(zone, kind)) inst.set(zone, kind);
    }
    env.set_state(0, inst);
    const double mm = 60.0 * rng.uniform();
    const auto before = env.flood_for(mm);
    const int zone = static_cast<int>(rng.below(2));
    const auto kind = static_cast<MeasureKind>(1 + rng.below(5));
    if (inst.has(zone, kind)) continue;
    inst.set(zone, kind);
    env.set_state(0, inst);
    const auto after = env.flood_for(mm);
    for (const auto& c : city.zones[static_cast<std::size_t>(zone)].cells)
      CHECK(after.depth(c.row, c.col) <= before.depth(c.row, c.col) + 1e-12);
  }
}

TEST_CASE("elevation measures conserve water") {
  const auto& sc = testsupport::toy_city();
  Environment env(sc.env);
  InstalledMeasures inst(2);
  inst.set(0, MeasureKind::RoadElevation);
  inst.set(1, MeasureKind::PerimeterBerm);
  env.set_state(0, inst);
  const auto d = env.flood_for(35.0);
  const double in = 0.035 * sc.world->city.dem.size() * sc.world->city.dem.geo.cell_area();
  CHECK(std::abs(d.ponded_volume() + d.outflow_volume - in) / in < 1e-12);
}

TEST_CASE("config validation") {
  auto cfg = toy_config();
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(Environment{cfg}, ValidationError);
  cfg = toy_config();
  cfg.first_year = 2050;
  cfg.last_year = 2040;
  CHECK_THROWS_AS(Environment{cfg}, ValidationError);
  cfg = toy_config();
  cfg.enabled_measures = {MeasureKind::NoOp};
  CHECK_THROWS_AS(Environment{cfg}, ValidationError);
}
