#include "adaptsim/env.hpp"

#include <cmath>
#include <set>

#include "adaptsim/errors.hpp"

namespace adaptsim {

void validate(const World& world) {
  validate(world.rainfall);
  validate(world.catalog);
  validate(world.impedance);
  if (!(world.access_threshold_s > 0.0)) throw ValidationError("access threshold must be > 0");
  for (const auto& cat : poi_categories(world.city.pois))
    if (!world.weights.weights.count(cat)) throw ValidationError("no QoL weight for POI category '" + cat + "'");
}

std::vector<MeasureKind> all_measures() {
  std::vector<MeasureKind> out;
  for (int k = 1; k < kMeasureKinds; ++k) out.push_back(static_cast<MeasureKind>(k));
  return out;
}

void validate(const EnvConfig& cfg) {
  if (!cfg.world) throw ValidationError("environment has no world");
  validate(*cfg.world);
  if (cfg.first_year < kFirstYear || cfg.last_year > kLastYear || cfg.first_year > cfg.last_year)
    throw ValidationError("horizon must be a non-empty range within " + std::to_string(kFirstYear) + "-" +
                          std::to_string(kLastYear));
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ValidationError("gamma must be in [0, 1]");
  for (double b : {cfg.reward.beta_q, cfg.reward.beta_a, cfg.reward.beta_m})
    if (!std::isfinite(b)) throw ValidationError("reward weights must be finite");
  std::set<MeasureKind> seen;
  for (auto k : cfg.enabled_measures) {
    if (k == MeasureKind::NoOp) throw ValidationError("NoOp is always enabled and must not be listed");
    if (!seen.insert(k).second) throw ValidationError(std::string("measure '") + to_string(k) + "' enabled twice");
  }
  if (cfg.fixed_quantile && !(*cfg.fixed_quantile >= 0.0 && *cfg.fixed_quantile <= 1.0))
    throw ValidationError("fixed_quantile must be in [0, 1]");
}

std::string encode_state(int year_index, const InstalledMeasures& installed) {
  std::string key = "y";
  if (year_index < 10) key += '0';
  key += std::to_string(year_index);
  key += '|';
  for (int z = 0; z < installed.zones(); ++z) {
    if (z) key += '.';
    for (int k = 1; k < kMeasureKinds; ++k) key += installed.has(z, static_cast<MeasureKind>(k)) ? '1' : '0';
  }
  return key;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  installed_ = InstalledMeasures(static_cast<int>(world().city.zones.size()));
  params_ = derive_params(world().city, world().catalog, installed_);
}

std::string Environment::reset(std::uint64_t episode_seed) {
  year_index_ = 0;
  installed_ = InstalledMeasures(static_cast<int>(world().city.zones.size()));
  params_ = derive_params(world().city, world().catalog, installed_);
  rng_ = Rng(cfg_.master_seed).split(episode_seed);
  return observation();
}

void Environment::set_state(int year_index, const InstalledMeasures& installed) {
  if (year_index < 0 || year_index > cfg_.horizon()) throw DomainError("year index outside the horizon");
  if (installed.zones() != installed_.zones()) throw DomainError("install matrix does not match the zone count");
  year_index_ = year_index;
  installed_ = installed;
  params_ = derive_params(world().city, world().catalog, installed_);
}

int Environment::action_count() const {
  return 1 + installed_.zones() * static_cast<int>(cfg_.enabled_measures.size());
}

Action Environment::action_at(int index) const {
  if (index < 0 || index >= action_count()) throw DomainError("action index " + std::to_string(index) + " out of range");
  if (index == 0) return {};
  const int per = static_cast<int>(cfg_.enabled_measures.size());
  return {(index - 1) / per, cfg_.enabled_measures[static_cast<std::size_t>((index - 1) % per)]};
}

int Environment::action_index(const Action& action) const {
  if (action.kind == MeasureKind::NoOp) return 0;
  const int per = static_cast<int>(cfg_.enabled_measures.size());
  for (int k = 0; k < per; ++k)
    if (cfg_.enabled_measures[static_cast<std::size_t>(k)] == action.kind) {
      if (action.zone < 0 || action.zone >= installed_.zones()) break;
      return 1 + action.zone * per + k;
    }
  throw DomainError("action is not in this environment's action set");
}

std::string Environment::action_name(const Action& action) const {
  if (action.kind == MeasureKind::NoOp) return "NoOp";
  return world().city.zones.at(static_cast<std::size_t>(action.zone)).id + ":" + to_string(action.kind);
}

std::vector<int> Environment::valid_actions() const {
  std::vector<int> out{0};
  for (int a = 1; a < action_count(); ++a) {
    const auto act = action_at(a);
    if (!installed_.has(act.zone, act.kind)) out.push_back(a);
  }
  return out;
}

const FloodModel& Environment::flood_model() const {
  std::vector<unsigned char> key;
  for (int z = 0; z < installed_.zones(); ++z)
    for (auto k : {MeasureKind::RoadElevation, MeasureKind::PerimeterBerm})
      key.push_back(installed_.has(z, k) && world().catalog[k].elevation_delta > 0.0 ? 1 : 0);
  auto it = flood_cache_.find(key);
  if (it == flood_cache_.end())
    it = flood_cache_.emplace(key, std::make_shared<const FloodModel>(params_.working_dem, world().city.open_border))
             .first;
  return *it->second;
}

DepthRaster Environment::flood_for(double rain_mm) const {
  const auto& city = world().city;
  FloodForcing f;
  f.rain = GridD::Constant(city.dem.geo.nrows, city.dem.geo.ncols, rain_mm / 1000.0);
  for (int i = 0; i < city.dem.size(); ++i) {
    const int z = city.zone_of_cell[static_cast<std::size_t>(i)];
    if (z >= 0) f.rain(i) *= params_.rain_multiplier[static_cast<std::size_t>(z)];
  }
  f.storage = params_.storage;
  f.pumped = params_.pumped;
  return flood_model().simulate(f);
}

EpisodicEnv::Outcome Environment::step(int action) {
  auto r = step(action_at(action));
  return {std::move(r.observation), r.reward, r.done};
}

StepResult Environment::step(const Action& action) {
  if (done()) throw StateError("step called after the episode finished");
  if (action.kind != MeasureKind::NoOp) action_index(action);  // must be an offered action
  const auto& w = world();

  StepResult res;
  auto& info = res.info;
  info.year = year();
  info.action = action;

  // 1-2: install and costs.
  const auto costs = step_costs(installed_, action.zone, action.kind, w.catalog);
  if (action.kind != MeasureKind::NoOp) params_ = apply_measure(installed_, action.zone, action.kind, w.city, w.catalog);
  info.capital = costs.capital;
  info.maintenance = costs.maintenance;
  info.capital_by_zone = costs.capital_by_zone;
  info.maintenance_by_zone = costs.maintenance_by_zone;

  // 3-5: rain and flood.
  info.rain_mm = cfg_.fixed_quantile ? quantile(w.rainfall, info.year, *cfg_.fixed_quantile)
                                     : sample_event(w.rainfall, info.year, rng_).intensity;
  const auto depth = flood_for(info.rain_mm);
  info.flooded_cells = static_cast<int>((depth.depth > 0.0).count());

  // 6-7: transport and QoL.
  const auto times = effective_edge_times(w.city.graph, depth, w.impedance, params_.drainage_bonus);
  double q_sum = 0.0;
  for (const auto& zone : w.city.zones) {
    const auto t = shortest_times(w.city.graph, times, zone.centroid);
    info.access.push_back(accessibility(zone, w.city.pois, t, w.access_threshold_s));
    info.q.push_back(qol(info.access.back(), w.weights));
    q_sum += info.q.back();
  }

  // 8-9: reward and clock.
  res.reward = cfg_.reward.beta_q * q_sum + cfg_.reward.beta_a * info.capital + cfg_.reward.beta_m * info.maintenance;
  ++year_index_;
  res.done = done();
  res.observation = observation();
  return res;
}

nlohmann::json trace_record(const Environment& env, const StepResult& r) {
  nlohmann::json q = nlohmann::json::object();
  const auto& zones = env.world().city.zones;
  for (std::size_t z = 0; z < zones.size(); ++z) q[zones[z].id] = r.info.q[z];
  return {{"trace_version", kTraceVersion},
          {"year", r.info.year},
          {"action", env.action_name(r.info.action)},
          {"rain_mm", r.info.rain_mm},
          {"reward", r.reward},
          {"q", q},
          {"A", r.info.capital},
          {"M", r.info.maintenance},
          {"flooded_cells", r.info.flooded_cells}};
}

nlohmann::json to_json(const RewardWeights& w) {
  return {{"beta_q", w.beta_q}, {"beta_a", w.beta_a}, {"beta_m", w.beta_m}};
}

RewardWeights reward_from_json(const nlohmann::json& j) {
  RewardWeights w;
  w.beta_q = j.value("beta_q", w.beta_q);
  w.beta_a = j.value("beta_a", w.beta_a);
  w.beta_m = j.value("beta_m", w.beta_m);
  return w;
}

}  // namespace adaptsim
