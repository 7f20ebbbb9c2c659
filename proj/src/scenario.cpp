#include "adaptsim/scenario.hpp"

#include <filesystem>

#include <openssl/evp.h>

#include "adaptsim/errors.hpp"
#include "adaptsim/textio.hpp"

namespace fs = std::filesystem;

namespace adaptsim {

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).string();
}

const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& file) {
  if (!j.contains(key)) throw ValidationError(file + ": missing required key '" + key + "'");
  return j[key];
}

std::string require_string(const nlohmann::json& j, const char* key, const std::string& file) {
  const auto& v = require(j, key, file);
  if (!v.is_string()) throw ValidationError(file + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

nlohmann::json env_json(const EnvConfig& e) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : e.enabled_measures) kinds.push_back(to_string(k));
  nlohmann::json j = {{"first_year", e.first_year},
                      {"last_year", e.last_year},
                      {"reward", to_json(e.reward)},
                      {"gamma", e.gamma},
                      {"enabled_measures", kinds},
                      {"master_seed", e.master_seed}};
  if (e.fixed_quantile) j["fixed_quantile"] = *e.fixed_quantile;
  return j;
}

nlohmann::json agent_json(const AgentConfig& a) {
  return {{"alpha", a.alpha},
          {"epsilon_start", a.epsilon_start},
          {"epsilon_end", a.epsilon_end},
          {"epsilon_fraction", a.epsilon_fraction},
          {"episodes", a.episodes},
          {"seed", a.seed}};
}

nlohmann::json impedance_json(const ImpedanceParams& p) {
  return {{"d_slow", p.d_slow}, {"d_block", p.d_block}, {"slow_multiplier", p.slow_multiplier}};
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& file) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(file + ": '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Scenario load_scenario(const std::string& config_path) {
  const fs::path base = fs::path(config_path).parent_path();
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(read_file(config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(config_path, 0, std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw ValidationError(config_path + ": top level must be an object");
  const std::string& file = config_path;

  Scenario s;
  s.name = get_or<std::string>(cfg, "name", "scenario", file);
  auto world = std::make_shared<World>();

  auto dem = read_ascii_grid(resolve(base, require_string(cfg, "dem", file)));
  const bool open = get_or<bool>(cfg, "open_border", false, file);
  const auto graph = parse_network(read_csv(resolve(base, require_string(cfg, "nodes", file))),
                                   read_csv(resolve(base, require_string(cfg, "edges", file))));
  auto pois = parse_pois(read_csv(resolve(base, require_string(cfg, "pois", file))), graph);
  auto zones = parse_zones(read_csv(resolve(base, require_string(cfg, "zones", file))), graph);
  world->city = make_city(std::move(dem), open, graph, std::move(zones), std::move(pois));

  const auto& rain = require(cfg, "rainfall", file);
  try {
    world->rainfall = rain.is_string() ? rainfall_from_json(nlohmann::json::parse(read_file(resolve(base, rain))))
                                       : rainfall_from_json(rain);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(file + ": rainfall: " + e.what());
  }
  world->catalog = catalog_from_json(require(cfg, "actions", file));

  const auto& q = require(cfg, "qol", file);
  if (q.contains("weights")) {
    world->weights = weights_from_json(q["weights"]);
  } else if (q.contains("survey")) {
    s.survey = parse_survey_csv(read_csv(resolve(base, q["survey"].get<std::string>())));
    if (q.contains("fit")) s.fit = fit_config_from_json(q["fit"]);
    s.fit_report = fit_weights(*s.survey, s.fit);
    world->weights = s.fit_report->weights;
  } else {
    throw ValidationError(file + ": qol needs either 'weights' or 'survey'");
  }

  if (cfg.contains("impedance")) {
    const auto& im = cfg["impedance"];
    world->impedance.d_slow = get_or(im, "d_slow", world->impedance.d_slow, file);
    world->impedance.d_block = get_or(im, "d_block", world->impedance.d_block, file);
    world->impedance.slow_multiplier = get_or(im, "slow_multiplier", world->impedance.slow_multiplier, file);
  }
  world->access_threshold_s = get_or(cfg, "access_threshold_s", world->access_threshold_s, file);
  validate(*world);
  s.world = world;

  auto& env = s.env;
  env.world = world;
  env.enabled_measures = all_measures();
  if (cfg.contains("env")) {
    const auto& e = cfg["env"];
    env.first_year = get_or(e, "first_year", env.first_year, file);
    env.last_year = get_or(e, "last_year", env.last_year, file);
    if (e.contains("reward")) env.reward = reward_from_json(e["reward"]);
    env.gamma = get_or(e, "gamma", env.gamma, file);
    env.master_seed = get_or<std::uint64_t>(e, "master_seed", 0, file);
    if (e.contains("fixed_quantile") && !e["fixed_quantile"].is_null())
      env.fixed_quantile = get_or<double>(e, "fixed_quantile", 0.0, file);
    if (e.contains("enabled_measures")) {
      env.enabled_measures.clear();
      for (const auto& k : e["enabled_measures"]) env.enabled_measures.push_back(measure_from_string(k.get<std::string>()));
    }
  }
  validate(env);

  if (cfg.contains("agent")) {
    const auto& a = cfg["agent"];
    auto& ag = s.agent;
    ag.alpha = get_or(a, "alpha", ag.alpha, file);
    ag.epsilon_start = get_or(a, "epsilon_start", ag.epsilon_start, file);
    ag.epsilon_end = get_or(a, "epsilon_end", ag.epsilon_end, file);
    ag.epsilon_fraction = get_or(a, "epsilon_fraction", ag.epsilon_fraction, file);
    ag.episodes = get_or(a, "episodes", ag.episodes, file);
    ag.seed = get_or<std::uint64_t>(a, "seed", ag.seed, file);
  }
  validate(s.agent);
  return s;
}

nlohmann::json canonical_json(const Scenario& s) {
  const auto& w = *s.world;
  const auto& c = w.city;
  nlohmann::json j;
  j["name"] = s.name;
  j["dem"] = format_ascii_grid(c.dem);
  j["open_border"] = c.open_border;
  j["nodes"] = format_nodes_csv(c.graph);
  j["edges"] = format_edges_csv(c.graph);
  j["pois"] = format_pois_csv(c.pois, c.graph);
  j["zones"] = format_zones_csv(c.zones, c.graph);
  j["rainfall"] = to_json(w.rainfall);
  j["actions"] = to_json(w.catalog);
  if (s.survey)
    j["qol"] = {{"survey", format_survey_csv(*s.survey)}, {"fit", to_json(s.fit)}};
  else
    j["qol"] = {{"weights", to_json(w.weights)}};
  j["impedance"] = impedance_json(w.impedance);
  j["access_threshold_s"] = w.access_threshold_s;
  j["env"] = env_json(s.env);
  j["agent"] = agent_json(s.agent);
  return j;
}

std::string content_hash(const Scenario& s) { return sha256_hex(canonical_json(s).dump()); }

void save_scenario(const Scenario& s, const std::string& dir) {
  fs::create_directories(dir);
  auto j = canonical_json(s);
  const fs::path d(dir);
  auto spill = [&](const char* key, const std::string& filename) {
    write_file((d / filename).string(), j[key].get<std::string>());
    j[key] = filename;
  };
  spill("dem", "dem.asc");
  spill("nodes", "nodes.csv");
  spill("edges", "edges.csv");
  spill("pois", "pois.csv");
  spill("zones", "zones.csv");
  if (s.survey) {
    write_file((d / "survey.csv").string(), j["qol"]["survey"].get<std::string>());
    j["qol"]["survey"] = "survey.csv";
  }
  write_file((d / "config.json").string(), j.dump(2) + "\n");
}

}  // namespace adaptsim
