#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptsim/actions.hpp"
#include "adaptsim/qol.hpp"
#include "adaptsim/rainfall.hpp"
#include "adaptsim/rng.hpp"

namespace adaptsim {

struct RewardWeights {
  double beta_q = 1.0;
  double beta_a = -0.001;
  double beta_m = -0.001;
};

// Immutable scenario data shared by every environment instance.
struct World {
  City city;
  RainfallModel rainfall;
  MeasureCatalog catalog;
  QoLWeights weights;
  ImpedanceParams impedance;
  double access_threshold_s = 900.0;
};
// Checks cross-module consistency (weights cover the POI categories, ...).
void validate(const World& world);

struct EnvConfig {
  std::shared_ptr<const World> world;
  int first_year = kFirstYear;
  int last_year = kLastYear;
  RewardWeights reward;
  double gamma = 1.0;
  // Measure kinds offered as actions, in action order. NoOp is always action 0.
  std::vector<MeasureKind> enabled_measures;
  std::uint64_t master_seed = 0;
  // When set, every year's rain is this quantile instead of a random draw.
  std::optional<double> fixed_quantile;

  int horizon() const { return last_year - first_year + 1; }
};
void validate(const EnvConfig& cfg);
// Every non-NoOp kind, in catalog order.
std::vector<MeasureKind> all_measures();

struct Action {
  int zone = -1;
  MeasureKind kind = MeasureKind::NoOp;
  bool operator==(const Action&) const = default;
};

struct StepInfo {
  int year = 0;
  Action action;
  double rain_mm = 0.0;
  std::vector<double> q;  // per zone
  double capital = 0.0;   // A
  double maintenance = 0.0;  // M
  std::vector<double> capital_by_zone;
  std::vector<double> maintenance_by_zone;
  int flooded_cells = 0;  // cells with standing water
  std::vector<AccessProfile> access;
};

struct StepResult {
  std::string observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// Minimal episodic interface used by the learners. Actions are dense indices.
class EpisodicEnv {
 public:
  struct Outcome {
    std::string observation;
    double reward = 0.0;
    bool done = false;
  };
  virtual ~EpisodicEnv() = default;
  virtual std::string reset(std::uint64_t episode_seed) = 0;
  virtual Outcome step(int action) = 0;
  virtual int action_count() const = 0;
  virtual std::vector<int> valid_actions() const = 0;
  virtual double discount() const = 0;
};

// Canonical key: "y<index>|" followed by one 0/1 block per zone (kinds 1..7), blocks joined by '.'.
std::string encode_state(int year_index, const InstalledMeasures& installed);

/// Yearly adaptation environment.
///
/// A step installs the chosen measure and charges its capital cost, charges
/// maintenance on everything installed, then samples the year's rain. Rain is
/// drawn after the action, so the agent adapts ahead of the weather. The
/// flood, edge times, accessibility and per-zone QoL follow, and the reward is
/// beta_q * sum(Q) + beta_a * A + beta_m * M.
class Environment : public EpisodicEnv {
 public:
  explicit Environment(EnvConfig cfg);

  std::string reset(std::uint64_t episode_seed) override;
  Outcome step(int action) override;
  int action_count() const override;
  std::vector<int> valid_actions() const override;
  double discount() const override { return cfg_.gamma; }

  StepResult step(const Action& action);
  Action action_at(int index) const;
  int action_index(const Action& action) const;
  std::string action_name(const Action& action) const;

  const EnvConfig& config() const { return cfg_; }
  const World& world() const { return *cfg_.world; }
  int year_index() const { return year_index_; }
  int year() const { return cfg_.first_year + year_index_; }
  bool done() const { return year_index_ >= cfg_.horizon(); }
  const InstalledMeasures& installed() const { return installed_; }
  const EnvParams& params() const { return params_; }
  std::string observation() const { return encode_state(year_index_, installed_); }

  // Jumps to an arbitrary state; used to enumerate small deterministic instances.
  void set_state(int year_index, const InstalledMeasures& installed);

  // Flood for a given rain intensity under the current installs (no state change).
  DepthRaster flood_for(double rain_mm) const;

 private:
  const FloodModel& flood_model() const;

  EnvConfig cfg_;
  int year_index_ = 0;
  InstalledMeasures installed_;
  EnvParams params_;
  Rng rng_;
  mutable std::map<std::vector<unsigned char>, std::shared_ptr<const FloodModel>> flood_cache_;
};

inline constexpr int kTraceVersion = 1;
nlohmann::json trace_record(const Environment& env, const StepResult& r);

nlohmann::json to_json(const RewardWeights& w);
RewardWeights reward_from_json(const nlohmann::json& j);

}  // namespace adaptsim
