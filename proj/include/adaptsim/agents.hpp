#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adaptsim/env.hpp"

namespace adaptsim {

class QTable {
 public:
  explicit QTable(int actions = 1) : actions_(actions) {}
  int action_count() const { return actions_; }
  // All-zero for unseen states.
  std::vector<double> values(const std::string& state) const;
  double value(const std::string& state, int action) const;
  double& at(const std::string& state, int action);  // creates the row on demand
  // Best action among `allowed` (all actions when empty); ties go to the lowest index.
  int greedy(const std::string& state, const std::vector<int>& allowed = {}) const;
  double max_value(const std::string& state, const std::vector<int>& allowed = {}) const;
  const std::map<std::string, std::vector<double>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool operator==(const QTable&) const = default;

 private:
  int actions_;
  std::map<std::string, std::vector<double>> rows_;
};

struct Transition {
  std::string state;
  int action = 0;
  double reward = 0.0;
  std::string next_state;
  bool done = false;
};

// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') * [not done] - Q(s,a)).
// `next_allowed` restricts the max to the actions valid in s' (all when empty).
void q_update(QTable& table, const Transition& t, double alpha, double gamma,
              const std::vector<int>& next_allowed = {});

struct AgentConfig {
  double alpha = 0.1;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.8;  // share of episodes over which epsilon decays linearly
  int episodes = 500;
  std::uint64_t seed = 0;
};
void validate(const AgentConfig& cfg);
double epsilon_at(const AgentConfig& cfg, int episode);

struct CurvePoint {
  int episode = 0;
  double ret = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  QTable table;
  std::vector<CurvePoint> curve;
  std::map<std::string, int> visits;  // state key -> times an action was taken there
};

// Episode e is reset with seed mix64(cfg.seed) + e; exploration uses its own stream.
TrainResult train(EpisodicEnv& env, const AgentConfig& cfg);

// Finite-horizon MDP with explicit transition lists.
struct ExplicitMdp {
  struct Outcome {
    int next = 0;
    double prob = 1.0;
    double reward = 0.0;
  };
  int states = 0;
  int actions = 0;
  // outcomes[s][a]; an empty list marks an unavailable action.
  std::vector<std::vector<std::vector<Outcome>>> outcomes;
  std::vector<bool> terminal;
};

struct ViResult {
  std::vector<std::vector<double>> values;  // values[t][s], t = 0..horizon, values[horizon] = 0
  std::vector<std::vector<int>> policy;     // policy[t][s], -1 where no action applies
};

inline constexpr std::size_t kMaxStateActions = 1000000;

// Backward induction. CapacityError above kMaxStateActions state-action pairs.
ViResult value_iteration(const ExplicitMdp& mdp, double gamma, int horizon);

struct EnumeratedMdp {
  ExplicitMdp mdp;
  std::vector<std::string> keys;  // state index -> observation key
  int initial = 0;
};

// Exhaustive enumeration of a deterministic-rain environment reachable from reset.
EnumeratedMdp enumerate_mdp(const EnvConfig& cfg);

enum class PolicyKind { Greedy, Random, DoNothing };
PolicyKind policy_from_string(const std::string& name);

struct TrajectoryStep {
  std::string state;
  int action = 0;
  double reward = 0.0;
  std::string next_state;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::vector<StepResult> results;
  double total_return = 0.0;  // sum gamma^t r_t
};

// One full episode. `table` is required for Greedy; Random draws from a stream split off `seed`.
Trajectory rollout(Environment& env, PolicyKind policy, std::uint64_t seed, const QTable* table = nullptr);

// Versioned, sorted text checkpoint.
std::string format_qtable(const QTable& table);
QTable parse_qtable(const std::string& text, const std::string& source = "<memory>");
std::string format_curve_csv(const std::vector<CurvePoint>& curve);

}  // namespace adaptsim
