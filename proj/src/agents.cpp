#include "adaptsim/agents.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_map>

#include "adaptsim/errors.hpp"
#include "adaptsim/textio.hpp"

namespace adaptsim {

std::vector<double> QTable::values(const std::string& state) const {
  auto it = rows_.find(state);
  if (it == rows_.end()) return std::vector<double>(static_cast<std::size_t>(actions_), 0.0);
  return it->second;
}

double QTable::value(const std::string& state, int action) const {
  auto it = rows_.find(state);
  return it == rows_.end() ? 0.0 : it->second.at(static_cast<std::size_t>(action));
}

double& QTable::at(const std::string& state, int action) {
  if (action < 0 || action >= actions_) throw DomainError("action " + std::to_string(action) + " out of range");
  auto it = rows_.find(state);
  if (it == rows_.end()) it = rows_.emplace(state, std::vector<double>(static_cast<std::size_t>(actions_), 0.0)).first;
  return it->second[static_cast<std::size_t>(action)];
}

int QTable::greedy(const std::string& state, const std::vector<int>& allowed) const {
  const auto v = values(state);
  int best = -1;
  auto consider = [&](int a) {
    if (best < 0 || v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(best)] ||
        (v[static_cast<std::size_t>(a)] == v[static_cast<std::size_t>(best)] && a < best))
      best = a;
  };
  if (allowed.empty())
    for (int a = 0; a < actions_; ++a) consider(a);
  else
    for (int a : allowed) consider(a);
  return best;
}

double QTable::max_value(const std::string& state, const std::vector<int>& allowed) const {
  const int a = greedy(state, allowed);
  return a < 0 ? 0.0 : value(state, a);
}

void q_update(QTable& table, const Transition& t, double alpha, double gamma, const std::vector<int>& next_allowed) {
  const double target = t.reward + (t.done ? 0.0 : gamma * table.max_value(t.next_state, next_allowed));
  double& q = table.at(t.state, t.action);
  q += alpha * (target - q);
}

void validate(const AgentConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ValidationError("alpha must be in (0, 1]");
  if (!(0.0 <= cfg.epsilon_end && cfg.epsilon_end <= cfg.epsilon_start && cfg.epsilon_start <= 1.0))
    throw ValidationError("epsilon schedule must satisfy 0 <= end <= start <= 1");
  if (!(cfg.epsilon_fraction >= 0.0 && cfg.epsilon_fraction <= 1.0))
    throw ValidationError("epsilon_fraction must be in [0, 1]");
  if (cfg.episodes < 1) throw ValidationError("episodes must be >= 1");
}

double epsilon_at(const AgentConfig& cfg, int episode) {
  const double span = cfg.epsilon_fraction * cfg.episodes;
  const double frac = span <= 0.0 ? 1.0 : std::min(1.0, episode / span);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

TrainResult train(EpisodicEnv& env, const AgentConfig& cfg) {
  validate(cfg);
  TrainResult out{QTable(env.action_count()), {}, {}};
  Rng explore = Rng(cfg.seed).split(0xE5);
  const double gamma = env.discount();
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = epsilon_at(cfg, ep);
    std::string s = env.reset(mix64(cfg.seed) + static_cast<std::uint64_t>(ep));
    auto allowed = env.valid_actions();
    double ret = 0.0, disc = 1.0;
    int t = 0;
    while (true) {
      int a;
      if (explore.bernoulli(eps))
        a = allowed[static_cast<std::size_t>(explore.below(allowed.size()))];
      else
        a = out.table.greedy(s, allowed);
      ++out.visits[s];
      EpisodicEnv::Outcome o;
      try {
        o = env.step(a);
      } catch (const std::exception& e) {
        throw std::runtime_error("episode " + std::to_string(ep) + ", step " + std::to_string(t) + ": " + e.what());
      }
      auto next_allowed = o.done ? std::vector<int>{} : env.valid_actions();
      q_update(out.table, {s, a, o.reward, o.observation, o.done}, cfg.alpha, gamma, next_allowed);
      ret += disc * o.reward;
      disc *= gamma;
      ++t;
      if (o.done) break;
      s = std::move(o.observation);
      allowed = std::move(next_allowed);
    }
    out.curve.push_back({ep, ret, eps});
  }
  return out;
}

ViResult value_iteration(const ExplicitMdp& mdp, double gamma, int horizon) {
  if (static_cast<std::size_t>(mdp.states) * static_cast<std::size_t>(mdp.actions) > kMaxStateActions)
    throw CapacityError("MDP has more than " + std::to_string(kMaxStateActions) + " state-action pairs");
  if (horizon < 0) throw DomainError("horizon must be >= 0");
  if (mdp.outcomes.size() != static_cast<std::size_t>(mdp.states) || mdp.terminal.size() != mdp.outcomes.size())
    throw ValidationError("MDP tables do not match the state count");
  const auto n = static_cast<std::size_t>(mdp.states);
  ViResult r;
  r.values.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(n, 0.0));
  r.policy.assign(static_cast<std::size_t>(horizon), std::vector<int>(n, -1));
  for (int t = horizon - 1; t >= 0; --t) {
    const auto& next = r.values[static_cast<std::size_t>(t) + 1];
    auto& cur = r.values[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.terminal[s]) continue;
      double best = 0.0;
      int best_a = -1;
      for (int a = 0; a < mdp.actions; ++a) {
        const auto& outs = mdp.outcomes[s][static_cast<std::size_t>(a)];
        if (outs.empty()) continue;
        double q = 0.0;
        for (const auto& o : outs) q += o.prob * (o.reward + gamma * next[static_cast<std::size_t>(o.next)]);
        if (best_a < 0 || q > best) {
          best = q;
          best_a = a;
        }
      }
      cur[s] = best_a < 0 ? 0.0 : best;
      r.policy[static_cast<std::size_t>(t)][s] = best_a;
    }
  }
  return r;
}

EnumeratedMdp enumerate_mdp(const EnvConfig& cfg) {
  if (!cfg.fixed_quantile) throw DomainError("enumeration needs deterministic rain (fixed_quantile)");
  Environment env(cfg);
  env.reset(0);
  EnumeratedMdp out;
  auto& mdp = out.mdp;
  mdp.actions = env.action_count();
  std::unordered_map<std::string, int> index;
  std::vector<std::pair<int, InstalledMeasures>> state_data;
  std::deque<int> queue;
  auto intern = [&](const std::string& key, int year_index, const InstalledMeasures& inst) {
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(out.keys.size());
    index.emplace(key, id);
    out.keys.push_back(key);
    state_data.push_back({year_index, inst});
    mdp.outcomes.emplace_back(static_cast<std::size_t>(mdp.actions));
    mdp.terminal.push_back(year_index >= cfg.horizon());
    if (static_cast<std::size_t>(out.keys.size()) * static_cast<std::size_t>(mdp.actions) > kMaxStateActions)
      throw CapacityError("enumerated MDP exceeds " + std::to_string(kMaxStateActions) + " state-action pairs");
    queue.push_back(id);
    return id;
  };
  out.initial = intern(env.observation(), 0, env.installed());
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    if (mdp.terminal[static_cast<std::size_t>(s)]) continue;
    const auto [year_index, inst] = state_data[static_cast<std::size_t>(s)];
    env.set_state(year_index, inst);
    for (int a : env.valid_actions()) {
      env.set_state(year_index, inst);
      const auto r = env.step(env.action_at(a));
      const int next = intern(r.observation, env.year_index(), env.installed());
      mdp.outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].push_back({next, 1.0, r.reward});
    }
  }
  mdp.states = static_cast<int>(out.keys.size());
  return out;
}

PolicyKind policy_from_string(const std::string& name) {
  if (name == "greedy") return PolicyKind::Greedy;
  if (name == "random") return PolicyKind::Random;
  if (name == "do-nothing") return PolicyKind::DoNothing;
  throw ValidationError("unknown policy '" + name + "' (expected greedy, random or do-nothing)");
}

Trajectory rollout(Environment& env, PolicyKind policy, std::uint64_t seed, const QTable* table) {
  if (policy == PolicyKind::Greedy && !table) throw DomainError("greedy rollout needs a Q-table");
  if (table && table->action_count() != env.action_count())
    throw ValidationError("Q-table has " + std::to_string(table->action_count()) + " actions, environment has " +
                          std::to_string(env.action_count()));
  Rng pick = Rng(seed).split(0xA11CE);
  Trajectory tr;
  std::string s = env.reset(seed);
  double disc = 1.0;
  while (!env.done()) {
    const auto allowed = env.valid_actions();
    int a = 0;
    if (policy == PolicyKind::Greedy) a = table->greedy(s, allowed);
    else if (policy == PolicyKind::Random) a = allowed[static_cast<std::size_t>(pick.below(allowed.size()))];
    auto r = env.step(env.action_at(a));
    tr.total_return += disc * r.reward;
    disc *= env.discount();
    tr.steps.push_back({s, a, r.reward, r.observation});
    s = r.observation;
    tr.results.push_back(std::move(r));
  }
  return tr;
}

namespace {
constexpr const char* kQTableHeader = "# adaptsim-qtable v1";
}

std::string format_qtable(const QTable& table) {
  std::ostringstream out;
  out << kQTableHeader << " actions=" << table.action_count() << '\n';
  for (const auto& [key, vals] : table.rows()) {  // std::map keeps keys sorted
    out << key << '\t';
    for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_double(vals[i]);
    out << '\n';
  }
  return out.str();
}

QTable parse_qtable(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kQTableHeader, 0) != 0)
    throw ParseError(source, 1, "missing Q-table header '" + std::string(kQTableHeader) + "'");
  const auto pos = line.find("actions=");
  if (pos == std::string::npos) throw ParseError(source, 1, "header lacks actions=");
  const auto n = parse_int(line.substr(pos + 8), source, 1);
  if (n < 1) throw ParseError(source, 1, "action count must be >= 1");
  QTable t(static_cast<int>(n));
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "expected state<TAB>values");
    const auto key = line.substr(0, tab);
    const auto vals = split(std::string_view(line).substr(tab + 1), ',');
    if (static_cast<long long>(vals.size()) != n)
      throw ParseError(source, lineno, "expected " + std::to_string(n) + " values");
    for (int a = 0; a < n; ++a) {
      const double v = parse_double(vals[static_cast<std::size_t>(a)], source, lineno);
      if (!std::isfinite(v)) throw ParseError(source, lineno, "Q values must be finite");
      t.at(key, a) = v;
    }
  }
  return t;
}

std::string format_curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "episode,return,epsilon\n";
  for (const auto& p : curve) out << p.episode << ',' << format_double(p.ret) << ',' << format_double(p.epsilon) << '\n';
  return out.str();
}

}  // namespace adaptsim
