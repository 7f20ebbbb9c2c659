#include <cmath>
#include <map>

#include "adaptsim/agents.hpp"
#include "adaptsim/errors.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace adaptsim;

namespace {

// Wraps a deterministic ExplicitMdp as an episodic environment; observation "t|s".
class TableEnv : public EpisodicEnv {
 public:
  TableEnv(ExplicitMdp mdp, int horizon, double gamma) : mdp_(std::move(mdp)), horizon_(horizon), gamma_(gamma) {}
  std::string reset(std::uint64_t) override {
    t_ = 0;
    s_ = 0;
    return key();
  }
  Outcome step(int a) override {
    const auto& o = mdp_.outcomes[static_cast<std::size_t>(s_)][static_cast<std::size_t>(a)].at(0);
    s_ = o.next;
    ++t_;
    return {key(), o.reward, t_ >= horizon_ || mdp_.terminal[static_cast<std::size_t>(s_)]};
  }
  int action_count() const override { return mdp_.actions; }
  std::vector<int> valid_actions() const override {
    std::vector<int> v;
    for (int a = 0; a < mdp_.actions; ++a)
      if (!mdp_.outcomes[static_cast<std::size_t>(s_)][static_cast<std::size_t>(a)].empty()) v.push_back(a);
    return v;
  }
  double discount() const override { return gamma_; }

 private:
  std::string key() const { return std::to_string(t_) + "|" + std::to_string(s_); }
  ExplicitMdp mdp_;
  int horizon_;
  double gamma_;
  int t_ = 0, s_ = 0;
};

ExplicitMdp random_mdp(Rng& rng, int states, int actions, int branches, bool deterministic) {
  ExplicitMdp m;
  m.states = states;
  m.actions = actions;
  m.terminal.assign(static_cast<std::size_t>(states), false);
  m.outcomes.assign(static_cast<std::size_t>(states), std::vector<std::vector<ExplicitMdp::Outcome>>(
                                                          static_cast<std::size_t>(actions)));
  for (auto& row : m.outcomes)
    for (auto& cell : row) {
      const int k = deterministic ? 1 : branches;
      double left = 1.0;
      for (int b = 0; b < k; ++b) {
        const double p = b + 1 == k ? left : left * rng.uniform();
        left -= p;
        cell.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(states))), p, rng.uniform() - 0.3});
      }
    }
  return m;
}

// Independent finite-horizon Bellman recursion.
std::vector<std::vector<double>> oracle_values(const ExplicitMdp& m, double gamma, int horizon) {
  std::vector<std::vector<double>> v(static_cast<std::size_t>(horizon + 1),
                                     std::vector<double>(static_cast<std::size_t>(m.states), 0.0));
  for (int t = horizon - 1; t >= 0; --t)
    for (int s = 0; s < m.states; ++s) {
      if (m.terminal[static_cast<std::size_t>(s)]) continue;
      double best = -INFINITY;
      for (const auto& cell : m.outcomes[static_cast<std::size_t>(s)]) {
        if (cell.empty()) continue;
        double q = 0.0;
        for (const auto& o : cell) q += o.prob * (o.reward + gamma * v[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(o.next)]);
        best = std::max(best, q);
      }
      v[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = std::isfinite(best) ? best : 0.0;
    }
  return v;
}

double greedy_return(TableEnv& env, const QTable& table) {
  auto s = env.reset(0);
  double ret = 0.0, disc = 1.0;
  while (true) {
    const auto o = env.step(table.greedy(s, env.valid_actions()));
    ret += disc * o.reward;
    disc *= env.discount();
    s = o.observation;
    if (o.done) return ret;
  }
}

}  // namespace

TEST_CASE("q_update: worked examples") {
  QTable q(3);
  q.at("b", 2) = 2.0;
  q_update(q, {"a", 1, 1.0, "b", false}, 0.5, 0.9);
  CHECK(q.value("a", 1) == doctest::Approx(1.4));
  q_update(q, {"a", 0, 1.0, "b", true}, 0.5, 0.9);
  CHECK(q.value("a", 0) == doctest::Approx(0.5));
  // Max restricted to the allowed set.
  q_update(q, {"c", 0, 0.0, "b", false}, 1.0, 1.0, {0, 1});
  CHECK(q.value("c", 0) == 0.0);
  CHECK(q.greedy("a") == 1);
  CHECK(q.greedy("zzz") == 0);
  CHECK(q.greedy("a", {0, 2}) == 0);
}

TEST_CASE("q_update: replay matches a map-based oracle and only touches one entry") {
  Rng rng(44);
  QTable q(4);
  std::map<std::pair<std::string, int>, double> ref;
  auto refv = [&](const std::string& s, int a) {
    auto it = ref.find({s, a});
    return it == ref.end() ? 0.0 : it->second;
  };
  for (int i = 0; i < 1000; ++i) {
    Transition t{"s" + std::to_string(rng.below(6)), static_cast<int>(rng.below(4)), rng.uniform() * 2 - 1,
                 "s" + std::to_string(rng.below(6)), rng.bernoulli(0.1)};
    double m = -INFINITY;
    for (int a = 0; a < 4; ++a) m = std::max(m, refv(t.next_state, a));
    const double target = t.reward + (t.done ? 0.0 : 0.95 * m);
    const double old = refv(t.state, t.action);
    ref[{t.state, t.action}] = old + 0.3 * (target - old);

    const auto before = q.rows();
    q_update(q, t, 0.3, 0.95);
    for (const auto& [key, vals] : q.rows())
      for (int a = 0; a < 4; ++a) {
        if (key == t.state && a == t.action) continue;
        const auto it = before.find(key);
        CHECK(vals[static_cast<std::size_t>(a)] == (it == before.end() ? 0.0 : it->second[static_cast<std::size_t>(a)]));
      }
  }
  for (const auto& [key, v] : ref) CHECK(q.value(key.first, key.second) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("epsilon schedule") {
  AgentConfig cfg;
  cfg.episodes = 100;
  CHECK(epsilon_at(cfg, 0) == 1.0);
  CHECK(epsilon_at(cfg, 80) == doctest::Approx(0.05));
  CHECK(epsilon_at(cfg, 99) == doctest::Approx(0.05));
  for (int e = 1; e < 100; ++e) CHECK(epsilon_at(cfg, e) <= epsilon_at(cfg, e - 1));
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
}

TEST_CASE("train: bandit learns the best arm and is reproducible") {
  ExplicitMdp m;
  m.states = 1;
  m.actions = 3;
  m.terminal = {false};
  m.outcomes = {{{{0, 1.0, 0.2}}, {{0, 1.0, 0.9}}, {{0, 1.0, 0.5}}}};
  TableEnv env(m, 1, 1.0);
  AgentConfig cfg;
  cfg.episodes = 300;
  cfg.seed = 7;
  const auto a = train(env, cfg);
  const auto b = train(env, cfg);
  CHECK(a.table.greedy("0|0") == 1);
  CHECK(a.table == b.table);
  CHECK(format_curve_csv(a.curve) == format_curve_csv(b.curve));
  CHECK(a.curve.size() == 300);
  CHECK(a.visits.at("0|0") == 300);
  // Early full exploration tries every arm.
  for (int k = 0; k < 3; ++k) CHECK(a.table.value("0|0", k) != 0.0);
}

TEST_CASE("train: greedy policy reaches the value-iteration optimum on random chains") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const auto m = random_mdp(rng, 3, 2, 1, true);
    const int horizon = 4;
    const double gamma = 0.9;
    const double best = value_iteration(m, gamma, horizon).values[0][0];
    TableEnv env(m, horizon, gamma);
    AgentConfig cfg;
    cfg.alpha = 0.5;
    cfg.episodes = 3000;
    cfg.seed = seed;
    const auto res = train(env, cfg);
    if (std::abs(greedy_return(env, res.table) - best) < 1e-9) ++hits;
  }
  CHECK(hits >= 19);
}

TEST_CASE("value_iteration: small examples") {
  ExplicitMdp zero;
  zero.states = 2;
  zero.actions = 1;
  zero.terminal = {false, false};
  zero.outcomes = {{{{1, 1.0, 0.0}}}, {{{0, 1.0, 0.0}}}};
  const auto z = value_iteration(zero, 0.9, 5);
  for (const auto& row : z.values)
    for (double v : row) CHECK(v == 0.0);

  // Two states, reward 1 per step, horizon 2, gamma 1: V0 = 2.
  ExplicitMdp two = zero;
  two.outcomes = {{{{1, 1.0, 1.0}}}, {{{0, 1.0, 1.0}}}};
  const auto t = value_iteration(two, 1.0, 2);
  CHECK(t.values[0][0] == 2.0);
  CHECK(t.values[2][1] == 0.0);
  CHECK(t.policy[0][0] == 0);
}

TEST_CASE("value_iteration: Bellman consistency on random stochastic MDPs") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = random_mdp(rng, 6, 3, 3, false);
    m.terminal[5] = true;
    m.outcomes[2][1].clear();
    const int horizon = 1 + static_cast<int>(rng.below(8));
    const double gamma = 0.5 + 0.5 * rng.uniform();
    const auto vi = value_iteration(m, gamma, horizon);
    const auto ref = oracle_values(m, gamma, horizon);
    for (int t = 0; t <= horizon; ++t)
      for (int s = 0; s < 6; ++s) {
        CHECK(vi.values[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] ==
              doctest::Approx(ref[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]).epsilon(1e-12));
        if (t < horizon && s != 5) {
          const int a = vi.policy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
          REQUIRE(a >= 0);
          CHECK_FALSE(m.outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].empty());
        }
      }
  }
}

TEST_CASE("value_iteration: adding a constant reward shifts values by a geometric sum") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_mdp(rng, 5, 2, 2, false);
    auto shifted = m;
    const double c = rng.uniform() * 4 - 2;
    for (auto& row : shifted.outcomes)
      for (auto& cell : row)
        for (auto& o : cell) o.reward += c;
    const int horizon = 6;
    const double gamma = 0.8;
    const auto a = value_iteration(m, gamma, horizon);
    const auto b = value_iteration(shifted, gamma, horizon);
    for (int t = 0; t <= horizon; ++t) {
      double geo = 0.0;
      for (int k = 0; k < horizon - t; ++k) geo += std::pow(gamma, k);
      for (int s = 0; s < 5; ++s)
        CHECK(b.values[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] ==
              doctest::Approx(a.values[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] + c * geo)
                  .epsilon(1e-12));
    }
  }
}

TEST_CASE("value_iteration: capacity guard") {
  ExplicitMdp big;
  big.states = 1001;
  big.actions = 1000;
  CHECK_THROWS_AS(value_iteration(big, 0.9, 3), CapacityError);
}

TEST_CASE("rollout: policies on the toy city") {
  const auto& sc = testsupport::toy_city();
  Environment env(sc.env);
  const auto idle = rollout(env, PolicyKind::DoNothing, 3);
  CHECK(idle.steps.size() == 78);
  for (const auto& s : idle.steps) CHECK(s.action == 0);

  QTable table(env.action_count());
  table.at("y00|0000000.0000000", 4) = 1.0;
  const auto g = rollout(env, PolicyKind::Greedy, 3, &table);
  CHECK(g.steps.front().action == 4);
  CHECK(g.steps[1].action == 0);
  CHECK_THROWS_AS(rollout(env, PolicyKind::Greedy, 3), DomainError);

  const auto r = rollout(env, PolicyKind::Random, 11);
  double ret = 0.0, disc = 1.0;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    if (i + 1 < r.steps.size()) CHECK(r.steps[i].next_state == r.steps[i + 1].state);
    ret += disc * r.steps[i].reward;
    disc *= env.discount();
  }
  CHECK(r.total_return == doctest::Approx(ret).epsilon(1e-14));
  CHECK(rollout(env, PolicyKind::Random, 11).total_return == r.total_return);
  CHECK(policy_from_string("do-nothing") == PolicyKind::DoNothing);
  CHECK_THROWS_AS(policy_from_string("clever"), ValidationError);
}

TEST_CASE("qtable and curve text formats") {
  QTable q(3);
  q.at("y01|a", 2) = 0.1 + 0.2;
  q.at("y00|b", 0) = -1e-300;
  q.at("y00|b", 1) = 12345.678;
  const auto text = format_qtable(q);
  CHECK(text.rfind("# adaptsim-qtable v1 actions=3\n", 0) == 0);
  CHECK(text.find("y00|b") < text.find("y01|a"));
  CHECK(parse_qtable(text) == q);
  CHECK(format_qtable(parse_qtable(text)) == text);
  CHECK_THROWS_AS(parse_qtable("nonsense\n"), ParseError);
  CHECK_THROWS_AS(parse_qtable("# adaptsim-qtable v1 actions=3\nk\t1,2\n"), ParseError);

  const auto csv = format_curve_csv({{0, 1.5, 1.0}, {1, -2.0, 0.5}});
  CHECK(csv == "episode,return,epsilon\n0,1.5,1\n1,-2,0.5\n");
}
