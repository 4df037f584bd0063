#include "mcplan/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_map>

#include "mcplan/confidence.hpp"
#include "mcplan/gape.hpp"

namespace mcplan {

void BudgetConfig::validate() const {
  if (total_calls < 1) throw std::invalid_argument("BudgetConfig: total_calls must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("BudgetConfig: gamma must be in (0,1)");
  if (!(uct_exploration >= 0.0))
    throw std::invalid_argument("BudgetConfig: uct_exploration must be >= 0");
}

BudgetSplit budget_split(int64_t total_calls, double gamma) {
  if (total_calls < 1) throw std::invalid_argument("budget_split: total_calls must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("budget_split: gamma must be in (0,1)");
  const double denom = 2.0 * std::log(1.0 / gamma);
  const auto fits = [&](int64_t tau) {
    return double(tau) * std::log(double(tau)) / denom <= double(total_calls);
  };
  int64_t lo = 1, hi = 2;
  while (fits(hi)) {
    lo = hi;
    hi *= 2;
  }
  while (lo + 1 < hi) {  // largest tau with fits(tau)
    const int64_t mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  const int64_t tau = lo;
  const int horizon = std::max(1, int(std::ceil(std::log(double(tau)) / denom)));
  return {tau, horizon};
}

double sparse_sampling_budget(int horizon, int branching, int num_actions, double eps) {
  return std::pow(double(horizon), 5.0) *
         std::pow(double(branching) * num_actions, double(horizon)) / (eps * eps);
}

double sparse_sampling_call_count(int horizon, int num_actions, int samples_per_node) {
  double total = 0.0, term = 1.0;
  for (int j = 1; j <= horizon; ++j) {
    term *= double(num_actions) * samples_per_node;
    total += term;
  }
  return total;
}

namespace {

struct SparseSampler {
  ForwardModel& model;
  int horizon;
  int samples;
  double gamma;

  double value(State s, int h) {
    if (h > horizon) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < model.mdp().num_actions; ++a) best = std::max(best, q_value(s, a, h));
    return best;
  }

  double q_value(State s, Action a, int h) {
    double reward_sum = 0.0, next_sum = 0.0;
    for (int i = 0; i < samples; ++i) {
      auto [z, r] = model.sample_step(s, a);
      reward_sum += r;
      next_sum += value(z, h + 1);
    }
    return reward_sum / samples + gamma * next_sum / samples;
  }
};

}  // namespace

SparseSamplingResult sparse_sampling_plan(ForwardModel& model, State s1, int horizon,
                                          int samples_per_node, double gamma) {
  if (horizon < 1 || samples_per_node < 1)
    throw std::invalid_argument("sparse_sampling_plan: horizon and samples must be >= 1");
  const int64_t before = model.calls();
  SparseSampler sampler{model, horizon, samples_per_node, gamma};
  SparseSamplingResult result;
  result.root_q.resize(model.mdp().num_actions);
  for (Action a = 0; a < model.mdp().num_actions; ++a)
    result.root_q[a] = sampler.q_value(s1, a, 1);
  result.best = 0;
  for (Action a = 1; a < model.mdp().num_actions; ++a)
    if (result.root_q[a] > result.root_q[result.best]) result.best = a;
  result.calls = model.calls() - before;
  return result;
}

namespace {

// Open-loop node: statistics of one action-sequence prefix.
struct OlopNode {
  int64_t visits = 0;
  double reward_sum = 0.0;
  double reward_ucb = 1.0;
  double subtree_value = 0.0;  // gamma^{d-1} u + best child subtree value
  std::vector<std::unique_ptr<OlopNode>> children;
};

nlohmann::json budget_echo(const BudgetConfig& b, const BudgetSplit& split) {
  return {{"total_calls", b.total_calls}, {"gamma", b.gamma},      {"tau", split.episodes},
          {"horizon", split.horizon},     {"seed", b.seed},        {"uct_exploration", b.uct_exploration}};
}

// Monte-Carlo estimates keyed by (depth, state).
struct DepthStateTable {
  struct Node {
    int64_t total = 0;
    std::vector<int64_t> count;
    std::vector<double> mean;
  };
  int num_actions;
  std::vector<std::unordered_map<State, Node>> levels;

  DepthStateTable(int horizon, int K) : num_actions(K), levels(horizon) {}

  Node& at(int depth, State s) {
    Node& node = levels[depth - 1][s];
    if (node.count.empty()) {
      node.count.assign(num_actions, 0);
      node.mean.assign(num_actions, 0.0);
    }
    return node;
  }
  const Node* find(int depth, State s) const {
    auto it = levels[depth - 1].find(s);
    return it == levels[depth - 1].end() ? nullptr : &it->second;
  }
};

Action greedy_action(const DepthStateTable::Node* node) {
  if (!node) return 0;
  Action best = 0;
  for (Action a = 1; a < Action(node->mean.size()); ++a)
    if (node->mean[a] > node->mean[best]) best = a;
  return best;
}

}  // namespace

RunRecord kl_olop_plan(ForwardModel& model, State s1, const BudgetConfig& budget) {
  budget.validate();
  const auto [tau, horizon] = budget_split(budget.total_calls, budget.gamma);
  const int K = model.mdp().num_actions;
  const double level_num = std::log(double(tau));  // beta = log(tau)

  // gamma^{d-1} * sigma_{H-d+1}: optimistic value of an unexplored suffix
  // starting at depth d.
  std::vector<double> opt_suffix(horizon + 2, 0.0);
  for (int d = horizon; d >= 1; --d)
    opt_suffix[d] = std::pow(budget.gamma, d - 1) * discount_cap(horizon - d + 1, budget.gamma);

  OlopNode root;
  std::vector<OlopNode*> path(horizon);
  std::vector<Action> actions(horizon);

  for (int64_t t = 0; t < tau; ++t) {
    // Optimistic descent over the sequence tree.
    OlopNode* node = &root;
    for (int d = 1; d <= horizon; ++d) {
      if (node->children.empty()) node->children.resize(K);
      Action best = 0;
      double best_value = -std::numeric_limits<double>::infinity();
      for (Action a = 0; a < K; ++a) {
        const OlopNode* child = node->children[a].get();
        const double value = child ? child->subtree_value : opt_suffix[d];
        if (value > best_value) {
          best_value = value;
          best = a;
        }
      }
      if (!node->children[best]) node->children[best] = std::make_unique<OlopNode>();
      node = node->children[best].get();
      path[d - 1] = node;
      actions[d - 1] = best;
    }
    // Play the sequence; states are observed but not used (open loop).
    State s = s1;
    for (int d = 1; d <= horizon; ++d) {
      auto [next, reward] = model.sample_step(s, actions[d - 1]);
      path[d - 1]->visits += 1;
      path[d - 1]->reward_sum += reward;
      s = next;
    }
    // Refresh bounds bottom-up along the path.
    for (int d = horizon; d >= 1; --d) {
      OlopNode* n = path[d - 1];
      n->reward_ucb = kl_ucb_upper(n->reward_sum / n->visits, level_num / n->visits);
      double best_child = d < horizon ? opt_suffix[d + 1] : 0.0;
      if (d < horizon)
        for (Action a = 0; a < K; ++a)
          if (n->children.size() > size_t(a) && n->children[a])
            best_child = std::max(best_child, n->children[a]->subtree_value);
      n->subtree_value = std::pow(budget.gamma, d - 1) * n->reward_ucb + best_child;
    }
  }

  RunRecord rec;
  rec.algorithm = "kl_olop";
  rec.tau = tau;
  rec.oracle_calls = tau * horizon;
  rec.stop_reason = "budget";
  rec.config_echo = budget_echo(budget, {tau, horizon});
  rec.recommended = 0;
  int64_t most = -1;
  for (Action a = 0; a < K; ++a) {
    const int64_t v = root.children.size() > size_t(a) && root.children[a]
                          ? root.children[a]->visits
                          : 0;
    if (v > most) {
      most = v;
      rec.recommended = a;
    }
  }
  return rec;
}

RunRecord brue_plan(ForwardModel& model, State s1, const BudgetConfig& budget) {
  budget.validate();
  const auto [tau, horizon] = budget_split(budget.total_calls, budget.gamma);
  const int K = model.mdp().num_actions;
  Rng actions_rng(budget.seed);
  DepthStateTable table(horizon, K);

  std::vector<State> states(horizon);
  std::vector<Action> played(horizon);
  std::vector<double> rewards(horizon);

  for (int64_t t = 1; t <= tau; ++t) {
    const int switch_depth = horizon - int((t - 1) % horizon);  // H, H-1, ..., 1
    State s = s1;
    for (int h = 1; h <= horizon; ++h) {
      Action a;
      if (h <= switch_depth)
        a = Action(actions_rng.below(K));
      else
        a = greedy_action(table.find(h, s));
      auto [next, reward] = model.sample_step(s, a);
      states[h - 1] = s;
      played[h - 1] = a;
      rewards[h - 1] = reward;
      s = next;
    }
    // Only the switch node's estimate absorbs the observed return.
    double ret = 0.0;
    for (int h = horizon; h >= switch_depth; --h) ret = rewards[h - 1] + budget.gamma * ret;
    auto& node = table.at(switch_depth, states[switch_depth - 1]);
    const Action a = played[switch_depth - 1];
    node.count[a] += 1;
    node.mean[a] += (ret - node.mean[a]) / node.count[a];
  }

  RunRecord rec;
  rec.algorithm = "brue";
  rec.tau = tau;
  rec.oracle_calls = tau * horizon;
  rec.stop_reason = "budget";
  rec.config_echo = budget_echo(budget, {tau, horizon});
  rec.recommended = greedy_action(table.find(1, s1));
  return rec;
}

RunRecord uct_plan(ForwardModel& model, State s1, const BudgetConfig& budget) {
  budget.validate();
  const auto [tau, horizon] = budget_split(budget.total_calls, budget.gamma);
  const int K = model.mdp().num_actions;
  DepthStateTable table(horizon, K);

  std::vector<State> states(horizon);
  std::vector<Action> played(horizon);
  std::vector<double> rewards(horizon);

  for (int64_t t = 0; t < tau; ++t) {
    State s = s1;
    for (int h = 1; h <= horizon; ++h) {
      auto& node = table.at(h, s);
      Action a = -1;
      for (Action cand = 0; cand < K; ++cand)
        if (node.count[cand] == 0) {
          a = cand;
          break;
        }
      if (a < 0) {
        double best = -std::numeric_limits<double>::infinity();
        for (Action cand = 0; cand < K; ++cand) {
          const double ucb = node.mean[cand] +
                             budget.uct_exploration *
                                 std::sqrt(2.0 * std::log(double(node.total)) / node.count[cand]);
          if (ucb > best) {
            best = ucb;
            a = cand;
          }
        }
      }
      auto [next, reward] = model.sample_step(s, a);
      states[h - 1] = s;
      played[h - 1] = a;
      rewards[h - 1] = reward;
      s = next;
    }
    double ret = 0.0;
    for (int h = horizon; h >= 1; --h) {
      ret = rewards[h - 1] + budget.gamma * ret;
      auto& node = table.at(h, states[h - 1]);
      node.total += 1;
      node.count[played[h - 1]] += 1;
      node.mean[played[h - 1]] += (ret - node.mean[played[h - 1]]) / node.count[played[h - 1]];
    }
  }

  RunRecord rec;
  rec.algorithm = "uct";
  rec.tau = tau;
  rec.oracle_calls = tau * horizon;
  rec.stop_reason = "budget";
  rec.config_echo = budget_echo(budget, {tau, horizon});
  rec.recommended = 0;
  const auto* root = table.find(1, s1);
  if (root) {
    int64_t most = -1;
    for (Action a = 0; a < K; ++a)
      if (root->count[a] > most) {
        most = root->count[a];
        rec.recommended = a;
      }
  }
  return rec;
}

RunRecord gape_fixed_budget_plan(ForwardModel& model, State s1, const BudgetConfig& budget,
                                 double delta) {
  budget.validate();
  const auto [tau, horizon] = budget_split(budget.total_calls, budget.gamma);
  GapeConfig cfg;
  cfg.eps = 0.0;
  cfg.delta = delta;
  cfg.gamma = budget.gamma;
  cfg.horizon = horizon;
  cfg.max_episodes = tau;
  cfg.thresholds.kind = ThresholdKind::fixed_budget;
  cfg.thresholds.delta = delta;
  cfg.thresholds.horizon = horizon;
  cfg.thresholds.branching = model.mdp().branching;
  cfg.thresholds.num_actions = model.mdp().num_actions;
  cfg.thresholds.budget_episodes = double(tau);

  GapePlanner planner(cfg, model.mdp().num_actions, model.mdp().branching, s1);
  RunRecord rec = planner.plan(model);
  rec.config_echo["budget"] = budget_echo(budget, {tau, horizon});
  return rec;
}

}  // namespace mcplan
