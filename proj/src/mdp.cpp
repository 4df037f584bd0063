#include "mcplan/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mcplan {

namespace {
constexpr double kRowSumTol = 1e-12;
}

void GeneratorConfig::validate() const {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("GeneratorConfig: need at least one state and action");
  if (branching < 1 || branching > num_states)
    throw std::invalid_argument("GeneratorConfig: branching must be in [1, num_states]");
  if (!(reward_sparsity >= 0.0 && reward_sparsity <= 1.0))
    throw std::invalid_argument("GeneratorConfig: reward_sparsity must be in [0,1]");
}

void TabularMdp::validate() const {
  const size_t rows = static_cast<size_t>(num_states) * num_actions;
  if (successors.size() != rows || trans_probs.size() != rows || reward_means.size() != rows)
    throw std::invalid_argument("TabularMdp: table sizes do not match S*K");
  for (size_t i = 0; i < rows; ++i) {
    const auto& succ = successors[i];
    const auto& probs = trans_probs[i];
    if (succ.empty() || succ.size() > static_cast<size_t>(branching))
      throw std::invalid_argument("TabularMdp: successor list size must be in [1, B]");
    if (succ.size() != probs.size())
      throw std::invalid_argument("TabularMdp: successor/probability shape mismatch");
    double sum = 0.0;
    for (size_t k = 0; k < succ.size(); ++k) {
      if (succ[k] < 0 || succ[k] >= num_states)
        throw std::invalid_argument("TabularMdp: successor out of range");
      if (k > 0 && succ[k] <= succ[k - 1])
        throw std::invalid_argument("TabularMdp: successors must be sorted and distinct");
      if (probs[k] < 0.0) throw std::invalid_argument("TabularMdp: negative probability");
      sum += probs[k];
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::invalid_argument("TabularMdp: row does not sum to 1");
    if (reward_means[i] < 0.0 || reward_means[i] > 1.0)
      throw std::invalid_argument("TabularMdp: reward mean outside [0,1]");
  }
}

TabularMdp generate_random_mdp(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int S = cfg.num_states, K = cfg.num_actions, B = cfg.branching;

  TabularMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = K;
  mdp.branching = B;
  mdp.origin = cfg;
  const size_t rows = static_cast<size_t>(S) * K;
  mdp.successors.resize(rows);
  mdp.trans_probs.resize(rows);
  mdp.reward_means.assign(rows, 0.0);

  std::vector<State> pool(S);
  std::vector<double> cuts(B + 1);
  for (size_t i = 0; i < rows; ++i) {
    // B distinct successors via partial Fisher-Yates, then a canonical order.
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < B; ++k) {
      const int64_t j = k + rng.below(S - k);
      std::swap(pool[k], pool[j]);
    }
    std::vector<State> succ(pool.begin(), pool.begin() + B);
    std::sort(succ.begin(), succ.end());

    // Probabilities: consecutive differences of B-1 sorted uniforms in (0,1)
    // augmented with {0, 1}.
    cuts[0] = 0.0;
    for (int k = 1; k < B; ++k) cuts[k] = rng.uniform();
    cuts[B] = 1.0;
    std::sort(cuts.begin() + 1, cuts.begin() + B);
    std::vector<double> probs(B);
    for (int k = 0; k < B; ++k) probs[k] = cuts[k + 1] - cuts[k];

    double mean = 0.0;
    switch (cfg.granularity) {
      case SparsityGranularity::state_action:
        if (rng.uniform() < cfg.reward_sparsity) mean = rng.uniform();
        break;
      case SparsityGranularity::transition:
        // Coin per (s,a,s') edge; the selected edges' uniform means collapse
        // to an expected per-(s,a) mean so the reward model stays r(s,a).
        for (int k = 0; k < B; ++k)
          if (rng.uniform() < cfg.reward_sparsity) mean += probs[k] * rng.uniform();
        break;
    }

    mdp.successors[i] = std::move(succ);
    mdp.trans_probs[i] = std::move(probs);
    mdp.reward_means[i] = mean;
  }
  return mdp;
}

std::pair<State, double> ForwardModel::sample_step(State s, Action a) {
  if (s < 0 || s >= mdp_->num_states || a < 0 || a >= mdp_->num_actions)
    throw std::domain_error("ForwardModel::sample_step: state or action out of range");
  const int r = mdp_->row(s, a);
  const auto& succ = mdp_->successors[r];
  const auto& probs = mdp_->trans_probs[r];

  State next = succ.back();
  const double u = rng_.uniform();
  double cum = 0.0;
  for (size_t k = 0; k < succ.size(); ++k) {
    cum += probs[k];
    if (u < cum) {
      next = succ[k];
      break;
    }
  }
  const double reward = rng_.bernoulli(mdp_->reward_means[r]) ? 1.0 : 0.0;
  ++calls_;
  return {next, reward};
}

Action ExactValues::best_action(int h, State s) const {
  Action best = 0;
  for (Action a = 1; a < num_actions; ++a)
    if (q[h - 1][s * num_actions + a] > q[h - 1][s * num_actions + best]) best = a;
  return best;
}

double ExactValues::min_root_gap(State s1) const {
  const Action star = best_action(1, s1);
  double delta = std::numeric_limits<double>::infinity();
  for (Action a = 0; a < num_actions; ++a) {
    if (a == star) continue;
    delta = std::min(delta, gap(1, s1, a));
  }
  return num_actions > 1 ? delta : 0.0;
}

ExactValues exact_value_iteration(const TabularMdp& mdp, int horizon, double discount) {
  if (horizon < 1) throw std::invalid_argument("exact_value_iteration: horizon must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0))
    throw std::invalid_argument("exact_value_iteration: discount must be in (0,1]");
  const int S = mdp.num_states, K = mdp.num_actions;

  ExactValues ev;
  ev.horizon = horizon;
  ev.discount = discount;
  ev.num_states = S;
  ev.num_actions = K;
  ev.q.assign(horizon, std::vector<double>(static_cast<size_t>(S) * K, 0.0));
  ev.v.assign(horizon, std::vector<double>(S, 0.0));
  ev.gaps.assign(horizon, std::vector<double>(static_cast<size_t>(S) * K, 0.0));

  // Q_{H+1} = 0; backward induction down to h = 1.
  for (int h = horizon; h >= 1; --h) {
    for (State s = 0; s < S; ++s) {
      for (Action a = 0; a < K; ++a) {
        const int r = mdp.row(s, a);
        double value = mdp.reward_means[r];
        if (h < horizon) {
          double cont = 0.0;
          for (size_t k = 0; k < mdp.successors[r].size(); ++k)
            cont += mdp.trans_probs[r][k] * ev.v[h][mdp.successors[r][k]];
          value += discount * cont;
        }
        ev.q[h - 1][r] = value;
      }
      double best = ev.q[h - 1][s * K];
      for (Action a = 1; a < K; ++a) best = std::max(best, ev.q[h - 1][s * K + a]);
      ev.v[h - 1][s] = best;
      for (Action a = 0; a < K; ++a) ev.gaps[h - 1][s * K + a] = best - ev.q[h - 1][s * K + a];
    }
  }
  return ev;
}

double simple_regret(const ExactValues& values, State s1, Action a_hat) {
  return values.state_value(1, s1) - values.q_value(1, s1, a_hat);
}

int planning_horizon(double eps, double gamma) {
  if (!(eps > 0.0)) throw std::invalid_argument("planning_horizon: eps must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument(
        "planning_horizon: gamma must be in (0,1); supply the horizon explicitly when gamma=1");
  const double h = std::log(eps * (1.0 - gamma) / 2.0) / std::log(gamma);
  return std::max(1, static_cast<int>(std::ceil(h)));
}

void to_json(nlohmann::json& j, const GeneratorConfig& cfg) {
  j = {{"num_states", cfg.num_states},
       {"num_actions", cfg.num_actions},
       {"branching", cfg.branching},
       {"reward_sparsity", cfg.reward_sparsity},
       {"seed", cfg.seed},
       {"granularity",
        cfg.granularity == SparsityGranularity::state_action ? "state_action" : "transition"}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& cfg) {
  j.at("num_states").get_to(cfg.num_states);
  j.at("num_actions").get_to(cfg.num_actions);
  j.at("branching").get_to(cfg.branching);
  j.at("reward_sparsity").get_to(cfg.reward_sparsity);
  j.at("seed").get_to(cfg.seed);
  const std::string g = j.value("granularity", "state_action");
  cfg.granularity =
      g == "transition" ? SparsityGranularity::transition : SparsityGranularity::state_action;
}

void to_json(nlohmann::json& j, const TabularMdp& mdp) {
  j = {{"num_states", mdp.num_states},
       {"num_actions", mdp.num_actions},
       {"branching", mdp.branching},
       {"successors", mdp.successors},
       {"trans_probs", mdp.trans_probs},
       {"reward_means", mdp.reward_means}};
  if (mdp.origin) j["generator_config"] = *mdp.origin;
}

void from_json(const nlohmann::json& j, TabularMdp& mdp) {
  j.at("num_states").get_to(mdp.num_states);
  j.at("num_actions").get_to(mdp.num_actions);
  j.at("branching").get_to(mdp.branching);
  j.at("successors").get_to(mdp.successors);
  j.at("trans_probs").get_to(mdp.trans_probs);
  j.at("reward_means").get_to(mdp.reward_means);
  if (j.contains("generator_config")) mdp.origin = j["generator_config"].get<GeneratorConfig>();
  mdp.validate();
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  nlohmann::json j = mdp;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mdp: cannot open " + path);
  out << j.dump(2) << "\n";
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mdp: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j.get<TabularMdp>();
}

}  // namespace mcplan
