#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mcplan/common.hpp"

namespace mcplan {

/// Where the reward-sparsity coin is flipped when generating an MDP:
/// per (state, action) pair, or per (state, action, successor) transition
/// (the latter is collapsed to a per-(s,a) mean so the reward model stays
/// a function of (s,a)).
enum class SparsityGranularity { state_action, transition };

struct GeneratorConfig {
  int32_t num_states = 0;
  int32_t num_actions = 0;
  int32_t branching = 0;
  double reward_sparsity = 0.0;  // fraction of rows with a nonzero mean
  uint64_t seed = 0;
  SparsityGranularity granularity = SparsityGranularity::state_action;

  void validate() const;
};

/// Stationary finite MDP with at most `branching` successors per (s,a).
/// Immutable after construction; safe to share across concurrent runs.
struct TabularMdp {
  int32_t num_states = 0;
  int32_t num_actions = 0;
  int32_t branching = 0;
  // Row-major by (s * num_actions + a).
  std::vector<std::vector<State>> successors;   // sorted, distinct, in [0, S)
  std::vector<std::vector<double>> trans_probs; // each row sums to 1
  std::vector<double> reward_means;             // in [0, 1]
  std::optional<GeneratorConfig> origin;        // config echo when generated

  int row(State s, Action a) const { return s * num_actions + a; }
  void validate() const;  // throws std::invalid_argument on broken invariants
};

/// Draws each (s,a) row's successors uniformly without replacement and its
/// probabilities as consecutive differences of B-1 sorted uniforms augmented
/// with {0,1}. A reward_sparsity fraction of rows gets a uniform(0,1) mean.
/// Bit-reproducible from cfg.seed.
TabularMdp generate_random_mdp(const GeneratorConfig& cfg);

/// Sampling oracle over an MDP: one call = one (next state, reward) draw.
/// Rewards are Bernoulli(r(s,a)). Owns private RNG state; confine each
/// instance to one run.
class ForwardModel {
 public:
  ForwardModel(const TabularMdp& mdp, uint64_t seed)
      : mdp_(&mdp), rng_(seed), seed_(seed) {}

  std::pair<State, double> sample_step(State s, Action a);

  int64_t calls() const { return calls_; }
  uint64_t seed() const { return seed_; }
  const TabularMdp& mdp() const { return *mdp_; }

 private:
  const TabularMdp* mdp_;
  Rng rng_;
  uint64_t seed_;
  int64_t calls_ = 0;
};

/// Optimal finite-horizon values, state values and gaps of an MDP, computed
/// by backward induction. Depths are 1-based (h in [1, H]).
struct ExactValues {
  int horizon = 0;
  double discount = 1.0;
  int32_t num_states = 0;
  int32_t num_actions = 0;
  std::vector<std::vector<double>> q;     // [h-1][s*K+a]
  std::vector<std::vector<double>> v;     // [h-1][s], v = max_a q
  std::vector<std::vector<double>> gaps;  // [h-1][s*K+a], v - q

  double q_value(int h, State s, Action a) const { return q[h - 1][s * num_actions + a]; }
  double state_value(int h, State s) const { return v[h - 1][s]; }
  double gap(int h, State s, Action a) const { return gaps[h - 1][s * num_actions + a]; }
  Action best_action(int h, State s) const;

  /// Minimum gap over suboptimal root actions (0 if the argmax is tied).
  double min_root_gap(State s1) const;
};

ExactValues exact_value_iteration(const TabularMdp& mdp, int horizon, double discount);

/// V*(s1) - Q_1(s1, a_hat), the value lost by recommending a_hat.
double simple_regret(const ExactValues& values, State s1, Action a_hat);

/// H = ceil(log_gamma(eps(1-gamma)/2)), clamped to >= 1. gamma must be in
/// (0,1); for gamma = 1 the horizon has to be supplied explicitly.
int planning_horizon(double eps, double gamma);

void to_json(nlohmann::json& j, const GeneratorConfig& cfg);
void from_json(const nlohmann::json& j, GeneratorConfig& cfg);
void to_json(nlohmann::json& j, const TabularMdp& mdp);
void from_json(const nlohmann::json& j, TabularMdp& mdp);

void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(const std::string& path);

}  // namespace mcplan
