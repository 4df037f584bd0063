#pragma once

#include <memory>
#include <vector>

#include "mcplan/confidence.hpp"
#include "mcplan/mdp.hpp"
#include "mcplan/run_record.hpp"

namespace mcplan {

struct GapeConfig {
  double eps = 1.0;     // stopping tolerance (0 allowed in fixed-budget mode)
  double delta = 0.1;
  double gamma = 0.7;
  int horizon = 1;      // H
  ThresholdSpec thresholds;
  int64_t max_episodes = 10'000'000;  // safety cap; stop_reason = "budget"
  bool record_diagnostics = false;

  void validate() const;
};

/// UGapE root-rule outcome: candidate best arm b, challenger c, the arm to
/// play next, and the stopping statistic U(c) - L(b).
struct RootDecision {
  Action best = 0;
  Action challenger = 0;
  Action selected = 0;
  double stop_stat = 0.0;
};

struct StateNode;

/// Statistics of one (history prefix, action) node of the search tree:
/// visit count n, reward sum R, per-successor counts, kl reward bounds u/l
/// and value bounds U/L. Fresh nodes hold u=1, l=0, U=sigma_{H-h+1}, L=0.
struct ActionStats {
  int64_t visits = 0;
  double reward_sum = 0.0;
  double reward_ucb = 1.0;  // u
  double reward_lcb = 0.0;  // l
  double upper = 0.0;       // U
  double lower = 0.0;       // L

  struct ChildSlot {
    State state;
    int64_t count = 0;
    std::unique_ptr<StateNode> node;  // null below the horizon
  };
  std::vector<ChildSlot> children;  // observed successors, first-seen order
};

struct StateNode {
  State state = 0;
  int depth = 1;  // actions from this node are taken at step `depth`
  std::vector<ActionStats> actions;
};

/// MDP-GapE: trajectory-based fixed-confidence planner. The tree is keyed by
/// the full history prefix, so an episode update touches only the visited
/// path. One instance = one run; instances over distinct models may run
/// concurrently.
class GapePlanner {
 public:
  GapePlanner(const GapeConfig& cfg, int num_actions, int branching, State root_state);

  /// Folds a finished episode into the tree: increments counts along the
  /// path, then recomputes u/l and U/L bottom-up on the path only.
  void update_bounds(const Trajectory& traj);

  /// UGapE rule over the root actions (Eqs. best/challenger/selected).
  /// Needs at least two actions; ties break to the lowest index.
  RootDecision root_decision() const;

  /// The same rule applied to explicit per-action bound tables.
  static RootDecision root_decision_from_bounds(const std::vector<double>& upper,
                                                const std::vector<double>& lower);

  /// argmax_a U at a prefix node for depths >= 2; unvisited actions carry
  /// U = sigma_{H-h+1}. A null node means a never-visited prefix.
  Action optimistic_action(const StateNode* node, int depth) const;

  /// Plays root_action at depth 1 and the optimistic policy below, sampling
  /// from the model; costs exactly H generative calls.
  Trajectory run_episode(ForwardModel& model, Action root_action) const;

  /// Full loop: decide, stop if U(c)-L(b) <= eps (checked before each
  /// episode on the current bounds), otherwise play and update. Returns the
  /// record with recommended = b at the stopping time.
  RunRecord plan(ForwardModel& model);

  /// The B-slot linear-over-KL-ball problem backing a node's U (or L)
  /// refresh: one slot per observed successor plus, when fewer than B
  /// distinct successors were seen, one aggregated zero-mass slot valued
  /// sigma_{H-h} (upper side) or 0 (lower side). n = 0 yields the whole
  /// simplex (infinite radius).
  KlBallProblem kl_ball_slots(const ActionStats& stats, int depth, bool upper_side) const;

  const StateNode& root() const { return *root_; }
  const GapeConfig& config() const { return cfg_; }
  int num_actions() const { return num_actions_; }
  int branching() const { return branching_; }
  double sigma(int steps) const { return sigma_[steps]; }

  /// Best U (resp. best L) over the actions of a child state node,
  /// the per-slot value entering the parent's ball problem.
  double state_upper(const StateNode& node) const;
  double state_lower(const StateNode& node) const;

 private:
  void refresh(ActionStats& stats, int depth);
  std::unique_ptr<StateNode> make_node(State s, int depth) const;

  GapeConfig cfg_;
  int num_actions_;
  int branching_;
  State root_state_;
  std::vector<double> sigma_;  // sigma_[m] = sum_{i<m} gamma^i
  std::unique_ptr<StateNode> root_;
};

/// Replay verdicts for the concentration event E = E^r ∩ E^p ∩ E^cnt.
struct EventReport {
  int64_t episodes = 0;
  int64_t reward_violations = 0;
  int64_t transition_violations = 0;
  int64_t count_violations = 0;
  bool reward_ok() const { return reward_violations == 0; }
  bool transition_ok() const { return transition_violations == 0; }
  bool count_ok() const { return count_violations == 0; }
  bool event_held() const { return reward_ok() && transition_ok() && count_ok(); }
};

struct TheoremViolation {
  int depth;
  State state;
  Action action;
  double pseudo_count;
  double gap;
  double bound;
};

/// Pseudo-counts and the gap inequality they must satisfy at stopping.
struct PseudoCountReport {
  std::vector<std::vector<double>> nbar;  // [h-1][s*K+a], reach-probability mass
  std::vector<double> depth_totals;       // per depth; equals tau
  int64_t pairs_checked = 0;
  std::vector<TheoremViolation> violations;
  bool inequality_holds() const { return violations.empty(); }
};

/// Replays a recorded run against the ground-truth MDP and reports whether
/// the reward/transition/count concentration events held at every episode.
/// cfg must be the configuration the run was executed with (the replay
/// reproduces its policies and asserts consistency, throwing
/// std::logic_error otherwise). judge_thresholds, when given, re-judges the
/// same data against different event bounds, e.g. a deliberately shrunken
/// spec that should flag violations.
EventReport check_event_E(const TabularMdp& mdp, State root_state, const GapeConfig& cfg,
                          const RunDiagnostics& diagnostics,
                          const ThresholdSpec* judge_thresholds = nullptr);

/// RunRecord overloads; throw std::logic_error when the run was executed
/// without diagnostics enabled.
EventReport check_event_E(const TabularMdp& mdp, State root_state, const GapeConfig& cfg,
                          const RunRecord& record,
                          const ThresholdSpec* judge_thresholds = nullptr);

/// Accumulates per-(h,s,a) pseudo-counts by forward dynamic programming of
/// each episode's policy through the true kernel, and checks the
/// gap-vs-pseudo-count inequality (with the master threshold and the
/// tolerance-floored root gaps) at every visited pair with a positive gap.
PseudoCountReport track_pseudo_counts(const TabularMdp& mdp, State root_state,
                                      const GapeConfig& cfg, const RunDiagnostics& diagnostics,
                                      const ExactValues& values);

PseudoCountReport track_pseudo_counts(const TabularMdp& mdp, State root_state,
                                      const GapeConfig& cfg, const RunRecord& record,
                                      const ExactValues& values);

void to_json(nlohmann::json& j, const ThresholdSpec& t);
void from_json(const nlohmann::json& j, ThresholdSpec& t);
void to_json(nlohmann::json& j, const GapeConfig& c);
void from_json(const nlohmann::json& j, GapeConfig& c);

}  // namespace mcplan
