#pragma once

#include <cstdint>
#include <vector>

#include "mcplan/mdp.hpp"
#include "mcplan/run_record.hpp"

namespace mcplan {

/// Fixed-budget planner configuration. The call budget n is split into tau
/// episodes of horizon H, with tau the largest integer such that
/// tau log(tau) / (2 log(1/gamma)) <= n and H = ceil(log(tau)/(2 log(1/gamma)))
/// guarded to H >= 1 (natural logarithms).
struct BudgetConfig {
  int64_t total_calls = 1000;  // n
  double gamma = 0.7;
  double uct_exploration = 1.0;
  uint64_t seed = 0;  // action randomness (BRUE); transition RNG lives in the model

  void validate() const;
};

struct BudgetSplit {
  int64_t episodes;  // tau
  int horizon;       // H
};

BudgetSplit budget_split(int64_t total_calls, double gamma);

/// n_SS = H^5 (BK)^H / eps^2, the fixed-confidence call budget Sparse
/// Sampling needs; returned as a double since it overflows integers fast.
double sparse_sampling_budget(int horizon, int branching, int num_actions, double eps);

struct SparseSamplingResult {
  Action best = 0;
  std::vector<double> root_q;  // \hat{Q}_1(s_1, a)
  int64_t calls = 0;
};

/// Kearns-Mansour-Ng recursive estimator with C transitions per node.
/// Rewards are estimated from the same C samples, so one oracle call per
/// sample (the classic statement assumes known rewards; this keeps the
/// generative interface uniform).
SparseSamplingResult sparse_sampling_plan(ForwardModel& model, State s1, int horizon,
                                          int samples_per_node, double gamma);

/// Exact number of oracle calls the recursive estimator performs:
/// sum_{j=1}^{H} (KC)^j.
double sparse_sampling_call_count(int horizon, int num_actions, int samples_per_node);

/// Open-loop optimistic planning over action sequences with kl reward UCBs
/// at level log(tau)/n; recommends the most-visited depth-1 action.
RunRecord kl_olop_plan(ForwardModel& model, State s1, const BudgetConfig& budget);

/// Uniform-exploration trajectory planner: the switch depth cycles over
/// [H]; actions are uniform down to the switch node, greedy on current
/// estimates below it, and only the switch node's estimate is updated with
/// the observed Monte-Carlo return. Estimates are keyed by (depth, state).
RunRecord brue_plan(ForwardModel& model, State s1, const BudgetConfig& budget);

/// UCB1 at every (depth, state) node on discounted Monte-Carlo returns,
/// unvisited actions first; recommends the most-visited root action.
RunRecord uct_plan(ForwardModel& model, State s1, const BudgetConfig& budget);

/// MDP-GapE run under a fixed budget: thresholds log(tau), a hard cap of
/// tau episodes, eps = 0, recommending the current best arm at exhaustion.
RunRecord gape_fixed_budget_plan(ForwardModel& model, State s1, const BudgetConfig& budget,
                                 double delta);

}  // namespace mcplan
