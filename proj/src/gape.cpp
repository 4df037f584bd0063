#include "mcplan/gape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEventTol = 1e-9;
// 64 sqrt(2) (1 + sqrt(2)), the constant of the gap/pseudo-count inequality.
const double kTheoremConst = 64.0 * std::sqrt(2.0) * (1.0 + std::sqrt(2.0));
}  // namespace

void GapeConfig::validate() const {
  if (!(eps >= 0.0)) throw std::invalid_argument("GapeConfig: eps must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("GapeConfig: delta must be in (0,1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("GapeConfig: gamma must be in (0,1]");
  if (horizon < 1) throw std::invalid_argument("GapeConfig: horizon must be >= 1");
  if (max_episodes < 0) throw std::invalid_argument("GapeConfig: max_episodes must be >= 0");
  thresholds.validate();
}

GapePlanner::GapePlanner(const GapeConfig& cfg, int num_actions, int branching, State root_state)
    : cfg_(cfg), num_actions_(num_actions), branching_(branching), root_state_(root_state) {
  cfg_.validate();
  if (num_actions_ < 1 || branching_ < 1)
    throw std::invalid_argument("GapePlanner: num_actions and branching must be >= 1");
  sigma_.resize(cfg_.horizon + 1);
  for (int m = 0; m <= cfg_.horizon; ++m) sigma_[m] = discount_cap(m, cfg_.gamma);
  root_ = make_node(root_state_, 1);
}

std::unique_ptr<StateNode> GapePlanner::make_node(State s, int depth) const {
  auto node = std::make_unique<StateNode>();
  node->state = s;
  node->depth = depth;
  node->actions.resize(num_actions_);
  const double cap = sigma_[cfg_.horizon - depth + 1];
  for (ActionStats& a : node->actions) a.upper = cap;
  return node;
}

double GapePlanner::state_upper(const StateNode& node) const {
  double best = node.actions[0].upper;
  for (size_t a = 1; a < node.actions.size(); ++a) best = std::max(best, node.actions[a].upper);
  return best;
}

double GapePlanner::state_lower(const StateNode& node) const {
  double best = node.actions[0].lower;
  for (size_t a = 1; a < node.actions.size(); ++a) best = std::max(best, node.actions[a].lower);
  return best;
}

KlBallProblem GapePlanner::kl_ball_slots(const ActionStats& stats, int depth, bool upper_side) const {
  if (stats.children.size() > static_cast<size_t>(branching_))
    throw std::logic_error("kl_ball_slots: more than B distinct successors observed");
  const double tail = sigma_[cfg_.horizon - depth];  // sigma_{H-h}
  const double pad_value = upper_side ? tail : 0.0;

  KlBallProblem pb;
  if (stats.visits == 0) {
    // No data: the confidence set is the whole simplex over B slots, whose
    // optimum sits on the best slot; a single padded slot represents it.
    pb.radius = kInf;
    pb.p_hat = {1.0};
    pb.values = {pad_value};
    return pb;
  }
  pb.radius = cfg_.thresholds.transition(static_cast<double>(stats.visits)) / stats.visits;
  pb.p_hat.reserve(stats.children.size() + 1);
  pb.values.reserve(stats.children.size() + 1);
  for (const auto& child : stats.children) {
    pb.p_hat.push_back(static_cast<double>(child.count) / stats.visits);
    if (child.node)
      pb.values.push_back(upper_side ? state_upper(*child.node) : state_lower(*child.node));
    else
      pb.values.push_back(pad_value);  // horizon children carry zero continuation
  }
  if (stats.children.size() < static_cast<size_t>(branching_)) {
    // Unobserved successors are aggregated in one zero-mass slot, optimistic
    // on the U side and pessimistic on the L side, keeping U/L outer bounds.
    pb.p_hat.push_back(0.0);
    pb.values.push_back(pad_value);
  }
  return pb;
}

void GapePlanner::refresh(ActionStats& stats, int depth) {
  if (stats.visits == 0) {
    stats.reward_ucb = 1.0;
    stats.reward_lcb = 0.0;
    stats.upper = sigma_[cfg_.horizon - depth + 1];
    stats.lower = 0.0;
    return;
  }
  const double n = static_cast<double>(stats.visits);
  const double r_hat = stats.reward_sum / n;
  const double level = cfg_.thresholds.reward(n) / n;
  stats.reward_ucb = kl_ucb_upper(r_hat, level);
  stats.reward_lcb = kl_ucb_lower(r_hat, level);
  if (depth == cfg_.horizon) {
    // Children are the all-zero H+1 layer.
    stats.upper = stats.reward_ucb;
    stats.lower = stats.reward_lcb;
    return;
  }
  stats.upper =
      stats.reward_ucb + cfg_.gamma * max_over_kl_ball(kl_ball_slots(stats, depth, true)).value;
  stats.lower =
      stats.reward_lcb + cfg_.gamma * min_over_kl_ball(kl_ball_slots(stats, depth, false)).value;
}

void GapePlanner::update_bounds(const Trajectory& traj) {
  const int H = cfg_.horizon;
  if (static_cast<int>(traj.steps.size()) != H)
    throw std::invalid_argument("update_bounds: trajectory length must equal the horizon");
  if (traj.steps[0].state != root_state_)
    throw std::invalid_argument("update_bounds: trajectory does not start at the root state");

  struct PathEntry {
    ActionStats* stats;
    int depth;
  };
  std::vector<PathEntry> path;
  path.reserve(H);

  StateNode* node = root_.get();
  for (int h = 1; h <= H; ++h) {
    const EpisodeStep& step = traj.steps[h - 1];
    if (step.action < 0 || step.action >= num_actions_)
      throw std::invalid_argument("update_bounds: action out of range");
    ActionStats& stats = node->actions[step.action];
    ++stats.visits;
    stats.reward_sum += step.reward;

    const State next = h < H ? traj.steps[h].state : traj.terminal_state;
    ActionStats::ChildSlot* slot = nullptr;
    for (auto& c : stats.children)
      if (c.state == next) {
        slot = &c;
        break;
      }
    if (!slot) {
      if (stats.children.size() >= static_cast<size_t>(branching_))
        throw std::logic_error("update_bounds: more than B distinct successors observed");
      stats.children.push_back({next, 0, nullptr});
      slot = &stats.children.back();
    }
    ++slot->count;
    if (h < H) {
      if (!slot->node) slot->node = make_node(next, h + 1);
      node = slot->node.get();
    }
    path.push_back({&stats, h});
  }
  // Bottom-up so each refresh sees up-to-date child values; everything off
  // the visited path keeps its cached bounds untouched.
  for (int i = H - 1; i >= 0; --i) refresh(*path[i].stats, path[i].depth);
}

RootDecision GapePlanner::root_decision_from_bounds(const std::vector<double>& upper,
                                                    const std::vector<double>& lower) {
  const int K = static_cast<int>(upper.size());
  if (K < 2 || lower.size() != upper.size())
    throw std::logic_error("root_decision: needs at least two root actions");

  RootDecision dec;
  double best_score = kInf;
  for (Action b = 0; b < K; ++b) {
    double max_other = -kInf;
    for (Action a = 0; a < K; ++a)
      if (a != b) max_other = std::max(max_other, upper[a]);
    const double score = max_other - lower[b];
    if (score < best_score) {
      best_score = score;
      dec.best = b;
    }
  }
  dec.challenger = dec.best == 0 ? 1 : 0;
  for (Action c = 0; c < K; ++c)
    if (c != dec.best && upper[c] > upper[dec.challenger]) dec.challenger = c;

  const double diam_b = upper[dec.best] - lower[dec.best];
  const double diam_c = upper[dec.challenger] - lower[dec.challenger];
  if (diam_b == diam_c)
    dec.selected = std::min(dec.best, dec.challenger);
  else
    dec.selected = diam_c > diam_b ? dec.challenger : dec.best;
  dec.stop_stat = upper[dec.challenger] - lower[dec.best];
  return dec;
}

RootDecision GapePlanner::root_decision() const {
  std::vector<double> upper(num_actions_), lower(num_actions_);
  for (Action a = 0; a < num_actions_; ++a) {
    upper[a] = root_->actions[a].upper;
    lower[a] = root_->actions[a].lower;
  }
  return root_decision_from_bounds(upper, lower);
}

Action GapePlanner::optimistic_action(const StateNode* node, int /*depth*/) const {
  if (!node) return 0;  // fresh prefix: every action ties at sigma
  Action best = 0;
  for (Action a = 1; a < num_actions_; ++a)
    if (node->actions[a].upper > node->actions[best].upper) best = a;
  return best;
}

Trajectory GapePlanner::run_episode(ForwardModel& model, Action root_action) const {
  const int H = cfg_.horizon;
  Trajectory traj;
  traj.steps.reserve(H);
  const StateNode* node = root_.get();
  State s = root_state_;
  for (int h = 1; h <= H; ++h) {
    const Action a = h == 1 ? root_action : optimistic_action(node, h);
    auto [next, reward] = model.sample_step(s, a);
    traj.steps.push_back({s, a, reward});
    if (h < H) {
      const StateNode* child = nullptr;
      if (node)
        for (const auto& c : node->actions[a].children)
          if (c.state == next) {
            child = c.node.get();
            break;
          }
      node = child;
    }
    s = next;
  }
  traj.terminal_state = s;
  return traj;
}

RunRecord GapePlanner::plan(ForwardModel& model) {
  RunRecord rec;
  rec.algorithm = "gape";
  rec.config_echo = cfg_;

  if (num_actions_ == 1) {
    rec.recommended = 0;
    rec.stop_reason = "single_action";
    if (cfg_.record_diagnostics) rec.diagnostics = RunDiagnostics{};
    return rec;
  }

  RunDiagnostics diag;
  int64_t t = 0;
  RootDecision dec;
  for (;;) {
    dec = root_decision();
    if (dec.stop_stat <= cfg_.eps) {
      rec.stop_reason = "converged";
      break;
    }
    if (t >= cfg_.max_episodes) {
      rec.stop_reason = "budget";
      break;
    }
    Trajectory traj = run_episode(model, dec.selected);
    update_bounds(traj);
    if (cfg_.record_diagnostics) diag.episodes.push_back(std::move(traj));
    ++t;
  }
  rec.recommended = dec.best;
  rec.tau = t;
  rec.oracle_calls = t * cfg_.horizon;
  if (cfg_.record_diagnostics) rec.diagnostics = std::move(diag);
  return rec;
}

namespace {

struct ReplayAccumulator {
  EventReport events;
  std::vector<std::vector<double>> nbar;    // [h-1][s*K+a]
  std::vector<std::vector<int64_t>> counts; // [h-1][s*K+a]
};

void replay_run(const TabularMdp& mdp, State root_state, const GapeConfig& cfg,
                const RunDiagnostics& diag, const ThresholdSpec* judge,
                ReplayAccumulator& acc) {
  const int H = cfg.horizon;
  const int K = mdp.num_actions;
  const int S = mdp.num_states;
  GapeConfig replay_cfg = cfg;
  replay_cfg.record_diagnostics = false;
  GapePlanner planner(replay_cfg, K, mdp.branching, root_state);
  // The tree and its policies always follow the run's own thresholds; the
  // judged inequalities may use a different spec.
  const ThresholdSpec& event_thr = judge ? *judge : cfg.thresholds;

  acc.nbar.assign(H, std::vector<double>(static_cast<size_t>(S) * K, 0.0));
  acc.counts.assign(H, std::vector<int64_t>(static_cast<size_t>(S) * K, 0));
  const double beta_cnt = event_thr.count();

  struct Reach {
    const StateNode* node;
    State state;
    double prob;
  };
  std::vector<Reach> frontier, next_frontier;
  std::vector<std::pair<int, int>> touched;

  for (const Trajectory& traj : diag.episodes) {
    ++acc.events.episodes;
    if (static_cast<int>(traj.steps.size()) != H)
      throw std::logic_error("replay: trajectory length does not match the horizon");

    // Reach probabilities of this episode's policy through the true kernel,
    // evaluated on the tree as it stood before the episode.
    Action selected = 0;
    if (K >= 2) selected = planner.root_decision().selected;
    if (traj.steps[0].state != root_state || traj.steps[0].action != selected)
      throw std::logic_error("replay: diagnostics inconsistent with the configuration");

    touched.clear();
    frontier.assign(1, {&planner.root(), root_state, 1.0});
    for (int h = 1; h <= H; ++h) {
      next_frontier.clear();
      for (const Reach& rc : frontier) {
        const Action a = h == 1 ? selected : planner.optimistic_action(rc.node, h);
        const int idx = rc.state * K + a;
        acc.nbar[h - 1][idx] += rc.prob;
        touched.emplace_back(h - 1, idx);
        if (h == H) continue;
        const int row = mdp.row(rc.state, a);
        for (size_t k = 0; k < mdp.successors[row].size(); ++k) {
          const double p = mdp.trans_probs[row][k];
          if (p == 0.0) continue;
          const State ns = mdp.successors[row][k];
          const StateNode* child = nullptr;
          if (rc.node)
            for (const auto& c : rc.node->actions[a].children)
              if (c.state == ns) {
                child = c.node.get();
                break;
              }
          next_frontier.push_back({child, ns, rc.prob * p});
        }
      }
      std::swap(frontier, next_frontier);
    }

    planner.update_bounds(traj);
    for (int h = 1; h <= H; ++h)
      ++acc.counts[h - 1][traj.steps[h - 1].state * K + traj.steps[h - 1].action];

    // Reward / transition events on the refreshed path nodes.
    const StateNode* node = &planner.root();
    for (int h = 1; h <= H && node; ++h) {
      const EpisodeStep& step = traj.steps[h - 1];
      const ActionStats& stats = node->actions[step.action];
      const int row = mdp.row(step.state, step.action);
      const double n = static_cast<double>(stats.visits);
      const double r_hat = stats.reward_sum / n;
      if (n * kl_bernoulli(r_hat, mdp.reward_means[row]) > event_thr.reward(n) + kEventTol)
        ++acc.events.reward_violations;

      double kl = 0.0;
      for (const auto& child : stats.children) {
        const double p_hat = static_cast<double>(child.count) / n;
        if (p_hat <= 0.0) continue;
        double p_true = 0.0;
        for (size_t k = 0; k < mdp.successors[row].size(); ++k)
          if (mdp.successors[row][k] == child.state) {
            p_true = mdp.trans_probs[row][k];
            break;
          }
        if (p_true <= 0.0) {
          kl = kInf;
          break;
        }
        kl += p_hat * std::log(p_hat / p_true);
      }
      if (n * std::max(kl, 0.0) > event_thr.transition(n) + kEventTol)
        ++acc.events.transition_violations;

      const State next = h < H ? traj.steps[h].state : traj.terminal_state;
      const StateNode* child = nullptr;
      for (const auto& c : stats.children)
        if (c.state == next) {
          child = c.node.get();
          break;
        }
      node = child;
    }

    // Count event, checked where the pseudo-counts changed (elsewhere both
    // sides are unchanged and the inequality already held).
    for (const auto& [hidx, idx] : touched) {
      if (static_cast<double>(acc.counts[hidx][idx]) <
          acc.nbar[hidx][idx] / 2.0 - beta_cnt - kEventTol)
        ++acc.events.count_violations;
    }
  }
}

}  // namespace

EventReport check_event_E(const TabularMdp& mdp, State root_state, const GapeConfig& cfg,
                          const RunDiagnostics& diagnostics,
                          const ThresholdSpec* judge_thresholds) {
  ReplayAccumulator acc;
  replay_run(mdp, root_state, cfg, diagnostics, judge_thresholds, acc);
  return acc.events;
}

EventReport check_event_E(const TabularMdp& mdp, State root_state, const GapeConfig& cfg,
                          const RunRecord& record, const ThresholdSpec* judge_thresholds) {
  if (!record.diagnostics)
    throw std::logic_error("check_event_E: run was executed without diagnostics");
  return check_event_E(mdp, root_state, cfg, *record.diagnostics, judge_thresholds);
}

PseudoCountReport track_pseudo_counts(const TabularMdp& mdp, State root_state,
                                      const GapeConfig& cfg, const RunDiagnostics& diagnostics,
                                      const ExactValues& values) {
  ReplayAccumulator acc;
  replay_run(mdp, root_state, cfg, diagnostics, nullptr, acc);

  PseudoCountReport report;
  report.nbar = std::move(acc.nbar);
  const int H = cfg.horizon;
  const int K = mdp.num_actions;
  report.depth_totals.assign(H, 0.0);

  const double delta_min = values.min_root_gap(root_state);
  for (int h = 1; h <= H; ++h) {
    for (State s = 0; s < mdp.num_states; ++s) {
      for (Action a = 0; a < K; ++a) {
        const double nbar = report.nbar[h - 1][s * K + a];
        report.depth_totals[h - 1] += nbar;
        if (nbar <= 0.0) continue;
        double gap = values.gap(h, s, a);
        if (h == 1) gap = std::max({gap, delta_min, cfg.eps});
        if (gap <= 1e-12) continue;
        ++report.pairs_checked;
        const double bound = kTheoremConst *
                             std::pow(std::sqrt(double(mdp.branching) * K), H - h) *
                             std::sqrt(nbar * cfg.thresholds.master(nbar));
        if (nbar * gap > bound + kEventTol)
          report.violations.push_back({h, s, a, nbar, gap, bound});
      }
    }
  }
  return report;
}

PseudoCountReport track_pseudo_counts(const TabularMdp& mdp, State root_state,
                                      const GapeConfig& cfg, const RunRecord& record,
                                      const ExactValues& values) {
  if (!record.diagnostics)
    throw std::logic_error("track_pseudo_counts: run was executed without diagnostics");
  return track_pseudo_counts(mdp, root_state, cfg, *record.diagnostics, values);
}

}  // namespace mcplan
