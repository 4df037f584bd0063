#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcplan/common.hpp"

namespace mcplan {

struct EpisodeStep {
  State state;
  Action action;
  double reward;
  bool operator==(const EpisodeStep&) const = default;
};

/// One planning episode: H (state, action, reward) steps plus the successor
/// sampled by the depth-H call.
struct Trajectory {
  std::vector<EpisodeStep> steps;
  State terminal_state = -1;
  bool operator==(const Trajectory&) const = default;
};

/// Opt-in per-run log: the full episode list, from which every internal
/// quantity of a run (bounds, policies, counts) can be replayed.
struct RunDiagnostics {
  std::vector<Trajectory> episodes;
};

/// Outcome of one planning run. The planner fills the decision fields;
/// the harness adds seeds, regret and the algorithm tag.
struct RunRecord {
  std::string algorithm;
  Action recommended = -1;
  int64_t tau = 0;           // episodes
  int64_t oracle_calls = 0;  // n = H * tau for episodic planners
  std::string stop_reason;   // converged | budget | single_action
  double simple_regret = std::numeric_limits<double>::quiet_NaN();
  uint64_t mdp_seed = 0;
  uint64_t episode_seed = 0;
  nlohmann::json config_echo;
  std::optional<RunDiagnostics> diagnostics;
};

void to_json(nlohmann::json& j, const EpisodeStep& s);
void from_json(const nlohmann::json& j, EpisodeStep& s);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);
void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

}  // namespace mcplan
