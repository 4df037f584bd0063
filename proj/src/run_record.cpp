#include "mcplan/run_record.hpp"

#include "mcplan/gape.hpp"

namespace mcplan {

void to_json(nlohmann::json& j, const EpisodeStep& s) {
  j = nlohmann::json::array({s.state, s.action, s.reward});
}

void from_json(const nlohmann::json& j, EpisodeStep& s) {
  s.state = j.at(0).get<State>();
  s.action = j.at(1).get<Action>();
  s.reward = j.at(2).get<double>();
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = {{"steps", t.steps}, {"terminal_state", t.terminal_state}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  j.at("steps").get_to(t.steps);
  j.at("terminal_state").get_to(t.terminal_state);
}

void to_json(nlohmann::json& j, const ThresholdSpec& t) {
  const char* kind = t.kind == ThresholdKind::theoretical  ? "theoretical"
                     : t.kind == ThresholdKind::practical ? "practical"
                                                          : "fixed_budget";
  j = {{"kind", kind},
       {"delta", t.delta},
       {"horizon", t.horizon},
       {"branching", t.branching},
       {"num_actions", t.num_actions}};
  if (t.kind == ThresholdKind::fixed_budget) j["budget_episodes"] = t.budget_episodes;
}

void from_json(const nlohmann::json& j, ThresholdSpec& t) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "theoretical")
    t.kind = ThresholdKind::theoretical;
  else if (kind == "practical")
    t.kind = ThresholdKind::practical;
  else if (kind == "fixed_budget")
    t.kind = ThresholdKind::fixed_budget;
  else
    throw std::invalid_argument("ThresholdSpec: unknown kind " + kind);
  j.at("delta").get_to(t.delta);
  j.at("horizon").get_to(t.horizon);
  j.at("branching").get_to(t.branching);
  j.at("num_actions").get_to(t.num_actions);
  t.budget_episodes = j.value("budget_episodes", 0.0);
}

void to_json(nlohmann::json& j, const GapeConfig& c) {
  j = {{"eps", c.eps},
       {"delta", c.delta},
       {"gamma", c.gamma},
       {"horizon", c.horizon},
       {"thresholds", c.thresholds},
       {"max_episodes", c.max_episodes},
       {"record_diagnostics", c.record_diagnostics}};
}

void from_json(const nlohmann::json& j, GapeConfig& c) {
  j.at("eps").get_to(c.eps);
  j.at("delta").get_to(c.delta);
  j.at("gamma").get_to(c.gamma);
  j.at("horizon").get_to(c.horizon);
  j.at("thresholds").get_to(c.thresholds);
  c.max_episodes = j.value("max_episodes", int64_t{10'000'000});
  c.record_diagnostics = j.value("record_diagnostics", false);
}

void to_json(nlohmann::json& j, const RunRecord& r) {
  j = {{"algorithm", r.algorithm},
       {"recommended_action", r.recommended},
       {"tau", r.tau},
       {"oracle_calls", r.oracle_calls},
       {"stop_reason", r.stop_reason},
       {"seeds", {{"mdp", r.mdp_seed}, {"episodes", r.episode_seed}}},
       {"config", r.config_echo}};
  if (std::isnan(r.simple_regret))
    j["simple_regret"] = nullptr;
  else
    j["simple_regret"] = r.simple_regret;
  if (r.diagnostics) j["diagnostics"] = {{"episodes", r.diagnostics->episodes}};
}

void from_json(const nlohmann::json& j, RunRecord& r) {
  j.at("algorithm").get_to(r.algorithm);
  j.at("recommended_action").get_to(r.recommended);
  j.at("tau").get_to(r.tau);
  j.at("oracle_calls").get_to(r.oracle_calls);
  j.at("stop_reason").get_to(r.stop_reason);
  r.simple_regret = j.at("simple_regret").is_null()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : j.at("simple_regret").get<double>();
  r.mdp_seed = j.at("seeds").at("mdp").get<uint64_t>();
  r.episode_seed = j.at("seeds").at("episodes").get<uint64_t>();
  r.config_echo = j.value("config", nlohmann::json::object());
  if (j.contains("diagnostics")) {
    RunDiagnostics d;
    j.at("diagnostics").at("episodes").get_to(d.episodes);
    r.diagnostics = std::move(d);
  }
}

}  // namespace mcplan
